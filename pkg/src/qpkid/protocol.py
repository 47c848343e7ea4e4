"""Honest parties: key generation, public-key copies, the kernel, identification.

Alice's private key is ``s`` integers drawn from ``{1, ..., 2r+1}``; qubit ``j``
of every public-key copy is ``(|0> + exp(i*phi_{x_j})|1>)/sqrt(2)`` with
``phi_x = 2*pi*x/(2r+1)``. Each kernel iteration consumes one public-key qubit,
and both the number of copies and the number of Alice's runs are capped at
``r`` per key.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConsumedCopy, CopyLimitExceeded, UsageExhausted
from .linalg import PAULI_Z, Povm, measure_povm, phase_gate

SQRT_HALF = 1.0 / np.sqrt(2.0)

# Alice's measurement basis {|0> + |1>, |0> - |1>}; "+" reports 0.
ALICE_POVM = Povm(
    elements=(
        np.full((2, 2), 0.5, dtype=np.complex128),
        np.array([[0.5, -0.5], [-0.5, 0.5]], dtype=np.complex128),
    ),
    tags=(0, 1),
)


@dataclass(frozen=True)
class Params:
    s: int
    r: int

    def __post_init__(self):
        if int(self.s) != self.s or self.s < 1:
            raise ValueError(f"security parameter s must be a positive integer, got {self.s!r}")
        if int(self.r) != self.r or self.r < 1:
            raise ValueError(f"reusability parameter r must be a positive integer, got {self.r!r}")

    @property
    def modulus(self) -> int:
        return 2 * self.r + 1


def phase_of(x: int, r: int) -> float:
    """Private phase ``2*pi*x/(2r+1)`` for key value ``x`` in ``[1, 2r+1]``."""
    if not 1 <= x <= 2 * r + 1:
        raise ValueError(f"key value {x} outside [1, {2 * r + 1}]")
    return 2.0 * np.pi * x / (2 * r + 1)


def key_qubit(x: int, r: int) -> np.ndarray:
    return np.array([SQRT_HALF, SQRT_HALF * np.exp(1j * phase_of(x, r))], dtype=np.complex128)


@dataclass(frozen=True)
class PrivateKey:
    x: tuple[int, ...]
    r: int

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(int(v) for v in self.x))
        bad = [v for v in self.x if not 1 <= v <= 2 * self.r + 1]
        if bad:
            raise ValueError(f"key values {bad} outside [1, {2 * self.r + 1}]")

    def phases(self) -> np.ndarray:
        return 2.0 * np.pi * np.asarray(self.x) / (2 * self.r + 1)

    def fingerprint(self) -> str:
        data = json.dumps({"r": self.r, "x": list(self.x)}, sort_keys=True).encode()
        return hashlib.sha256(data).hexdigest()[:16]


@dataclass
class PublicKeyCopy:
    """One copy of the public key. Qubits are consumed one per kernel run."""

    qubits: tuple[np.ndarray, ...]
    copy_id: int
    consumed: list[bool] = field(default_factory=list)

    def __post_init__(self):
        if not self.consumed:
            self.consumed = [False] * len(self.qubits)

    @property
    def s(self) -> int:
        return len(self.qubits)

    @property
    def fresh(self) -> bool:
        return not any(self.consumed)

    def take(self, j: int) -> np.ndarray:
        """Hand out qubit ``j`` (0-based); a second take of the same qubit fails."""
        if self.consumed[j]:
            raise ConsumedCopy(f"qubit {j} of public-key copy {self.copy_id} already consumed")
        self.consumed[j] = True
        return self.qubits[j]


@dataclass
class KeyIssuer:
    """Alice: holds the private key and enforces the two usage caps."""

    private: PrivateKey
    params: Params
    copies_issued: int = 0
    alice_runs_used: int = 0

    @property
    def runs_remaining(self) -> int:
        return self.params.r - self.alice_runs_used

    def begin_run(self) -> None:
        """Count one protocol execution by Alice, refusing past ``r``."""
        if self.alice_runs_used >= self.params.r:
            raise UsageExhausted(
                f"Alice already ran the protocol {self.params.r} times with this key; refresh keys"
            )
        self.alice_runs_used += 1

    def respond(self, j: int, qubit: np.ndarray, rng: np.random.Generator) -> int:
        """Alice's half of the kernel: undo her phase, measure in the +/- basis."""
        phi = phase_of(self.private.x[j], self.params.r)
        return int(measure_povm(phase_gate(-phi) @ qubit, ALICE_POVM, rng))


def keygen(params: Params, rng: np.random.Generator) -> KeyIssuer:
    x = rng.integers(1, 2 * params.r + 2, size=params.s)
    return KeyIssuer(PrivateKey(tuple(int(v) for v in x), params.r), params)


def issue_public_key(issuer: KeyIssuer) -> PublicKeyCopy:
    if issuer.copies_issued >= issuer.params.r:
        raise CopyLimitExceeded(f"all {issuer.params.r} public-key copies already issued")
    r = issuer.params.r
    copy = PublicKeyCopy(tuple(key_qubit(x, r) for x in issuer.private.x), copy_id=issuer.copies_issued)
    issuer.copies_issued += 1
    return copy


def bob_challenge(copy: PublicKeyCopy, j: int, rng: np.random.Generator) -> tuple[int, np.ndarray]:
    """Bob hides a fair bit ``b`` in qubit ``j`` by applying ``Z**b``."""
    b = int(rng.integers(0, 2))
    q = copy.take(j)
    return b, (PAULI_Z @ q if b else q.copy())


@dataclass(frozen=True)
class IterationRecord:
    j: int
    b: int
    b_prime: int

    @property
    def passed(self) -> bool:
        return self.b == self.b_prime


@dataclass
class Transcript:
    r: int
    s: int
    copy_id: int
    records: list[IterationRecord] = field(default_factory=list)
    seed: int | None = None
    prover: str = "alice"

    @property
    def accepted(self) -> bool:
        return len(self.records) == self.s and all(rec.passed for rec in self.records)

    @property
    def verdict(self) -> str:
        return "accept" if self.accepted else "reject"

    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "s": self.s,
            "copy_id": self.copy_id,
            "prover": self.prover,
            "seed": self.seed,
            "records": [{"j": rec.j, "b": rec.b, "b_prime": rec.b_prime, "pass": rec.passed} for rec in self.records],
            "verdict": self.verdict,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Transcript":
        recs = [IterationRecord(int(e["j"]), int(e["b"]), int(e["b_prime"])) for e in d["records"]]
        t = cls(int(d["r"]), int(d["s"]), int(d["copy_id"]), recs, d.get("seed"), d.get("prover", "alice"))
        if t.verdict != d["verdict"]:
            raise ValueError("verdict inconsistent with iteration records")
        return t


def kernel_run(
    issuer: KeyIssuer, copy: PublicKeyCopy, j: int, rng: np.random.Generator
) -> IterationRecord:
    """One honest kernel iteration on qubit ``j`` (0-based) of Bob's copy."""
    b, challenge = bob_challenge(copy, j, rng)
    return IterationRecord(j, b, issuer.respond(j, challenge, rng))


def identify(
    issuer: KeyIssuer, verifier_copy: PublicKeyCopy, rng: np.random.Generator, seed: int | None = None
) -> Transcript:
    """A full honest identification: Alice proves herself to Bob."""
    if not verifier_copy.fresh:
        raise ConsumedCopy(f"public-key copy {verifier_copy.copy_id} is partially consumed")
    if verifier_copy.s != issuer.params.s:
        raise ValueError("public-key copy length does not match the key")
    issuer.begin_run()
    tr = Transcript(issuer.params.r, issuer.params.s, verifier_copy.copy_id, seed=seed)
    for j in range(issuer.params.s):
        tr.records.append(kernel_run(issuer, verifier_copy, j, rng))
    return tr


def private_key_dict(issuer: KeyIssuer, seed: int | None = None) -> dict:
    return {
        "kind": "private-key",
        "r": issuer.params.r,
        "s": issuer.params.s,
        "x": list(issuer.private.x),
        "fingerprint": issuer.private.fingerprint(),
        "seed": seed,
    }


def public_key_dict(issuer: KeyIssuer, seed: int | None = None) -> dict:
    """Descriptor of the public key: parameters and copy budget, never ``x``."""
    return {
        "kind": "public-key",
        "r": issuer.params.r,
        "s": issuer.params.s,
        "copy_budget": issuer.params.r,
        "copies_issued": issuer.copies_issued,
        "fingerprint": issuer.private.fingerprint(),
        "seed": seed,
    }


def issuer_from_dict(d: dict) -> KeyIssuer:
    if d.get("kind") != "private-key":
        raise ValueError("not a private-key export")
    params = Params(s=int(d["s"]), r=int(d["r"]))
    key = PrivateKey(tuple(d["x"]), params.r)
    if len(key.x) != params.s:
        raise ValueError("key length does not match s")
    return KeyIssuer(key, params)
