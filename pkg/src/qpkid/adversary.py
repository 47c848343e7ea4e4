"""Eve: black-box accounting, attack strategies, and impersonation.

Everything lives in the reduced space ``span{|Xi_j>} (x) S`` of dimension
``2(t+1)``, where ``|Xi_j>`` (j = 0..t) is the orthonormal basis that absorbs
how Eve used her ``t`` phase black boxes, and ``S`` is the qubit Bob sends.
Basis index ``2*j + s`` stands for ``|Xi_j>|s>``. Under a black-box phase
``phi`` Eve's reference state is ``sum_j a_j exp(i*j*phi) |Xi_j>``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Mapping

import numpy as np

from .errors import AttemptsExhausted
from .linalg import Povm, basis, is_normalized, measure_povm, projector
from .protocol import KeyIssuer, PublicKeyCopy, Transcript, IterationRecord, bob_challenge, issue_public_key, phase_of

THETA_0 = "theta=0"
THETA_PI = "theta=pi"


def minimal_r(t: int) -> int:
    """Smallest reusability parameter for which Eve can hold ``t`` boxes (``t <= 2r-1``)."""
    return max(1, (t + 2) // 2)


@dataclass
class BlackBoxLedger:
    """Per-sub-key black-box count and remaining impersonation attempts.

    ``t`` is the nominal count ``r + t_prime`` assumed once Eve has extracted
    one box per Alice run; ``held`` is what she holds right now.
    """

    r: int
    t_prime: int = 0
    extracted: int = 0
    attempts_remaining: int = field(init=False)

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("r must be positive")
        if not 0 <= self.t_prime <= self.r - 1:
            # at least one public-key copy must remain for Bob
            raise ValueError(f"t_prime must lie in [0, {self.r - 1}] so that t = r + t_prime <= 2r - 1")
        if not 0 <= self.extracted <= self.r:
            raise ValueError("extracted must lie in [0, r]")
        self.attempts_remaining = self.r - self.t_prime

    @property
    def t(self) -> int:
        return self.r + self.t_prime

    @property
    def held(self) -> int:
        return self.extracted + self.t_prime

    @classmethod
    def full(cls, r: int, t_prime: int = 0) -> "BlackBoxLedger":
        """Ledger after all ``r`` extractions, the case the security analysis assumes."""
        return cls(r, t_prime, extracted=r)

    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "t_prime": self.t_prime,
            "t": self.t,
            "extracted": self.extracted,
            "held": self.held,
            "attempts_remaining": self.attempts_remaining,
        }


def extract_black_boxes(issuer: KeyIssuer, ledger: BlackBoxLedger) -> BlackBoxLedger:
    """Eve acts as a dishonest verifier for one of Alice's runs.

    Alice's phase correction on each of the ``s`` qubits is one use of the
    phase gate, so Eve gains one black box per sub-key.
    """
    issuer.begin_run()
    ledger.extracted += 1
    return ledger


def prepare_adversary(issuer: KeyIssuer, t_prime: int = 0) -> BlackBoxLedger:
    """Take ``t_prime`` legitimate public-key copies and extract all ``r`` runs."""
    ledger = BlackBoxLedger(issuer.params.r, t_prime)
    for _ in range(t_prime):
        issue_public_key(issuer)
    while issuer.runs_remaining > 0:
        extract_black_boxes(issuer, ledger)
    return ledger


@dataclass(frozen=True)
class EveState:
    """Coefficients of Eve's reference state over ``|Xi_0>..|Xi_t>``."""

    t: int
    a: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=np.complex128).reshape(-1)
        object.__setattr__(self, "a", a)
        if self.t < 0 or a.size != self.t + 1:
            raise ValueError(f"need t+1 = {self.t + 1} coefficients, got {a.size}")
        if not is_normalized(a):
            raise ValueError("EveState coefficients must have unit norm")

    @classmethod
    def from_coefficients(cls, a) -> "EveState":
        a = np.asarray(a, dtype=np.complex128)
        return cls(a.size - 1, a / np.linalg.norm(a))

    def reference(self, phi: float) -> np.ndarray:
        """Eve's register after ``t`` uses of the phase black box."""
        return self.a * np.exp(1j * phi * np.arange(self.t + 1))


def m_matrix(t: int) -> np.ndarray:
    """Path-graph adjacency on ``t+1`` vertices (the ``|Xi_j>`` hopping operator)."""
    if t < 1:
        raise ValueError("t must be >= 1")
    return np.eye(t + 1, k=1) + np.eye(t + 1, k=-1)


def optimal_eve_state(t: int) -> EveState:
    if t < 1:
        raise ValueError("t must be >= 1")
    a = np.sin(np.arange(1, t + 2) * np.pi / (t + 2))
    return EveState(t, a / np.linalg.norm(a))


def closed_form_optimum(t: int) -> float:
    """Best single-iteration guessing probability with ``t`` black boxes."""
    return 0.5 + 0.5 * np.cos(np.pi / (t + 2))


def eve_success_prob_analytic(state: EveState) -> float:
    """``1/2 + (1/4) a^dagger M_t a`` for Eve's reduced state."""
    if state.t == 0:
        return 0.5
    q = np.vdot(state.a, m_matrix(state.t) @ state.a)
    if abs(q.imag) > 1e-12:
        raise ArithmeticError("non-real expectation of a symmetric matrix")
    return 0.5 + 0.25 * q.real


def s_qubit(phi: float, b: int) -> np.ndarray:
    return np.array([1.0, (-1) ** b * np.exp(1j * phi)], dtype=np.complex128) / np.sqrt(2.0)


def joint_state(state: EveState, phi: float, b: int) -> np.ndarray:
    """Eve's reference register together with Bob's challenge qubit."""
    return np.kron(state.reference(phi), s_qubit(phi, b))


def _xi(t: int, j: int, s: int) -> np.ndarray:
    return basis(2 * (t + 1), 2 * j + s)


def build_povm(t: int) -> Povm:
    """Optimal two-outcome measurement guessing Bob's hidden phase in ``{0, pi}``.

    Weight ``w`` in ``2..t+1`` pairs ``|Xi_{w-1},0>`` with ``|Xi_{w-2},1>``;
    the unpaired edges ``|Xi_0,0>`` and ``|Xi_t,1>`` carry no information and
    are assigned to ``theta=0`` and ``theta=pi`` respectively.
    """
    if t < 1:
        raise ValueError("t must be >= 1")
    e0 = projector(_xi(t, 0, 0))
    epi = projector(_xi(t, t, 1))
    for w in range(2, t + 2):
        plus = (_xi(t, w - 1, 0) + _xi(t, w - 2, 1)) / np.sqrt(2.0)
        minus = (_xi(t, w - 1, 0) - _xi(t, w - 2, 1)) / np.sqrt(2.0)
        e0 = e0 + projector(plus)
        epi = epi + projector(minus)
    return Povm((e0, epi), (THETA_0, THETA_PI))


def weight_projectors(t: int) -> list[np.ndarray]:
    """``P_w`` for ``w = 1..t+2`` in the reduced basis; ``|Xi_j,s>`` has weight ``j+1+s``."""
    dim = 2 * (t + 1)
    out = []
    for w in range(1, t + 3):
        p = np.zeros((dim, dim), dtype=np.complex128)
        for j in range(t + 1):
            for s in (0, 1):
                if j + 1 + s == w:
                    p[2 * j + s, 2 * j + s] = 1.0
        out.append(p)
    return out


def fourier_povm(t: int) -> Povm:
    """Phase estimation on the reference register followed by a corrected
    +/- measurement of Bob's qubit. Tags are ``(y, guess)``."""
    n = t + 1
    j = np.arange(n)
    elements, tags = [], []
    for y in range(n):
        f = np.exp(2j * np.pi * y * j / n) / np.sqrt(n)
        est = 2 * np.pi * y / n
        for guess, sign in ((0, 1.0), (1, -1.0)):
            pm = np.array([1.0, sign * np.exp(1j * est)]) / np.sqrt(2.0)
            elements.append(np.kron(projector(f), projector(pm)))
            tags.append((y, guess))
    return Povm(tuple(elements), tuple(tags))


@dataclass(frozen=True)
class AttackStrategy:
    """A per-iteration attack: reference state, measurement, and outcome-to-guess map."""

    kind: str
    t: int
    state: EveState
    povm: Povm
    guesses: Mapping[Hashable, int]

    def __post_init__(self):
        if self.kind not in ("random_guess", "phase_estimation", "optimal_individual"):
            raise ValueError(f"unknown strategy kind {self.kind!r}")
        if self.state.t != self.t or self.povm.dim != 2 * (self.t + 1):
            raise ValueError("state, POVM and t disagree")
        if set(self.guesses) != set(self.povm.tags) or not set(self.guesses.values()) <= {0, 1}:
            raise ValueError("every POVM outcome needs a guess bit")

    def success_probability(self, phi: float, b: int) -> float:
        """Exact probability that the guess equals ``b`` at private phase ``phi``."""
        p = self.povm.probabilities(joint_state(self.state, phi, b))
        return float(sum(pk for pk, tag in zip(p, self.povm.tags) if self.guesses[tag] == b))

    def success_table(self, r: int) -> np.ndarray:
        """``table[x-1, b]`` = success probability for key value ``x`` and bit ``b``."""
        return np.array(
            [[self.success_probability(phase_of(x, r), b) for b in (0, 1)] for x in range(1, 2 * r + 2)]
        )

    def mean_success(self, r: int) -> float:
        """Per-iteration success averaged over uniform ``x`` and ``b``."""
        return float(self.success_table(r).mean())

    def respond(self, phi: float, challenge: np.ndarray, rng: np.random.Generator) -> int:
        """Eve's answer to one challenge qubit, given her black boxes for ``phi``."""
        joint = np.kron(self.state.reference(phi), challenge)
        return self.guesses[measure_povm(joint, self.povm, rng)]

    def to_dict(self) -> dict:
        return {"kind": self.kind, "t": self.t, "coefficients": [[z.real, z.imag] for z in self.state.a]}


def optimal_strategy(t: int) -> AttackStrategy:
    return AttackStrategy("optimal_individual", t, optimal_eve_state(t), build_povm(t), {THETA_0: 0, THETA_PI: 1})


def phase_estimation_strategy(t: int) -> AttackStrategy:
    if t < 1:
        raise ValueError("t must be >= 1")
    state = EveState(t, np.full(t + 1, 1.0 / np.sqrt(t + 1)))
    povm = fourier_povm(t)
    return AttackStrategy("phase_estimation", t, state, povm, {tag: tag[1] for tag in povm.tags})


def random_guess_strategy() -> AttackStrategy:
    half = 0.5 * np.eye(2, dtype=np.complex128)
    return AttackStrategy("random_guess", 0, EveState(0, [1.0]), Povm((half, half), (0, 1)), {0: 0, 1: 1})


STRATEGIES = {
    "optimal": optimal_strategy,
    "phase-est": phase_estimation_strategy,
    "random": lambda t: random_guess_strategy(),
}


def make_strategy(name: str, t: int) -> AttackStrategy:
    try:
        return STRATEGIES[name](t)
    except KeyError:
        raise ValueError(f"unknown strategy {name!r}; choose from {sorted(STRATEGIES)}") from None


def attack_iteration(strategy: AttackStrategy, x: int, r: int, rng: np.random.Generator) -> tuple[int, int]:
    """One simulated kernel against Eve: returns ``(b, guess)``; success is ``guess == b``."""
    phi = phase_of(x, r)
    b = int(rng.integers(0, 2))
    return b, strategy.respond(phi, s_qubit(phi, b), rng)


def impersonate(
    strategy: AttackStrategy,
    ledger: BlackBoxLedger,
    issuer: KeyIssuer,
    bob_copy: PublicKeyCopy,
    rng: np.random.Generator,
    seed: int | None = None,
) -> Transcript:
    """Eve poses as Alice for one full run against Bob's fresh copy.

    ``issuer`` is consulted only for the private phases, which stand in for
    the black boxes Eve already holds.
    """
    if ledger.attempts_remaining <= 0:
        raise AttemptsExhausted(f"Eve has used all {ledger.r - ledger.t_prime} attempts")
    if strategy.t > ledger.held:
        raise ValueError(f"strategy needs {strategy.t} black boxes per sub-key, Eve holds {ledger.held}")
    if not bob_copy.fresh:
        raise ValueError("Bob needs a fresh public-key copy")
    ledger.attempts_remaining -= 1
    r = issuer.params.r
    tr = Transcript(r, issuer.params.s, bob_copy.copy_id, seed=seed, prover="eve")
    for j, x in enumerate(issuer.private.x):
        b, challenge = bob_challenge(bob_copy, j, rng)
        tr.records.append(IterationRecord(j, b, strategy.respond(phase_of(x, r), challenge, rng)))
    return tr
