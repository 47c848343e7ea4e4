"""Small dense complex linear algebra used by every simulator in the package.

Kets are 1-d ``complex128`` arrays and operators are 2-d ``complex128``
arrays; the two classes below only add validation for density operators and
POVMs. All matrices here are tiny (at most a few hundred rows), so nothing is
sparse and everything is double precision.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

from .errors import DimensionMismatch, InvalidOperator

HERMITIAN_TOL = 1e-12
NUMERIC_TOL = 1e-9
# Born probabilities below this are round-off, not physics.
_PROB_FLOOR = 1e-14


def ket(amps: Sequence[complex], normalize: bool = False) -> np.ndarray:
    v = np.asarray(amps, dtype=np.complex128).reshape(-1)
    if v.size == 0:
        raise ValueError("a ket needs at least one amplitude")
    if normalize:
        n = np.linalg.norm(v)
        if n == 0:
            raise ValueError("cannot normalize the zero vector")
        v = v / n
    return v


def basis(dim: int, index: int) -> np.ndarray:
    v = np.zeros(dim, dtype=np.complex128)
    v[index] = 1.0
    return v


def projector(v: np.ndarray) -> np.ndarray:
    return np.outer(v, v.conj())


def is_normalized(v: np.ndarray, tol: float = NUMERIC_TOL) -> bool:
    return abs(np.linalg.norm(v) - 1.0) <= tol


def is_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    a = np.asarray(a)
    return a.ndim == 2 and a.shape[0] == a.shape[1] and bool(np.all(np.abs(a - a.conj().T) <= tol))


def is_unitary(u: np.ndarray, tol: float = NUMERIC_TOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.all(np.abs(u.conj().T @ u - np.eye(u.shape[0])) <= tol))


def phase_gate(phi: float) -> np.ndarray:
    """The single-qubit phase shift ``diag(1, exp(i*phi))``."""
    if not np.isfinite(phi):
        raise ValueError("phase must be finite")
    return np.diag([1.0, np.exp(1j * phi)]).astype(np.complex128)


PAULI_Z = phase_gate(np.pi).real.astype(np.complex128)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def trace_norm(a: np.ndarray) -> float:
    """Sum of absolute eigenvalues of a Hermitian matrix."""
    a = np.asarray(a, dtype=np.complex128)
    if not is_hermitian(a, tol=1e-10):
        raise InvalidOperator("trace_norm expects a Hermitian matrix")
    return float(np.sum(np.abs(np.linalg.eigvalsh(a))))


def max_eig_sym(m: np.ndarray) -> tuple[float, np.ndarray]:
    """Largest eigenvalue and a unit eigenvector of a real symmetric matrix.

    The eigenvector's sign is fixed so that its largest-magnitude component is
    positive, which makes the output deterministic.
    """
    m = np.asarray(m)
    if np.iscomplexobj(m):
        if np.max(np.abs(m.imag), initial=0.0) > HERMITIAN_TOL:
            raise InvalidOperator("max_eig_sym expects a real matrix")
        m = m.real
    m = m.astype(np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or not np.allclose(m, m.T, atol=HERMITIAN_TOL, rtol=0):
        raise InvalidOperator("max_eig_sym expects a symmetric matrix")
    w, v = np.linalg.eigh(m)
    vec = v[:, -1]
    if vec[np.argmax(np.abs(vec))] < 0:
        vec = -vec
    return float(w[-1]), vec.astype(np.complex128)


@dataclass(frozen=True)
class DensityOperator:
    """A validated density matrix: Hermitian, unit trace, PSD."""

    mat: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mat, dtype=np.complex128)
        object.__setattr__(self, "mat", m)
        if not is_hermitian(m):
            raise InvalidOperator("density operator is not Hermitian")
        tr = np.trace(m).real
        if abs(tr - 1.0) > NUMERIC_TOL:
            raise InvalidOperator(f"density operator has trace {tr!r}")
        if np.linalg.eigvalsh(m)[0] < -NUMERIC_TOL:
            raise InvalidOperator("density operator has a negative eigenvalue")

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @classmethod
    def from_ket(cls, v: np.ndarray) -> "DensityOperator":
        return cls(projector(ket(v, normalize=True)))


@dataclass(frozen=True)
class Povm:
    """Labelled POVM elements.

    ``support`` is the projector onto the subspace the elements must resolve
    (identity by default). Pass ``validate=False`` to build a deliberately
    malformed measurement, e.g. for fault injection; use :meth:`defects` to
    inspect it.
    """

    elements: tuple[np.ndarray, ...]
    tags: tuple[Hashable, ...]
    support: np.ndarray | None = None
    validate: bool = field(default=True, compare=False)

    def __post_init__(self):
        els = tuple(np.asarray(e, dtype=np.complex128) for e in self.elements)
        object.__setattr__(self, "elements", els)
        object.__setattr__(self, "tags", tuple(self.tags))
        if len(els) != len(self.tags):
            raise ValueError("one tag per POVM element")
        if not els:
            raise ValueError("empty POVM")
        dim = els[0].shape[0]
        if any(e.shape != (dim, dim) for e in els):
            raise DimensionMismatch("POVM elements must share one square shape")
        object.__setattr__(self, "_stack", np.stack(els))
        if self.validate:
            d = self.defects()
            if not d["hermitian"]:
                raise InvalidOperator("POVM element is not Hermitian")
            if d["min_eigenvalue"] < -NUMERIC_TOL:
                raise InvalidOperator(f"POVM element not PSD (min eig {d['min_eigenvalue']:.3g})")
            if d["completeness_error"] > NUMERIC_TOL:
                raise InvalidOperator(f"POVM incomplete (error {d['completeness_error']:.3g})")

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]

    def element(self, tag: Hashable) -> np.ndarray:
        return self.elements[self.tags.index(tag)]

    def defects(self) -> dict:
        """Structural diagnostics: Hermiticity, smallest eigenvalue, and the
        max entrywise deviation of the element sum from the support identity."""
        target = np.eye(self.dim) if self.support is None else self.support
        total = sum(self.elements)
        return {
            "hermitian": all(is_hermitian(e) for e in self.elements),
            "min_eigenvalue": float(min(np.linalg.eigvalsh((e + e.conj().T) / 2)[0] for e in self.elements)),
            "completeness_error": float(np.max(np.abs(total - target))),
        }

    def probabilities(self, state: np.ndarray) -> np.ndarray:
        state = np.asarray(state, dtype=np.complex128)
        if state.shape != (self.dim,):
            raise DimensionMismatch(f"state has dim {state.shape}, POVM has dim {self.dim}")
        return (self._stack @ state @ state.conj()).real


def measure_povm(state: np.ndarray, povm: Povm, rng: np.random.Generator) -> Hashable:
    """Sample one outcome tag with Born probabilities ``<state|E_k|state>``."""
    p = povm.probabilities(state)
    total = p.sum()
    if abs(total - 1.0) > NUMERIC_TOL:
        raise InvalidOperator(f"outcome probabilities sum to {total!r}; state unnormalized or POVM malformed")
    probs = [pk if pk >= _PROB_FLOOR else 0.0 for pk in p.tolist()]
    u = rng.random() * sum(probs)
    acc = 0.0
    for tag, pk in zip(povm.tags, probs):
        acc += pk
        if u < acc:
            return tag
    return next(tag for tag, pk in zip(reversed(povm.tags), reversed(probs)) if pk > 0)
