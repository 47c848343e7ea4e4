"""Analytic break-probability bounds and the security parameter they imply.

With ``c = pi^2/4 - pi^4/48``, one kernel iteration using ``t`` black boxes
is won with probability at most ``1 - c/(t+2)^2``. Union-bounding over Eve's
``r - t'`` attempts gives ``P_break <= r (1 - c/(2r+1)^2)^s``. All logarithms
are natural.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field


def c_const() -> float:
    return math.pi**2 / 4 - math.pi**4 / 48


def _check_t(t: int) -> None:
    if t < 1:
        raise ValueError("t must be >= 1")


def per_iteration_bound(t: int) -> float:
    _check_t(t)
    return 1.0 - c_const() / (t + 2) ** 2


def attempt_bound(ell: int, t: int, s: int) -> float:
    """Bound on winning attempt ``ell`` with ``t`` boxes: ``(1 - c/(t+ell+1)^2)^s``.

    Eve can simulate earlier attempts with one extra public-key qubit each, so
    attempt ``ell`` is no stronger than a first attempt with ``t + ell - 1`` boxes.
    """
    if ell < 1:
        raise ValueError("ell must be >= 1")
    _check_t(t)
    if s < 0:
        raise ValueError("s must be >= 0")
    return (1.0 - c_const() / (t + ell + 1) ** 2) ** s


def _raw_break(r: int, s: int) -> float:
    return r * (1.0 - c_const() / (2 * r + 1) ** 2) ** s


def break_probability_bound(r: int, s: int) -> float:
    if r < 1 or s < 1:
        raise ValueError("r and s must be >= 1")
    return min(1.0, _raw_break(r, s))


def required_s(r: int, epsilon: float, mode: str = "theorem") -> int:
    """Smallest ``s`` certified secure with error ``epsilon``.

    ``mode="theorem"`` is the closed-form sufficient condition
    ``s > (2r+1)^2 ln(r/eps)/c``; ``mode="exact"`` solves
    ``r (1 - c/(2r+1)^2)^s < eps`` directly and is never larger.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    c = c_const()
    if mode == "theorem":
        return math.floor((2 * r + 1) ** 2 * math.log(r / epsilon) / c) + 1
    if mode == "exact":
        s = max(1, math.floor(math.log(epsilon / r) / math.log1p(-c / (2 * r + 1) ** 2)))
        # the float threshold can land one off in either direction
        while s > 1 and _raw_break(r, s - 1) < epsilon:
            s -= 1
        while _raw_break(r, s) >= epsilon:
            s += 1
        return s
    raise ValueError(f"unknown mode {mode!r}")


@dataclass
class BoundReport:
    r: int
    s: int
    t_prime: int = 0
    epsilon: float | None = None
    c: float = field(default_factory=c_const)
    t: int = field(init=False)
    per_iteration_bound: float = field(init=False)
    per_attempt_bounds: list[float] = field(init=False)
    union_bound: float = field(init=False)
    p_break_bound: float = field(init=False)
    clamped: bool = field(init=False)
    required_s: int | None = field(init=False, default=None)
    required_s_exact: int | None = field(init=False, default=None)
    note: str = "union bound assumes Eve's reference state does not degrade between attempts; likely not tight"

    def __post_init__(self):
        if not 0 <= self.t_prime <= self.r - 1:
            raise ValueError(f"t_prime must lie in [0, {self.r - 1}]")
        self.t = self.r + self.t_prime
        self.per_iteration_bound = per_iteration_bound(self.t)
        self.per_attempt_bounds = [attempt_bound(ell, self.t, self.s) for ell in range(1, self.r - self.t_prime + 1)]
        self.union_bound = min(1.0, sum(self.per_attempt_bounds))
        raw = _raw_break(self.r, self.s)
        self.clamped = raw > 1.0
        self.p_break_bound = min(1.0, raw)
        if self.epsilon is not None:
            self.required_s = required_s(self.r, self.epsilon)
            self.required_s_exact = required_s(self.r, self.epsilon, mode="exact")

    def to_dict(self) -> dict:
        return asdict(self)
