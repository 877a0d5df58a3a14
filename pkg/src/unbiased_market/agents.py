"""Seller utility models and the choice among Option A, Option B and opting out.

Option A pays ``x`` only if a buyer accesses the seller's data (probability
``q``). Option B pays ``y`` whether or not the data is accessed. A seller
bears their privacy cost ``c`` exactly when the data is accessed, so their
wealth change is ``payment - c`` in that branch.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .errors import DomainError

DEFAULT_C_MAX = 1000.0


class Choice(enum.Enum):
    OPTION_A = "A"
    OPTION_B = "B"
    OPT_OUT = "OptOut"

    @property
    def code(self) -> int:
        return _CODES[self]

    @classmethod
    def from_code(cls, code: int) -> "Choice":
        return _FROM_CODE[int(code)]


# kept in sync with the kernel constants
_CODES = {Choice.OPTION_A: 0, Choice.OPTION_B: 1, Choice.OPT_OUT: 2}
_FROM_CODE = {v: k for k, v in _CODES.items()}

# B beats A beats opting out when expected utilities tie
TIE_ORDER = (Choice.OPTION_B, Choice.OPTION_A, Choice.OPT_OUT)


@dataclass(frozen=True)
class UtilitySpec:
    """Risk attitude of a seller.

    ``family="cara"`` gives ``u(w) = (1 - exp(-a*w)) / a``: risk-averse for
    ``a > 0``, risk-seeking for ``a < 0`` and linear in the ``a -> 0`` limit.
    ``family="linear"`` is the risk-neutral ``u(w) = w`` and requires ``a == 0``.
    """

    family: str = "cara"
    a: float = 1.0

    def __post_init__(self):
        if self.family not in ("cara", "linear"):
            raise DomainError(f"unknown utility family {self.family!r}")
        if not math.isfinite(self.a):
            raise DomainError("risk coefficient must be finite")
        if self.family == "linear" and self.a != 0:
            raise DomainError("linear utility has no risk coefficient; use a=0")

    @classmethod
    def linear(cls) -> "UtilitySpec":
        return cls("linear", 0.0)

    @property
    def coefficient(self) -> float:
        """Absolute risk aversion; 0 for risk-neutral sellers."""
        return 0.0 if self.family == "linear" else float(self.a)

    def __call__(self, w: float) -> float:
        return utility_value(self, w)


@dataclass(frozen=True)
class SellerProfile:
    cost: float
    utility: UtilitySpec = field(default_factory=UtilitySpec)
    c_max: float = DEFAULT_C_MAX

    def __post_init__(self):
        if not math.isfinite(self.cost) or self.cost < 0:
            raise DomainError(f"privacy cost must be finite and >= 0, got {self.cost}")
        if self.cost > self.c_max:
            raise DomainError(f"privacy cost {self.cost} exceeds c_max={self.c_max}")


@dataclass(frozen=True)
class OptionTriple:
    """One elicitation question: access probability and the two payments."""

    q: float
    x: float
    y: float

    def __post_init__(self):
        for name in ("q", "x", "y"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        if not 0.0 <= self.q <= 1.0:
            raise DomainError(f"q must lie in [0, 1], got {self.q}")
        if self.x < 0 or self.y < 0:
            raise DomainError("payments must be non-negative")

    @property
    def admissible(self) -> bool:
        """True when Option B is cheaper in expectation than Option A (y < q*x)."""
        return self.is_admissible()

    def is_admissible(self, r: int = 1) -> bool:
        """Admissibility when Option A would pay x on each of r requests: y < q*r*x."""
        return self.y < self.q * r * self.x


def utility_value(spec: UtilitySpec, w: float) -> float:
    if not math.isfinite(w):
        raise DomainError(f"wealth change must be finite, got {w}")
    a = spec.coefficient
    if a == 0.0:
        return float(w)
    try:
        return -math.expm1(-a * w) / a
    except OverflowError:
        # exp(-a*w) overflows only on the downside of u
        return -math.inf


def _mix(q: float, hit: float, miss: float) -> float:
    if q == 0.0:
        return miss
    if q == 1.0:
        return hit
    return q * hit + (1.0 - q) * miss


def _expected_utilities(profile: SellerProfile, t: OptionTriple, r: int = 1) -> dict:
    u = profile.utility
    c = profile.cost
    return {
        Choice.OPTION_A: _mix(t.q, u(r * (t.x - c)), u(0.0)),
        Choice.OPTION_B: _mix(t.q, u(t.y - r * c), u(t.y)),
        Choice.OPT_OUT: u(0.0),
    }


def expected_utility(profile: SellerProfile, choice: Choice, t: OptionTriple) -> float:
    """Expected utility of ``choice`` for a seller facing question ``t``."""
    return _expected_utilities(profile, t)[Choice(choice)]


def _argmax(eus: dict) -> Choice:
    best = TIE_ORDER[0]
    for option in TIE_ORDER[1:]:
        if eus[option] > eus[best]:
            best = option
    return best


def choose_option(profile: SellerProfile, t: OptionTriple) -> Choice:
    """Expected-utility maximizing choice, ties resolved as B, then A, then opt-out."""
    return _argmax(_expected_utilities(profile, t))


def choose_option_bundled(profile: SellerProfile, t: OptionTriple, r: int) -> Choice:
    """Choice when one selection event exposes the data to ``r`` requests.

    Option A then pays ``x`` per request and the cost is borne per request;
    Option B still pays ``y`` once.
    """
    if isinstance(r, bool) or int(r) != r or r < 1:
        raise DomainError(f"request count must be a positive integer, got {r!r}")
    return _argmax(_expected_utilities(profile, t, int(r)))
