"""Pricing menus: the cheapest Option-B payment for each sample size.

A buyer asking for ``k`` of ``n`` qualifying sellers implies an access
probability ``q = k/n``. Sellers who picked Option A are paid ``x_bar`` only
when sampled; sellers who picked Option B are paid ``y`` regardless. The
menu picks, for every ``k``, the ``y`` that minimizes the buyer's expected
total.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import _kernels
from .agents import UtilitySpec, utility_value
from .elicitation import ElicitationLog
from .errors import DomainError, MenuError, RequestError
from .population import Seller, seller_arrays

Y_TOL = 1e-9
DEFAULT_Y_POINTS = 2000


def bisect_increasing(f: Callable[[float], float], target: float, lo: float, hi: float, tol: float = Y_TOL) -> float:
    """Smallest y in [lo, hi] with f(y) >= target, for nondecreasing f.

    Returns the upper bracket, so ``f(result) >= target`` always holds.
    Requires ``f(hi) >= target``.
    """
    if f(lo) >= target:
        return lo
    if not f(hi) >= target:
        raise DomainError("bisection bracket does not contain the target")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) >= target:
            hi = mid
        else:
            lo = mid
    return hi


def _check_q_xbar(q: float, x_bar: float) -> None:
    if not 0.0 < q <= 1.0:
        raise DomainError(f"q must lie in (0, 1], got {q}")
    if not (x_bar > 0 and math.isfinite(x_bar)):
        raise DomainError(f"x_bar must be positive and finite, got {x_bar}")


def _certainty_equivalent(q: float, hi: float, u: UtilitySpec, tol: float) -> float:
    """Bisect for the minimum y in [0, hi] with u(y) >= q*u(hi) + (1-q)*u(0).

    For risk-averse CARA, u(y) rounds to 1/a once a*y exceeds ~37, which
    would stall the search far below the true root. When the root lies in
    that flat region the search runs on -exp(-a*y) instead: an increasing
    affine transform of u with the same root, whose target
    -((1-q) + q*exp(-a*hi)) is a sum of positive terms and keeps full
    relative precision.
    """
    a = u.coefficient
    if a > 0:
        complement = (1.0 - q) + q * math.exp(-a * hi)
        if complement < 0.5:
            return bisect_increasing(lambda y: -math.exp(-a * y), -complement, 0.0, hi, tol)
    target = q * utility_value(u, hi) + (1.0 - q) * utility_value(u, 0.0)
    return bisect_increasing(lambda y: utility_value(u, y), target, 0.0, hi, tol)


def optimal_y(q: float, x_bar: float, u: UtilitySpec, tol: float = Y_TOL) -> float:
    """Certainty equivalent of the Option-A lottery for a zero-cost seller.

    The minimum y with ``u(y) >= q*u(x_bar) + (1-q)*u(0)``.
    """
    _check_q_xbar(q, x_bar)
    return _certainty_equivalent(q, x_bar, u, tol)


class BundledY(NamedTuple):
    y_star: float
    amortized: float


def optimal_y_bundled(q: float, x_bar: float, u: UtilitySpec, r: int, tol: float = Y_TOL) -> BundledY:
    """Certainty equivalent when Option A would pay ``x_bar`` on each of ``r`` requests."""
    _check_q_xbar(q, x_bar)
    if isinstance(r, bool) or int(r) != r or r < 1:
        raise DomainError(f"request count must be a positive integer, got {r!r}")
    y = _certainty_equivalent(q, r * x_bar, u, tol)
    return BundledY(y, y / r)


def cara_certainty_equivalent(q: float, x_bar: float, a: float) -> float:
    """Closed form of ``optimal_y`` for CARA utility with coefficient ``a``."""
    if a == 0:
        return q * x_bar
    return -math.log1p(q * math.expm1(-a * x_bar)) / a


def expected_total_price(n_a: int, n_b: int, q: float, x_bar: float, y: float) -> float:
    """Expected disbursement: A-choosers paid x_bar when sampled, B-choosers paid y always."""
    if n_a < 0 or n_b < 0:
        raise DomainError("chooser counts must be non-negative")
    return q * n_a * x_bar + n_b * y


@dataclass(frozen=True)
class MenuEntry:
    k: int
    q: float
    y_star: float
    x_bar: float
    expected_total: float
    per_point: float
    n_a: int
    n_b: int
    q_elicited: float | None = None

    def __post_init__(self):
        if not self.y_star < self.q * self.x_bar:
            raise MenuError(f"k={self.k}: y*={self.y_star} violates y < q*x_bar")
        if abs(self.per_point * self.k - self.expected_total) > 1e-9 * max(1.0, self.expected_total):
            raise MenuError(f"k={self.k}: per-point price inconsistent with total")
        if self.per_point > self.x_bar * (1 + 1e-12):
            raise MenuError(f"k={self.k}: per-point price exceeds x_bar")

    @property
    def triple(self) -> tuple:
        """The (q, x, y) question whose recorded answers settle this entry."""
        q = self.q if self.q_elicited is None else self.q_elicited
        return (q, self.x_bar, self.y_star)


@dataclass(frozen=True)
class PricingMenu:
    entries: tuple
    n: int
    x_bar: float
    mode: str = "log"

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def entry(self, k: int) -> MenuEntry:
        for e in self.entries:
            if e.k == k:
                return e
        raise RequestError(f"no menu entry for k={k}")

    def is_monotone(self) -> bool:
        totals = [e.expected_total for e in self.entries]
        return all(b >= a for a, b in zip(totals, totals[1:]))

    def to_csv(self, path, lower_bound: float | None = None) -> Path:
        """k, q, y_star, expected_total, per_point, baseline_per_point, lower_bound."""
        path = Path(path)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["k", "q", "y_star", "expected_total", "per_point", "baseline_per_point", "lower_bound"])
            for e in self.entries:
                writer.writerow(
                    [
                        e.k,
                        repr(e.q),
                        repr(e.y_star),
                        repr(e.expected_total),
                        repr(e.per_point),
                        repr(float(self.x_bar)),
                        "" if lower_bound is None else repr(float(lower_bound)),
                    ]
                )
        return path


def _check_ks(ks: Sequence[int], n: int) -> list[int]:
    out = []
    for k in ks:
        if isinstance(k, bool) or int(k) != k:
            raise RequestError(f"sample size must be an integer, got {k!r}")
        k = int(k)
        if not 1 <= k <= n:
            raise RequestError(f"sample size {k} outside [1, {n}]")
        out.append(k)
    return sorted(set(out))


def _snap(q: float, elicited: np.ndarray, snap: bool) -> float:
    if elicited.size == 0:
        raise MenuError("the log holds no questions at x_bar")
    close = np.isclose(elicited, q, rtol=1e-12, atol=0.0)
    if close.any():
        return float(elicited[np.argmax(close)])
    if not snap:
        raise MenuError(f"q={q} was not elicited and snapping is disabled")
    # argmin keeps the lower of two equidistant grid values
    return float(elicited[np.argmin(np.abs(elicited - q))])


def _entry(k, n, q, x_bar, ys, n_a, n_b, q_elicited=None) -> MenuEntry:
    totals = q * n_a * x_bar + n_b * ys
    best = int(np.argmin(totals))
    total = float(totals[best])
    return MenuEntry(k, q, float(ys[best]), float(x_bar), total, total / k, int(n_a[best]), int(n_b[best]), q_elicited)


def _log_entry(log: ElicitationLog, k: int, x_bar: float, elicited: np.ndarray, snap: bool) -> MenuEntry:
    q = k / log.n
    q_e = _snap(q, elicited, snap)
    ys = log.ys_at(q_e, x_bar)
    ys = ys[ys < q * x_bar]
    if ys.size == 0:
        raise MenuError(f"k={k}: no recorded y below q*x_bar at q={q_e}")
    codes = np.stack([log.choices_at(q_e, x_bar, y) for y in ys], axis=1)
    n_a = (codes == _kernels.OPTION_A).sum(axis=0)
    n_b = (codes == _kernels.OPTION_B).sum(axis=0)
    return _entry(k, log.n, q, x_bar, ys, n_a, n_b, q_e)


def _model_entry(costs, coefs, n: int, k: int, x_bar: float, y_grid) -> MenuEntry:
    q = k / n
    cap = q * x_bar
    if np.ndim(y_grid) == 0:
        grid = np.linspace(0.0, cap, int(y_grid) + 2)[1:-1]
    else:
        grid = np.asarray(y_grid, dtype=float)
        grid = grid[(grid > 0) & (grid < cap)]
    if grid.size == 0:
        raise MenuError(f"k={k}: y grid has no point in (0, q*x_bar)")
    thresholds = _kernels.b_thresholds(costs, coefs, q, x_bar, 0.0, cap)
    accepts_a = _kernels.option_a_acceptable(costs, coefs, q, x_bar)
    steps = thresholds[np.isfinite(thresholds) & (thresholds < cap)]
    ys = np.unique(np.concatenate([grid, steps]))
    t_all = np.sort(thresholds)
    t_a = np.sort(thresholds[accepts_a])
    n_b = np.searchsorted(t_all, ys, side="right")
    n_a = accepts_a.sum() - np.searchsorted(t_a, ys, side="right")
    return _entry(k, n, q, x_bar, ys, n_a, n_b)


def build_menu(
    log: ElicitationLog,
    x_bar: float,
    ks: Sequence[int],
    y_grid: int | Sequence[float] = DEFAULT_Y_POINTS,
    *,
    mode: str = "log",
    sellers: Sequence[Seller] | None = None,
    snap: bool = True,
) -> PricingMenu:
    """Cost-minimizing menu over sample sizes ``ks`` for the sellers in ``log``.

    ``mode="log"`` prices from recorded answers only, at the elicited ``q``
    nearest to ``k/n`` (or fails when ``snap`` is off); candidate ``y`` are
    the recorded ones and ``y_grid`` is unused. ``mode="model"`` re-evaluates
    the known seller profiles in ``sellers`` at the exact ``q``: a dense
    ``y_grid`` is refined by locating, to 1e-9, each seller's switch point
    to Option B, which is where the expected total drops.
    """
    n = log.n
    ks = _check_ks(ks, n)
    if mode == "log":
        if x_bar not in log.grid.xs:
            raise MenuError(f"x_bar={x_bar} is not an elicited Option-A payment")
        elicited = np.unique([t.q for t in log.triples if t.x == x_bar])
        entries = [_log_entry(log, k, x_bar, elicited, snap) for k in ks]
    elif mode == "model":
        if sellers is None:
            raise MenuError("model mode needs the seller profiles")
        by_id = {s.id: s for s in sellers}
        try:
            ordered = [by_id[int(i)] for i in log.seller_ids]
        except KeyError as exc:
            raise MenuError(f"seller {exc.args[0]} in the log has no profile") from None
        _, costs, coefs, _ = seller_arrays(ordered)
        entries = [_model_entry(costs, coefs, n, k, x_bar, y_grid) for k in ks]
    else:
        raise MenuError(f"unknown menu mode {mode!r}")
    return PricingMenu(tuple(entries), n, float(x_bar), mode)


def baseline_menu(n: int, ks: Sequence[int], x_bar: float) -> PricingMenu:
    """Pay every sampled seller x_bar; no Option B is offered (y recorded as 0)."""
    ks = _check_ks(ks, n)
    entries = []
    for k in ks:
        total = k * float(x_bar)
        entries.append(MenuEntry(k, k / n, 0.0, float(x_bar), total, total / k, n, 0))
    return PricingMenu(tuple(entries), n, float(x_bar), "baseline")


def discrimination_lower_bound(subset: Sequence[Seller]) -> float:
    """Per-point price if each sampled seller were paid exactly their true cost."""
    if len(subset) == 0:
        raise DomainError("lower bound of an empty subset is undefined")
    return math.fsum(s.profile.cost for s in subset) / len(subset)
