"""Sampling, settlement and the payment ledger.

Money leaving the buyer is tracked as exact rationals so that the buyer's
bill always equals seller payments plus commission, with no round-off.
"""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from types import MappingProxyType
from typing import Iterator, Sequence

import numpy as np

from . import _kernels
from .elicitation import ElicitationLog
from .errors import ConsistencyError, DomainError, QueryError, RequestError
from .menu import MenuEntry
from .population import Predicate, Seller

MC_BATCH = 2000


@dataclass(frozen=True)
class BuyerRequest:
    k: int
    predicate: Predicate = field(default_factory=Predicate)
    request_id: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise RequestError(f"sample size must be >= 1, got {self.k}")


@dataclass(frozen=True)
class Sample:
    seller_ids: tuple

    def __post_init__(self):
        if len(set(self.seller_ids)) != len(self.seller_ids):
            raise RequestError("a sample cannot contain a seller twice")

    def __len__(self):
        return len(self.seller_ids)


def _as_rate(rate) -> Fraction:
    # str() keeps decimal intent: 0.1 becomes exactly 1/10
    frac = Fraction(str(rate)) if isinstance(rate, float) else Fraction(rate)
    if frac < 0:
        raise DomainError(f"commission rate must be non-negative, got {rate}")
    return frac


@dataclass(frozen=True, eq=False)
class Settlement:
    """Payments for one buyer request.

    ``payouts`` groups sellers by the amount they receive, as
    ``(amount, seller_ids)`` pairs; sellers absent from every group get 0.
    Totals are :class:`fractions.Fraction`.
    """

    request_id: int
    k: int
    payouts: tuple
    rate: Fraction = Fraction(0)

    @cached_property
    def disbursement(self) -> Fraction:
        return sum((amount * len(ids) for amount, ids in self.payouts), Fraction(0))

    @cached_property
    def commission(self) -> Fraction:
        return self.rate * self.disbursement

    @cached_property
    def buyer_total(self) -> Fraction:
        return self.disbursement + self.commission

    @property
    def per_seller(self) -> dict:
        out: dict = defaultdict(Fraction)
        for amount, ids in self.payouts:
            for sid in ids:
                out[int(sid)] += amount
        return dict(out)

    def seller_total(self) -> Fraction:
        """Sum of every individual seller payment."""
        total = Fraction(0)
        for amount, ids in self.payouts:
            total += amount * len(ids)
        return total

    def conserves(self) -> bool:
        """Bill minus commission equals what the sellers receive, exactly."""
        return (
            self.buyer_total - self.commission == self.seller_total()
            and self.commission == self.rate * self.seller_total()
        )


class Ledger:
    """Append-only record of settlements with cumulative per-seller earnings.

    Single writer: settlements are applied in sequence by one owner.
    """

    def __init__(self):
        self._settlements: list[Settlement] = []
        self._earnings: dict = defaultdict(Fraction)

    def append(self, settlement: Settlement) -> None:
        self._settlements.append(settlement)
        for sid, amount in settlement.per_seller.items():
            self._earnings[sid] += amount

    def extend(self, settlements) -> None:
        for s in settlements:
            self.append(s)

    @property
    def settlements(self) -> tuple:
        return tuple(self._settlements)

    @property
    def earnings(self) -> MappingProxyType:
        """Read-only snapshot of cumulative earnings per seller."""
        return MappingProxyType(dict(self._earnings))

    def to_csv(self, path) -> Path:
        """One row per nonzero payment: request_id, seller_id, payment."""
        path = Path(path)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["request_id", "seller_id", "payment"])
            for s in self._settlements:
                for sid, amount in sorted(s.per_seller.items()):
                    writer.writerow([s.request_id, sid, repr(float(amount))])
        return path

    def summary_csv(self, path) -> Path:
        """One row per settlement: request_id, k, buyer_total, commission."""
        path = Path(path)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["request_id", "k", "buyer_total", "commission"])
            for s in self._settlements:
                writer.writerow([s.request_id, s.k, repr(float(s.buyer_total)), repr(float(s.commission))])
        return path


def _check_k(k: int, n: int) -> None:
    if isinstance(k, bool) or int(k) != k or not 1 <= k <= n:
        raise RequestError(f"sample size {k!r} outside [1, {n}]")


def draw_sample(subset: Sequence[Seller], k: int, seed) -> Sample:
    """Uniform size-k sample without replacement, deterministic in ``seed``."""
    n = len(subset)
    _check_k(k, n)
    rng = np.random.default_rng(seed)
    idx = _kernels.srs_batch(n, rng.random((1, k)))[0]
    return Sample(tuple(sorted(subset[i].id for i in idx)))


def srs_batches(n: int, k: int, runs: int, seed, batch: int = MC_BATCH) -> Iterator[np.ndarray]:
    """Index samples (rows of k positions into range(n)) for ``runs`` draws."""
    _check_k(k, n)
    rng = np.random.default_rng(seed)
    done = 0
    while done < runs:
        m = min(batch, runs - done)
        yield _kernels.srs_batch(n, rng.random((m, k)))
        done += m


def inclusion_frequencies(n: int, k: int, runs: int, seed) -> np.ndarray:
    """Fraction of ``runs`` draws in which each of range(n) was sampled."""
    counts = np.zeros(n, dtype=np.int64)
    for rows in srs_batches(n, k, runs, seed):
        counts += _kernels.inclusion_counts(rows, n)
    return counts / runs


def srs_estimates(subset: Sequence[Seller], k: int, runs: int, seed) -> np.ndarray:
    """Sample-mean estimates of the attribute over ``runs`` independent draws."""
    attrs = np.array([s.attribute for s in subset], dtype=float)
    parts = [_kernels.row_sums(rows, attrs) / k for rows in srs_batches(len(subset), k, runs, seed)]
    return np.concatenate(parts) if parts else np.empty(0)


def _subset_choices(subset: Sequence[Seller], entry: MenuEntry, log: ElicitationLog) -> tuple:
    ids = np.fromiter((s.id for s in subset), dtype=np.int64, count=len(subset))
    try:
        col = log.choices_at(*entry.triple)
        rows = log.rows(ids)
    except QueryError as exc:
        raise ConsistencyError(f"missing choice record: {exc}") from None
    return ids, col[rows]


def _in_sample(ids: np.ndarray, sample: Sample) -> np.ndarray:
    picked = np.isin(ids, np.asarray(sample.seller_ids, dtype=np.int64))
    if picked.sum() != len(sample):
        raise RequestError("sample contains sellers outside the subset")
    return picked


def settle(
    sample: Sample,
    subset: Sequence[Seller],
    entry: MenuEntry,
    log: ElicitationLog,
    rate: float = 0.0,
    request_id: int = 0,
) -> Settlement:
    """Pay sampled A-choosers x_bar and every B-chooser in the subset y*.

    Sampled sellers who opted out at the entry's question are paid nothing.
    """
    ids, codes = _subset_choices(subset, entry, log)
    picked = _in_sample(ids, sample)
    return _settlement(ids, codes, picked, entry, _as_rate(rate), request_id)


def _settlement(ids, codes, picked, entry: MenuEntry, rate: Fraction, request_id: int) -> Settlement:
    a_paid = ids[picked & (codes == _kernels.OPTION_A)]
    b_paid = ids[codes == _kernels.OPTION_B]
    payouts = []
    if a_paid.size:
        payouts.append((Fraction(entry.x_bar), a_paid))
    if b_paid.size:
        payouts.append((Fraction(entry.y_star), b_paid))
    return Settlement(request_id, int(picked.sum()), tuple(payouts), rate)


def settle_bundled(
    sample: Sample,
    subset: Sequence[Seller],
    entry: MenuEntry,
    log: ElicitationLog,
    r: int,
    rate: float = 0.0,
    first_request_id: int = 0,
) -> list[Settlement]:
    """Settle ``r`` requests served by one persistent selection event.

    Sampled A-choosers earn x_bar per request. Each B-chooser earns y* once,
    split evenly across the r buyers' bills.
    """
    if isinstance(r, bool) or int(r) != r or r < 1:
        raise RequestError(f"request count must be a positive integer, got {r!r}")
    if log.r != r:
        raise ConsistencyError(f"log was elicited for {log.r} requests, not {r}")
    ids, codes = _subset_choices(subset, entry, log)
    picked = _in_sample(ids, sample)
    a_paid = ids[picked & (codes == _kernels.OPTION_A)]
    b_paid = ids[codes == _kernels.OPTION_B]
    share = Fraction(entry.y_star) / int(r)
    out = []
    for i in range(int(r)):
        payouts = []
        if a_paid.size:
            payouts.append((Fraction(entry.x_bar), a_paid))
        if b_paid.size:
            payouts.append((share, b_paid))
        out.append(Settlement(first_request_id + i, len(sample), tuple(payouts), _as_rate(rate)))
    return out


def estimate_mean(sample: Sample, subset: Sequence[Seller]) -> float:
    if len(sample) == 0:
        raise DomainError("cannot estimate from an empty sample")
    attr = {s.id: s.attribute for s in subset}
    try:
        return math.fsum(attr[i] for i in sample.seller_ids) / len(sample)
    except KeyError as exc:
        raise RequestError(f"seller {exc.args[0]} is not in the subset") from None


def reverse_auction_sample(subset: Sequence[Seller], k: int) -> Sample:
    """The k cheapest sellers, ties by id: a cheap but biased comparator."""
    _check_k(k, len(subset))
    ranked = sorted(subset, key=lambda s: (s.profile.cost, s.id))
    return Sample(tuple(sorted(s.id for s in ranked[:k])))


def simulate_settlements(
    subset: Sequence[Seller],
    entry: MenuEntry,
    log: ElicitationLog,
    runs: int,
    seed,
    rate: float = 0.0,
) -> tuple[np.ndarray, bool]:
    """Settle ``runs`` independent purchases of ``entry``.

    Returns each run's buyer bill and whether every settlement conserved
    money exactly.
    """
    ids, codes = _subset_choices(subset, entry, log)
    frac_rate = _as_rate(rate)
    conserved = True
    bills = np.empty(runs)
    run = 0
    for rows in srs_batches(len(subset), entry.k, runs, seed):
        for row in rows:
            picked = np.zeros(len(ids), dtype=bool)
            picked[row] = True
            s = _settlement(ids, codes, picked, entry, frac_rate, run)
            conserved &= s.conserves()
            bills[run] = float(s.buyer_total)
            run += 1
    return bills, conserved
