"""Pose (q, x, y) questions to sellers, record their choices, find the participation price."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from . import _kernels
from .agents import Choice, OptionTriple
from .errors import DomainError, ElicitationInsufficientError, QueryError
from .population import Population, Seller, seller_arrays

DEFAULT_EPSILON = 0.01


def _strictly_increasing(values) -> bool:
    return all(b > a for a, b in zip(values, values[1:]))


@dataclass(frozen=True)
class QuestionGrid:
    qs: tuple
    xs: tuple
    ys: tuple

    def __post_init__(self):
        for name in ("qs", "xs", "ys"):
            values = tuple(float(v) for v in getattr(self, name))
            if not values:
                raise DomainError(f"grid {name} must be nonempty")
            if not all(math.isfinite(v) for v in values):
                raise DomainError(f"grid {name} must be finite")
            if not _strictly_increasing(values):
                raise DomainError(f"grid {name} must be strictly increasing")
            object.__setattr__(self, name, values)
        if not all(0.0 < q <= 1.0 for q in self.qs):
            raise DomainError("grid probabilities must lie in (0, 1]")
        if self.xs[0] < 0 or self.ys[0] < 0:
            raise DomainError("grid payments must be non-negative")

    def triples(self, r: int = 1) -> list[OptionTriple]:
        """Admissible triples (y < q*r*x) in (q, x, y) lexicographic order."""
        out = [OptionTriple(q, x, y) for q in self.qs for x in self.xs for y in self.ys]
        return [t for t in out if t.is_admissible(r)]


@dataclass(frozen=True)
class ChoiceRecord:
    seller_id: int
    triple: OptionTriple
    choice: Choice


@dataclass(frozen=True, eq=False)
class ElicitationLog:
    """Every seller's answer to every admissible grid question.

    Choices are held as an int8 code matrix, one row per seller (in
    ``seller_ids`` order) and one column per triple (in ``triples`` order).
    """

    grid: QuestionGrid
    seller_ids: np.ndarray
    triples: tuple
    codes: np.ndarray
    r: int = 1

    @property
    def n(self) -> int:
        return len(self.seller_ids)

    def __len__(self):
        return self.codes.size

    @cached_property
    def _column(self) -> dict:
        return {(t.q, t.x, t.y): j for j, t in enumerate(self.triples)}

    @cached_property
    def _row(self) -> dict:
        return {int(sid): i for i, sid in enumerate(self.seller_ids)}

    @cached_property
    def _triple_array(self) -> np.ndarray:
        return np.array([(t.q, t.x, t.y) for t in self.triples], dtype=float).reshape(-1, 3)

    @property
    def records(self) -> Iterator[ChoiceRecord]:
        for i, sid in enumerate(self.seller_ids):
            for j, t in enumerate(self.triples):
                yield ChoiceRecord(int(sid), t, Choice.from_code(self.codes[i, j]))

    def column_index(self, q: float, x: float, y: float) -> int:
        key = (float(q), float(x), float(y))
        if key in self._column:
            return self._column[key]
        # tolerate round-off in caller-computed triples
        hits = np.flatnonzero(np.all(np.isclose(self._triple_array, key, rtol=1e-12, atol=0.0), axis=1))
        if hits.size == 0:
            raise QueryError(f"no recorded choices at triple {key}")
        return int(hits[0])

    def choices_at(self, q: float, x: float, y: float) -> np.ndarray:
        """Choice codes of all sellers at one triple, in ``seller_ids`` order."""
        return self.codes[:, self.column_index(q, x, y)]

    def rows(self, seller_ids) -> list[int]:
        """Row positions of ``seller_ids`` in the code matrix."""
        try:
            return [self._row[int(i)] for i in seller_ids]
        except KeyError as exc:
            raise QueryError(f"seller {exc.args[0]} was not elicited") from None

    def choice_of(self, seller_id: int, t: OptionTriple) -> Choice:
        (row,) = self.rows([seller_id])
        return Choice.from_code(self.codes[row, self.column_index(t.q, t.x, t.y)])

    def ys_at(self, q: float, x: float) -> np.ndarray:
        """Recorded Option-B payments at (q, x), ascending."""
        arr = self._triple_array
        mask = (arr[:, 0] == q) & (arr[:, 1] == x)
        return arr[mask, 2]

    def restrict(self, sellers: Sequence[Seller]) -> "ElicitationLog":
        """The log rows for ``sellers`` only, in their given order."""
        rows = self.rows(s.id for s in sellers)
        return ElicitationLog(self.grid, self.seller_ids[rows], self.triples, self.codes[rows], self.r)

    def to_csv(self, path) -> Path:
        """Write one row per record: seller_id, q, x, y, choice."""
        path = Path(path)
        labels = [c.value for c in sorted(Choice, key=lambda c: c.code)]
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["seller_id", "q", "x", "y", "choice"])
            for i, sid in enumerate(self.seller_ids):
                row_codes = self.codes[i]
                for j, t in enumerate(self.triples):
                    writer.writerow([int(sid), repr(t.q), repr(t.x), repr(t.y), labels[row_codes[j]]])
        return path


@dataclass(frozen=True)
class ParticipationPrice:
    x_bar: float
    epsilon: float
    optout_fraction: float


def _sellers(pop) -> Sequence[Seller]:
    return pop.sellers if isinstance(pop, Population) else list(pop)


def run_elicitation(pop: Population | Sequence[Seller], grid: QuestionGrid, r: int = 1) -> ElicitationLog:
    """Ask every seller every admissible grid question.

    ``r > 1`` poses the bundled wording, where one selection event exposes
    the data to ``r`` requests.
    """
    if isinstance(r, bool) or int(r) != r or r < 1:
        raise DomainError(f"request count must be a positive integer, got {r!r}")
    return _elicit(_sellers(pop), grid, tuple(grid.triples(int(r))), int(r))


def elicit_triples(pop: Population | Sequence[Seller], triples: Sequence[OptionTriple], r: int = 1) -> ElicitationLog:
    """Ask every seller exactly the given questions, e.g. those a menu settles on."""
    if isinstance(r, bool) or int(r) != r or r < 1:
        raise DomainError(f"request count must be a positive integer, got {r!r}")
    kept = tuple(dict.fromkeys(t for t in triples if t.is_admissible(int(r))))
    if not kept:
        raise DomainError("no admissible triple (y < q*r*x) to ask")
    grid = QuestionGrid(
        sorted({t.q for t in kept}), sorted({t.x for t in kept}), sorted({t.y for t in kept})
    )
    return _elicit(_sellers(pop), grid, kept, int(r))


def _elicit(sellers, grid, triples, r) -> ElicitationLog:
    ids, costs, coefs, _ = seller_arrays(sellers)
    if triples:
        arr = np.array([(t.q, t.x, t.y) for t in triples])
        codes = _kernels.choice_codes(costs, coefs, arr[:, 0], arr[:, 1], arr[:, 2], r)
    else:
        codes = np.empty((len(sellers), 0), dtype=np.int8)
    return ElicitationLog(grid, ids, triples, codes, r)


def optout_fraction(log: ElicitationLog, x: float) -> float:
    """Share of sellers who opted out of every question offering Option-A payment ``x``."""
    if x not in log.grid.xs:
        raise QueryError(f"x={x} is not a grid value")
    cols = [j for j, t in enumerate(log.triples) if t.x == x]
    if not cols or log.n == 0:
        # no admissible question at this x; nobody was shown a scheme
        return 1.0 if log.n else 0.0
    out = np.all(log.codes[:, cols] == _kernels.OPT_OUT, axis=1)
    return float(out.sum()) / log.n


def discover_x_bar(log: ElicitationLog, epsilon: float = DEFAULT_EPSILON) -> ParticipationPrice:
    """Smallest grid x whose opt-out share is at most ``epsilon``."""
    if not 0.0 <= epsilon < 1.0:
        raise DomainError(f"epsilon must lie in [0, 1), got {epsilon}")
    for x in log.grid.xs:
        frac = optout_fraction(log, x)
        if frac <= epsilon:
            return ParticipationPrice(x, epsilon, frac)
    raise ElicitationInsufficientError(
        f"every grid x leaves more than {epsilon:.4g} of sellers opted out; extend xs upward"
    )
