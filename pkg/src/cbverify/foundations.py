"""Multisets, integer vectors, semilinear sets, and closed-form combinatorial bounds.

These are the ground-level values everything else in the toolkit is built
from.  All values are immutable after construction and all arithmetic is
exact (Python big integers); there are no floats anywhere.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable, Iterator, Mapping


Symbol = Any  # hashable: str or (nested) tuple of symbols/ints


class BudgetExceeded(Exception):
    """Raised when a construction exceeds its configured node/size budget.

    Callers translate this into an explicit three-valued "unknown".
    """


_symkey_cache = {}


def symkey(sym: Symbol) -> str:
    """Canonical JSON-safe string form of a (possibly structured) symbol."""
    if isinstance(sym, str):
        return sym
    if isinstance(sym, (int, bool)):
        return json.dumps(sym)
    if isinstance(sym, tuple):
        cached = _symkey_cache.get(sym)
        if cached is None:
            cached = _symkey_cache[sym] = json.dumps(_as_lists(sym))
        return cached
    raise TypeError(f"unsupported symbol {sym!r}")


def _as_lists(x):
    if isinstance(x, tuple):
        return [_as_lists(y) for y in x]
    if isinstance(x, frozenset):
        return ["$set", sorted(symkey(y) for y in x)]
    return x


class Multiset:
    """Finite-support counter over symbols. Immutable; no zero entries stored."""

    __slots__ = ("_counts", "_hash")

    def __init__(self, counts: Mapping[Symbol, int] | Iterable[tuple[Symbol, int]] = ()):
        items = counts.items() if isinstance(counts, Mapping) else counts
        d = {}
        for sym, c in items:
            if c < 0:
                raise ValueError(f"negative count for {sym!r}")
            if c:
                d[sym] = d.get(sym, 0) + c
        self._counts = d
        self._hash = None

    @classmethod
    def of(cls, *symbols: Symbol) -> "Multiset":
        return cls([(s, 1) for s in symbols])

    def __getitem__(self, sym: Symbol) -> int:
        return self._counts.get(sym, 0)

    def __iter__(self) -> Iterator[Symbol]:
        return iter(self._counts)

    def __len__(self) -> int:
        return len(self._counts)

    def __bool__(self) -> bool:
        return bool(self._counts)

    def items(self):
        return self._counts.items()

    @property
    def support(self) -> frozenset:
        return frozenset(self._counts)

    @property
    def size(self) -> int:
        return sum(self._counts.values())

    def __add__(self, other: "Multiset") -> "Multiset":
        d = dict(self._counts)
        for s, c in other.items():
            d[s] = d.get(s, 0) + c
        return Multiset(d)

    def __sub__(self, other: "Multiset") -> "Multiset":
        d = dict(self._counts)
        for s, c in other.items():
            r = d.get(s, 0) - c
            if r < 0:
                raise ValueError(f"subtraction would go negative at {s!r}")
            if r:
                d[s] = r
            else:
                d.pop(s, None)
        out = Multiset.__new__(Multiset)
        out._counts = d
        out._hash = None
        return out

    def scale(self, k: int) -> "Multiset":
        if k < 0:
            raise ValueError("negative scalar")
        return Multiset({s: c * k for s, c in self.items()}) if k else Multiset()

    def __le__(self, other: "Multiset") -> bool:
        return all(other[s] >= c for s, c in self.items())

    def le1(self, other: "Multiset") -> bool:
        """The order with equal supports: self <= other and supp equal."""
        return self.support == other.support and self <= other

    def restrict(self, keep) -> "Multiset":
        return Multiset({s: c for s, c in self.items() if s in keep})

    def map_symbols(self, f: Callable[[Symbol], Symbol]) -> "Multiset":
        return Multiset([(f(s), c) for s, c in self.items()])

    def __eq__(self, other) -> bool:
        return isinstance(other, Multiset) and self._counts == other._counts

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._counts.items()))
        return self._hash

    def sorted_items(self):
        return sorted(self._counts.items(), key=lambda kv: symkey(kv[0]))

    def __repr__(self) -> str:
        inner = ", ".join(f"{symkey(s)}:{c}" for s, c in self.sorted_items())
        return "{" + inner + "}"

    def to_json(self) -> dict:
        return {symkey(s): c for s, c in self.sorted_items()}

    @classmethod
    def from_json(cls, data: Mapping[str, int]) -> "Multiset":
        return cls(dict(data))


EMPTY = Multiset()


class IntVector:
    """Finite-support integer-valued vector (a VASS edge effect)."""

    __slots__ = ("_deltas", "_hash")

    def __init__(self, deltas: Mapping[Symbol, int] | Iterable[tuple[Symbol, int]] = ()):
        items = deltas.items() if isinstance(deltas, Mapping) else deltas
        d = {}
        for sym, c in items:
            if c:
                d[sym] = d.get(sym, 0) + c
                if not d[sym]:
                    del d[sym]
        self._deltas = d
        self._hash = None

    def __getitem__(self, sym: Symbol) -> int:
        return self._deltas.get(sym, 0)

    def items(self):
        return self._deltas.items()

    @property
    def support(self) -> frozenset:
        return frozenset(self._deltas)

    def negatives(self):
        return [s for s, c in self._deltas.items() if c < 0]

    def apply(self, m: Multiset) -> Multiset | None:
        """m + delta, or None if any coordinate would go negative."""
        d = dict(m.items())
        for s, c in self._deltas.items():
            r = d.get(s, 0) + c
            if r < 0:
                return None
            if r:
                d[s] = r
            else:
                d.pop(s, None)
        out = Multiset.__new__(Multiset)
        out._counts = d
        out._hash = None
        return out

    def __add__(self, other: "IntVector") -> "IntVector":
        d = dict(self._deltas)
        for s, c in other.items():
            d[s] = d.get(s, 0) + c
        return IntVector(d)

    def __neg__(self) -> "IntVector":
        return IntVector({s: -c for s, c in self._deltas.items()})

    def map_symbols(self, f: Callable[[Symbol], Symbol]) -> "IntVector":
        return IntVector([(f(s), c) for s, c in self.items()])

    def __eq__(self, other) -> bool:
        return isinstance(other, IntVector) and self._deltas == other._deltas

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._deltas.items()))
        return self._hash

    def __repr__(self) -> str:
        inner = ", ".join(
            f"{symkey(s)}:{c:+d}" for s, c in sorted(self._deltas.items(), key=lambda kv: symkey(kv[0]))
        )
        return "<" + inner + ">"

    def to_json(self) -> dict:
        return {symkey(s): c for s, c in sorted(self._deltas.items(), key=lambda kv: symkey(kv[0]))}

    @classmethod
    def from_multiset(cls, m: Multiset, sign: int = 1) -> "IntVector":
        return cls({s: sign * c for s, c in m.items()})


ZERO = IntVector()


class LinearSet:
    """base + non-negative combinations of the periods.

    Normalized at construction: zero periods removed, duplicates removed,
    periods sorted canonically.
    """

    __slots__ = ("base", "periods")

    def __init__(self, base: Multiset = EMPTY, periods: Iterable[Multiset] = ()):
        self.base = base
        seen = {}
        for p in periods:
            if p:
                seen[p] = None
        self.periods = tuple(sorted(seen, key=lambda m: sorted((symkey(s), c) for s, c in m.items())))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, LinearSet)
            and self.base == other.base
            and self.periods == other.periods
        )

    def __hash__(self) -> int:
        return hash((self.base, self.periods))

    def __repr__(self) -> str:
        return f"Lin({self.base!r} + {list(self.periods)!r})"

    def member(self, v: Multiset) -> bool:
        if not self.base <= v:
            return False
        return self._residual_member(v - self.base, 0)

    def _residual_member(self, residual: Multiset, idx: int) -> bool:
        # complete search: every period is non-zero and non-negative, so the
        # coefficient of period i is bounded by the residual coordinatewise
        if not residual:
            return True
        if idx >= len(self.periods):
            return False
        p = self.periods[idx]
        bound = min(residual[s] // c for s, c in p.items())
        for k in range(bound + 1):
            try:
                rest = residual - p.scale(k)
            except ValueError:
                break
            if self._residual_member(rest, idx + 1):
                return True
        return False

    def sample(self, coeff_bound: int) -> list[Multiset]:
        """All members with every coefficient <= coeff_bound."""
        out = []

        def go(idx, acc):
            if idx == len(self.periods):
                out.append(acc)
                return
            for k in range(coeff_bound + 1):
                go(idx + 1, acc + self.periods[idx].scale(k))

        go(0, self.base)
        return out

    def map_symbols(self, f) -> "LinearSet":
        return LinearSet(self.base.map_symbols(f), [p.map_symbols(f) for p in self.periods])

    def to_json(self) -> dict:
        return {"base": self.base.to_json(), "periods": [p.to_json() for p in self.periods]}

    @classmethod
    def from_json(cls, data) -> "LinearSet":
        return cls(
            Multiset.from_json(data.get("base", {})),
            [Multiset.from_json(p) for p in data.get("periods", [])],
        )


class SemilinearSet:
    """A finite union of linear sets. Empty component list denotes the empty set."""

    __slots__ = ("components",)

    def __init__(self, components: Iterable[LinearSet] = ()):
        seen = {}
        for c in components:
            seen[c] = None
        self.components = tuple(seen)

    @classmethod
    def point(cls, v: Multiset) -> "SemilinearSet":
        return cls([LinearSet(v)])

    @classmethod
    def empty(cls) -> "SemilinearSet":
        return cls()

    def is_empty(self) -> bool:
        return not self.components

    def union(self, other: "SemilinearSet") -> "SemilinearSet":
        return SemilinearSet(self.components + other.components)

    def symbols(self) -> frozenset:
        syms = set()
        for c in self.components:
            syms |= c.base.support
            for p in c.periods:
                syms |= p.support
        return frozenset(syms)

    def is_zero_base(self) -> bool:
        return all(not c.base for c in self.components)

    def sample(self, coeff_bound: int) -> list[Multiset]:
        out = []
        seen = set()
        for c in self.components:
            for v in c.sample(coeff_bound):
                if v not in seen:
                    seen.add(v)
                    out.append(v)
        return out

    def map_symbols(self, f) -> "SemilinearSet":
        return SemilinearSet([c.map_symbols(f) for c in self.components])

    def __eq__(self, other) -> bool:
        return isinstance(other, SemilinearSet) and set(self.components) == set(other.components)

    def __hash__(self) -> int:
        return hash(frozenset(self.components))

    def __repr__(self) -> str:
        return "SL[" + " | ".join(repr(c) for c in self.components) + "]"

    def to_json(self) -> dict:
        return {"components": [c.to_json() for c in self.components]}

    @classmethod
    def from_json(cls, data) -> "SemilinearSet":
        return cls([LinearSet.from_json(c) for c in data.get("components", [])])


def sl_member(s: SemilinearSet, v: Multiset, universe: frozenset | None = None) -> bool:
    """Decide membership of v in the denoted set.

    Complete bounded search per linear component (normalization guarantees
    all periods are non-zero and non-negative).
    """
    if universe is not None and not v.support <= universe:
        raise ValueError(f"symbols {set(v.support) - set(universe)} outside declared universe")
    return any(c.member(v) for c in s.components)


def sl_transform(
    s: SemilinearSet,
    kind: str,
    rename: Mapping[Symbol, Symbol] | None = None,
    keep: Iterable[Symbol] | None = None,
) -> SemilinearSet:
    """Componentwise set transforms used by the reductions.

    double: L -> L (.) L over symbol x {1,2} (identical copies)
    embed_second_copy: L -> 0 o L (first copy zero)
    rename: injective symbol renaming
    drop_base: zero every base (the zero-base transform's set half)
    project: delete coordinates outside `keep`
    """
    if kind == "double":
        def dbl(m: Multiset) -> Multiset:
            return Multiset(
                [((sym, 1), c) for sym, c in m.items()] + [((sym, 2), c) for sym, c in m.items()]
            )
        return SemilinearSet(
            [LinearSet(dbl(c.base), [dbl(p) for p in c.periods]) for c in s.components]
        )
    if kind == "embed_second_copy":
        return s.map_symbols(lambda sym: (sym, 2))
    if kind == "rename":
        if rename is None:
            raise ValueError("rename map required")
        if len(set(rename.values())) != len(rename):
            raise ValueError("rename map is not injective")
        return s.map_symbols(lambda sym: rename.get(sym, sym))
    if kind == "drop_base":
        return SemilinearSet([LinearSet(EMPTY, c.periods) for c in s.components])
    if kind == "project":
        if keep is None:
            raise ValueError("projection needs a retained-symbol set")
        keep = frozenset(keep)
        return SemilinearSet(
            [LinearSet(c.base.restrict(keep), [p.restrict(keep) for p in c.periods]) for c in s.components]
        )
    raise ValueError(f"unknown transform kind {kind!r}")


def lp_feasible(A, b):
    """Whether {x >= 0 : A x <= b} is nonempty, exactly.

    Phase-one simplex over Fractions with Bland's anti-cycling rule; A is
    a list of m rows of length n, b a list of m bounds, entries ints or
    Fractions.
    """
    m = len(A)
    if m == 0:
        return True
    n = len(A[0])
    n_art = sum(1 for v in b if Fraction(v) < 0)
    ncols = n + m + n_art
    rows = []
    basis = []
    art_start = n + m
    k = 0
    for i in range(m):
        row = [Fraction(v) for v in A[i]] + [Fraction(0)] * (m + n_art)
        row[n + i] = Fraction(1)
        rhs = Fraction(b[i])
        if rhs < 0:
            row = [-v for v in row]
            rhs = -rhs
            row[art_start + k] = Fraction(1)
            basis.append(art_start + k)
            k += 1
        else:
            basis.append(n + i)
        rows.append([row, rhs])
    # reduced-cost row for minimizing the sum of artificials
    red = [Fraction(0)] * ncols
    objval = Fraction(0)
    for (row, rhs), bi in zip(rows, basis):
        if bi >= art_start:
            for j in range(ncols):
                red[j] += row[j]
            objval += rhs
    for j in range(art_start, ncols):
        red[j] -= 1
    while True:
        enter = next((j for j in range(ncols) if red[j] > 0), None)
        if enter is None:
            break
        candidates = [
            (rows[i][1] / rows[i][0][enter], basis[i], i)
            for i in range(m) if rows[i][0][enter] > 0
        ]
        if not candidates:
            break  # cannot happen in phase one; bail out conservatively
        _ratio, _bvar, leave = min(candidates)
        prow, prhs = rows[leave]
        piv = prow[enter]
        prow = [v / piv for v in prow]
        prhs = prhs / piv
        rows[leave] = [prow, prhs]
        basis[leave] = enter
        for i in range(m):
            if i == leave:
                continue
            row, rhs = rows[i]
            f = row[enter]
            if f:
                rows[i] = ([v - f * p for v, p in zip(row, prow)],
                           rhs - f * prhs)
        f = red[enter]
        red = [v - f * p for v, p in zip(red, prow)]
        objval -= f * prhs
    return objval == 0


def _int_str(v):
    """Decimal string, except astronomically large values are reported by
    bit length (their decimal expansion is useless and can exceed string
    conversion limits)."""
    if isinstance(v, int) and v.bit_length() > 4000:
        return "about 2**%d" % v.bit_length()
    return str(v)


@dataclass(frozen=True)
class BoundReport:
    """A self-describing closed-form bound: exact value plus its derivation."""

    value: int
    formula: str
    inputs: dict = field(default_factory=dict)

    def recompute(self) -> int:
        return eval(self.formula, {"__builtins__": {}}, dict(self.inputs))  # noqa: S307

    def check(self) -> bool:
        return self.recompute() == self.value

    def to_json(self) -> dict:
        return {
            "value": _int_str(self.value),
            "formula": self.formula,
            "inputs": {k: _int_str(v) for k, v in self.inputs.items()},
        }


def ramsey_bound(r: int, n: int) -> BoundReport:
    """Upper bound r**(r*(n-2)+1) on the r-coloring Ramsey number for clique size n."""
    if r < 1:
        raise ValueError("need r >= 1")
    if n < 2:
        raise ValueError("need n >= 2")
    value = r ** (r * (n - 2) + 1)
    return BoundReport(value, "r**(r*(n-2)+1)", {"r": r, "n": n})


def pump_bound_M(total_states: int, alphabet_size: int, state_count_for_r: int) -> BoundReport:
    """Number of marked positions guaranteeing a jointly pumpable block.

    r counts colorings by state/support-annotated cycle summaries.
    """
    n = total_states
    if n < 1 or alphabet_size < 0 or state_count_for_r < 1:
        raise ValueError("inputs out of range")
    r = 2 ** (state_count_for_r * 2**alphabet_size)
    value = r ** (r * (n - 1) + 1)
    return BoundReport(
        value,
        "r**(r*(n-1)+1)",
        {"r": r, "n": n, "alphabet_size": alphabet_size, "state_count_for_r": state_count_for_r},
    )


def abstraction_bound_B(M: int, n: int) -> BoundReport:
    """Cap above which production multisets can be abstracted entrywise."""
    if M < 1 or n < 1:
        raise ValueError("need M >= 1 and n >= 1")
    return BoundReport(M * (n + 1), "M*(n+1)", {"M": M, "n": n})


def balloon_bound_N(phi_size: int, omega_size: int) -> BoundReport:
    """Total bound on non-empty balloons needed along any progressive witness run.

    Per-state bound N is carried separately in the inputs.
    """
    if phi_size < 0 or omega_size < 1:
        raise ValueError("need phi_size >= 0 and omega_size >= 1")
    r = 2**phi_size
    n = omega_size**phi_size + 1
    exponent = r * (n - 2) + 1
    if exponent * max(phi_size, 1) > 4_000_000:
        # too large to materialize; infinity is a sound stand-in for every
        # use of the bound (budget-sufficiency checks can only say no)
        per_state = float("inf")
    else:
        per_state = r**exponent
    return BoundReport(
        omega_size * per_state,
        "omega_size*per_state",
        {
            "r": r,
            "n": n,
            "per_state": per_state,
            "phi_size": phi_size,
            "omega_size": omega_size,
        },
    )
