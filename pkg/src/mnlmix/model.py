"""Two-component multinomial-logit mixtures: types, oracles, sampling.

A mixture is a pair of weight vectors on the simplex plus a positive mixing
parameter; on any offered slate it picks the first weight vector with
probability 1/(1+lambda) and the second with probability lambda/(1+lambda),
then selects within the slate proportionally to the chosen weights.

All arithmetic runs in whichever number type the model carries: IEEE doubles
for simulation work, ``fractions.Fraction`` for bit-exact verification of
rational instances.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np

Number = Union[int, float, Fraction]

WEIGHT_SUM_TOL = 1e-12
DEFAULT_WEIGHT_FLOOR = 1e-9


class ParameterError(ValueError):
    """Infeasible construction parameters (counts, floors, mixing weight)."""


class InvalidSlateError(ValueError):
    """Slate refers to items outside the model universe."""


def rng_stream(seed: int, *keys: int) -> np.random.Generator:
    """Counter-based generator for the (seed, keys...) stream.

    Philox is counter-based, so streams derived from distinct key tuples are
    statistically independent and experiments parallelize deterministically.
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, *keys])))


def parse_number(x) -> Number:
    """Accept a float, int, or a "p/q" rational string."""
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, (int, float)):
        return x
    if isinstance(x, Fraction):
        return x
    raise ParameterError(f"cannot parse number from {x!r}")


def format_number(x: Number):
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    return float(x)


def _is_exact(values: Iterable[Number]) -> bool:
    return all(isinstance(v, (Fraction, int)) for v in values)


@dataclass(frozen=True)
class WeightVector:
    """Point on the simplex: strictly positive entries summing to one."""

    w: tuple

    @staticmethod
    def of(values: Sequence[Number]) -> "WeightVector":
        vals = tuple(values)
        if len(vals) < 1:
            raise ParameterError("empty weight vector")
        if any(v <= 0 for v in vals):
            raise ParameterError("weights must be strictly positive")
        total = sum(vals)
        if _is_exact(vals):
            if total != 1:
                raise ParameterError(f"exact weights must sum to 1, got {total}")
        elif abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise ParameterError(f"weights sum to {total!r}, outside 1 +/- 1e-12")
        return WeightVector(vals)

    def __len__(self) -> int:
        return len(self.w)

    def __getitem__(self, i: int):
        return self.w[i]

    @property
    def exact(self) -> bool:
        return _is_exact(self.w)


@dataclass(frozen=True)
class Slate:
    """Sorted set of at least two distinct item indices (1-based)."""

    items: tuple

    @staticmethod
    def of(items: Iterable[int]) -> "Slate":
        its = tuple(sorted(set(int(i) for i in items)))
        if len(its) < 2:
            raise InvalidSlateError("slates need at least 2 distinct items")
        if its[0] < 1:
            raise InvalidSlateError("item indices are 1-based")
        return Slate(its)

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)


def all_slates(n: int, min_size: int = 2, items: Sequence[int] | None = None) -> list:
    """Every slate of size >= min_size within the given items (default 1..n)."""
    from itertools import combinations

    universe = tuple(items) if items is not None else tuple(range(1, n + 1))
    out = []
    for k in range(min_size, len(universe) + 1):
        out.extend(Slate.of(c) for c in combinations(universe, k))
    return out


@dataclass(frozen=True)
class MixtureModel:
    """Ground truth object: two weight vectors and the mixing parameter."""

    n: int
    a: WeightVector
    b: WeightVector
    lam: Number

    @staticmethod
    def of(a: Sequence[Number], b: Sequence[Number], lam: Number) -> "MixtureModel":
        av, bv = WeightVector.of(a), WeightVector.of(b)
        if len(av) != len(bv):
            raise ParameterError("weight vectors must have equal length")
        n = len(av)
        if n < 3:
            raise ParameterError("need at least 3 items")
        if lam <= 0:
            raise ParameterError("mixing parameter must be positive")
        return MixtureModel(n, av, bv, lam)

    @staticmethod
    def from_mu(a: Sequence[Number], b: Sequence[Number], mu: Number) -> "MixtureModel":
        if not (0 < mu < 1):
            raise ParameterError("mixing weight must lie in (0,1)")
        if isinstance(mu, Fraction):
            lam = (1 - mu) / mu
        else:
            lam = (1.0 - mu) / mu
        return MixtureModel.of(a, b, lam)

    @property
    def mu(self):
        one = Fraction(1) if isinstance(self.lam, (Fraction, int)) else 1.0
        return one / (1 + self.lam)

    @property
    def exact(self) -> bool:
        return self.a.exact and self.b.exact and isinstance(self.lam, (Fraction, int))

    def swapped(self) -> "MixtureModel":
        """Exchange components and invert the mixing parameter; same law."""
        one = Fraction(1) if isinstance(self.lam, (Fraction, int)) else 1.0
        return MixtureModel(self.n, self.b, self.a, one / self.lam)

    def collapse_gap(self):
        """sup-norm distance between the two weight vectors."""
        return max(abs(x - y) for x, y in zip(self.a.w, self.b.w))


def slate_distribution(model: MixtureModel, slate: Slate) -> tuple:
    """Choice distribution over the slate members, in sorted item order."""
    if slate.items[-1] > model.n:
        raise InvalidSlateError(f"slate {slate.items} exceeds universe size {model.n}")
    a, b, lam = model.a, model.b, model.lam
    sa = sum(a[i - 1] for i in slate)
    sb = sum(b[i - 1] for i in slate)
    denom = 1 + lam
    return tuple((a[i - 1] / sa + lam * (b[i - 1] / sb)) / denom for i in slate)


@dataclass(frozen=True)
class OracleTable:
    """Scaled slate distributions (1+lambda) * D_T, keyed by slate."""

    n: int
    lam: Number
    entries: dict

    def value(self, slate: Slate) -> tuple:
        return self.entries[slate.items]

    def value_for(self, slate: Slate, item: int):
        return self.entries[slate.items][slate.items.index(item)]

    def slates(self) -> list:
        return [Slate.of(items) for items in self.entries]


def oracle_table(model: MixtureModel, slates: Iterable[Slate]) -> OracleTable:
    """Exact oracle on the requested slates; rows sum to 1 + lambda."""
    scale = 1 + model.lam
    entries = {}
    for slate in slates:
        dist = slate_distribution(model, slate)
        entries[slate.items] = tuple(scale * d for d in dist)
    return OracleTable(model.n, model.lam, entries)


def random_instance(
    n: int,
    lam: Number,
    seed: int,
    floor: float = DEFAULT_WEIGHT_FLOOR,
) -> MixtureModel:
    """Seeded draw of both weight vectors uniformly from the simplex.

    Uses the exponential-spacings construction, then clamps entries to the
    floor and rebalances so the floor holds exactly after normalization.
    """
    if n < 3:
        raise ParameterError("need at least 3 items")
    if floor <= 0 or floor * n >= 1:
        raise ParameterError(f"floor {floor} infeasible for n={n}")
    rng = rng_stream(seed, 0x1157A0CE)

    def draw() -> list:
        e = rng.exponential(size=n)
        w = (e / e.sum()).tolist()
        for _ in range(n):
            low = [i for i, v in enumerate(w) if v < floor]
            if not low:
                break
            free = [i for i in range(n) if i not in low]
            mass = 1.0 - floor * len(low)
            scale = mass / sum(w[i] for i in free)
            for i in low:
                w[i] = floor
            for i in free:
                w[i] *= scale
        return w

    return MixtureModel.of(draw(), draw(), lam)


def sample_counts(model: MixtureModel, slate: Slate, size: int, seed: int) -> tuple:
    """Counts of size i.i.d. choices from the slate, one multinomial draw."""
    if size < 1:
        raise ParameterError("need at least one sample")
    rng = rng_stream(seed, *slate.items)
    dist = np.array([float(d) for d in slate_distribution(model, slate)])
    dist = dist / dist.sum()
    return tuple(int(c) for c in rng.multinomial(size, dist))


def sample_empirical(model: MixtureModel, slate: Slate, size: int, seed: int) -> tuple:
    """Empirical oracle row (1+lambda) * counts/size for one slate."""
    counts = sample_counts(model, slate, size, seed)
    scale = 1 + model.lam
    if model.exact:
        return tuple(scale * Fraction(c, size) for c in counts)
    return tuple(scale * c / size for c in counts)


@dataclass(frozen=True)
class EmpiricalTable:
    """Sampled analogue of OracleTable, keeping raw counts for exactness."""

    n: int
    lam: Number
    counts: dict
    size: int
    seed: int

    def value(self, slate: Slate) -> tuple:
        cs = self.counts[slate.items]
        scale = 1 + self.lam
        if isinstance(self.lam, (Fraction, int)):
            return tuple(scale * Fraction(c, self.size) for c in cs)
        return tuple(scale * c / self.size for c in cs)

    def value_for(self, slate: Slate, item: int):
        return self.value(slate)[slate.items.index(item)]


def empirical_table(
    model: MixtureModel, slates: Iterable[Slate], size: int, seed: int
) -> EmpiricalTable:
    counts = {s.items: sample_counts(model, s, size, seed) for s in slates}
    return EmpiricalTable(model.n, model.lam, counts, size, seed)


# ---------------------------------------------------------------------------
# file formats


def model_to_dict(model: MixtureModel) -> dict:
    return {
        "n": model.n,
        "lambda": format_number(model.lam),
        "a": [format_number(x) for x in model.a.w],
        "b": [format_number(x) for x in model.b.w],
    }


def model_from_dict(data: dict) -> MixtureModel:
    lam = parse_number(data["lambda"])
    a = [parse_number(x) for x in data["a"]]
    b = [parse_number(x) for x in data["b"]]
    model = MixtureModel.of(a, b, lam)
    if model.n != int(data["n"]):
        raise ParameterError("declared n does not match weight length")
    return model


def save_model(model: MixtureModel, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh, indent=2)
        fh.write("\n")


def load_model(path: str) -> MixtureModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh))


def oracle_to_dict(table: OracleTable) -> dict:
    return {
        "n": table.n,
        "lambda": format_number(table.lam),
        "slates": [
            {"items": list(items), "C": [format_number(v) for v in values]}
            for items, values in sorted(table.entries.items())
        ],
    }


def oracle_from_dict(data: dict) -> OracleTable:
    lam = parse_number(data["lambda"])
    entries = {}
    for row in data["slates"]:
        items = tuple(sorted(int(i) for i in row["items"]))
        entries[items] = tuple(parse_number(v) for v in row["C"])
    return OracleTable(int(data["n"]), lam, entries)


def save_oracle(table: OracleTable, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(oracle_to_dict(table), fh, indent=2)
        fh.write("\n")


def load_oracle(path: str) -> OracleTable:
    with open(path) as fh:
        return oracle_from_dict(json.load(fh))
