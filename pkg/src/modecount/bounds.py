"""Exact-integer bound formulas, crossover searches, and reference tables.

Every bound is evaluated in arbitrary-precision integer arithmetic; no
floating point enters any formula.  A `BoundValue` pairs the exact integer
with a deterministic 3-significant-digit scientific rendering used by the
table emitters.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from decimal import Context, ROUND_HALF_EVEN
from typing import Callable, Iterable, Sequence

__all__ = [
    "BoundValue",
    "SeedTriple",
    "SeedRecipe",
    "UPPER_FAMILIES",
    "LOWER_FAMILIES",
    "CROSSOVER_KINDS",
    "upper_bound",
    "lower_bound",
    "mode_bound_from_critical",
    "aim_conjecture",
    "crossover_dimension",
    "ray_ren_family",
    "simplex_family",
    "seed_closure_bound",
    "table_rows",
    "render_table_text",
    "render_table_csv",
]

UPPER_FAMILIES = ("AEH", "HET", "AUG", "HOM", "AUG_HOM", "BEST", "BEST_HOM", "CRIT", "CRIT_HOM")
LOWER_FAMILIES = ("AEH_L", "BIN", "PP", "BEST_L")
CROSSOVER_KINDS = ("AUG_VS_HET", "AUG_VS_AEH", "PP_VS_BIN")

_RENDER_CTX = Context(prec=3, rounding=ROUND_HALF_EVEN)


def _binom(n: int, r: int) -> int:
    """Binomial coefficient with the convention C(n, r) = 0 outside 0 <= r <= n."""
    if r < 0 or n < 0 or r > n:
        return 0
    return math.comb(n, r)


def _render(exact: int) -> str:
    if exact < 1000:
        return str(exact)
    quantized = _RENDER_CTX.create_decimal(exact)
    sign, digits, exp = quantized.as_tuple()
    ds = "".join(map(str, digits)).ljust(3, "0")
    return f"{ds[0]}.{ds[1:3]}e{exp + len(digits) - 1}"


@dataclass(frozen=True, order=True)
class BoundValue:
    """An exact nonnegative integer plus its 3-significant-digit rendering."""

    exact: int

    def __post_init__(self) -> None:
        if self.exact < 0:
            raise ValueError("bound values are nonnegative")

    @property
    def rendered(self) -> str:
        return _render(self.exact)

    def __str__(self) -> str:
        return self.rendered

    def __int__(self) -> int:
        return self.exact


@dataclass(frozen=True, order=True)
class SeedTriple:
    """Witness triple (dim, comps, modes): `comps` components in R^dim with `modes` modes."""

    dim: int
    comps: int
    modes: int

    def __post_init__(self) -> None:
        if self.dim < 1 or self.comps < 1 or self.modes < 1:
            raise ValueError("seed triple entries must be positive")


@dataclass(frozen=True)
class SeedRecipe:
    """A composition plan: product of seeds, lifted to `lift_to` dims, plus `pad` remote components."""

    seeds: tuple[SeedTriple, ...]
    lift_to: int
    pad: int
    value: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "seeds", tuple(self.seeds))
        if self.pad < 0:
            raise ValueError("padding count must be nonnegative")
        if sum(s.dim for s in self.seeds) > self.lift_to:
            raise ValueError("seed dimensions exceed the lift target")
        if self.value != self.pad + math.prod(s.modes for s in self.seeds):
            raise ValueError("recipe value must equal pad + product of seed modes")

    @property
    def total_components(self) -> int:
        return math.prod(s.comps for s in self.seeds) + self.pad


# -- closed forms -------------------------------------------------------------


def _u_het(d: int, k: int) -> int:
    return 2 ** (d + _binom(k - 1, 2)) * (d + 2 * min(d, k - 1) + 1) ** (k - 1)


def _u_aug(d: int, k: int) -> int:
    return 2 ** _binom(k - 1, 2) * (d + 1) * ((2 * k - 1) * d + 2 * k - 1) ** (k - 1)


def _u_aeh(d: int, k: int) -> int:
    return 2 ** (d + _binom(k, 2)) * (5 + 3 * d) ** k


def _u_hom(r: int, k: int) -> int:
    return 2 ** (r + _binom(k - 1, 2)) * (r + min(r, k - 1) + 1) ** (k - 1)


def _u_aug_hom(k: int) -> int:
    return 2 ** (_binom(k - 1, 2) + 1) * (2 * k) ** (k - 1)


def _u_crit(d: int, k: int) -> int:
    return 2 ** (_binom(k - 1, 2) + 2) * 5 ** (d - 1) * (6 * d - 2) ** (k - 1)


def _u_crit_hom(r: int, k: int) -> int:
    return 2 ** (_binom(k - 1, 2) + 2) * 4 ** (r - 1) * (4 * r - 1) ** (k - 1)


def upper_bound(family: str, d: int, k: int | None = None) -> BoundValue:
    """Exact upper bound of the given family on critical points / modes.

    For the dimension-dependent families the arguments are (d, k); the
    intrinsic-rank families HOM, BEST_HOM and CRIT_HOM read the first
    argument as the affine rank r >= 1.  AUG_HOM depends on k alone and
    accepts `upper_bound("AUG_HOM", k)`.
    """
    family = family.upper()
    if family not in UPPER_FAMILIES:
        raise ValueError(f"unknown upper bound family {family!r}")
    if family == "AUG_HOM" and k is None:
        d, k = 1, d
    if k is None:
        raise ValueError("missing component count k")
    d, k = int(d), int(k)
    if k < 2:
        raise ValueError("upper bounds need k >= 2")
    if d < 1:
        raise ValueError("dimension (or rank) must be >= 1; rank 0 means one critical point")
    if family == "HET":
        return BoundValue(_u_het(d, k))
    if family == "AUG":
        return BoundValue(_u_aug(d, k))
    if family == "AEH":
        return BoundValue(_u_aeh(d, k))
    if family == "HOM":
        return BoundValue(_u_hom(d, k))
    if family == "AUG_HOM":
        return BoundValue(_u_aug_hom(k))
    if family == "BEST":
        return BoundValue(min(_u_het(d, k), _u_aug(d, k)))
    if family == "BEST_HOM":
        return BoundValue(min(_u_hom(d, k), _u_aug(d, k), _u_aug_hom(k)))
    if family == "CRIT":
        return BoundValue(_u_crit(d, k))
    return BoundValue(_u_crit_hom(d, k))


def mode_bound_from_critical(u: BoundValue | int) -> BoundValue:
    """Mode bound floor((U + 1) / 2) from a critical-point bound."""
    n = int(u)
    if n < 0:
        raise ValueError("critical-point bound must be nonnegative")
    return BoundValue((n + 1) // 2)


def _l_aeh(d: int, k: int) -> int:
    return _binom(k, d) + k


def _l_bin(d: int, k: int) -> int:
    return k + max(_binom(k, r) for r in range(2, min(d, k) + 1))


def _l_pp(d: int, k: int) -> int:
    s_max = min(d, k.bit_length() - 1)   # floor(log2 k)
    best = 0
    for s in range(1, s_max + 1):
        q, rem = divmod(d, s)
        best = max(best, k - 2 ** s + (q + 1) ** (s - rem) * (q + 2) ** rem)
    return best


def lower_bound(family: str, d: int, k: int) -> BoundValue:
    """Exact lower bound on the attainable mode count."""
    family = family.upper()
    if family not in LOWER_FAMILIES:
        raise ValueError(f"unknown lower bound family {family!r}")
    d, k = int(d), int(k)
    if k < 2:
        raise ValueError("lower bounds need k >= 2")
    if family == "PP":
        if d < 1:
            raise ValueError("PP needs d >= 1")
        return BoundValue(_l_pp(d, k))
    if d < 2:
        raise ValueError(f"{family} needs d >= 2")
    if family == "AEH_L":
        return BoundValue(_l_aeh(d, k))
    if family == "BIN":
        return BoundValue(_l_bin(d, k))
    return BoundValue(max(_l_bin(d, k), _l_pp(d, k)))


def aim_conjecture(d: int, k: int) -> BoundValue:
    """The conjectural extremal mode count C(d + k - 1, d)."""
    d, k = int(d), int(k)
    if d < 1 or k < 1:
        raise ValueError("need d >= 1 and k >= 1")
    return BoundValue(_binom(d + k - 1, d))


# -- crossover searches --------------------------------------------------------


def crossover_dimension(kind: str, k: int, d_max: int = 200) -> int | None:
    """Smallest dimension where one bound family overtakes another.

    AUG_VS_HET / AUG_VS_AEH scan d = 1..d_max for the first d with
    U_aug <= U_het (resp. U_aug <= U_AEH); PP_VS_BIN scans d = 2..d_max for
    the first d with L_pp > L_bin.  Returns None when no crossover occurs
    within d_max.
    """
    kind = kind.upper()
    if kind not in CROSSOVER_KINDS:
        raise ValueError(f"unknown crossover kind {kind!r}")
    k, d_max = int(k), int(d_max)
    if k < 2 or d_max < 1:
        raise ValueError("need k >= 2 and d_max >= 1")
    if kind == "AUG_VS_HET":
        start, hit = 1, lambda d: _u_aug(d, k) <= _u_het(d, k)
    elif kind == "AUG_VS_AEH":
        start, hit = 1, lambda d: _u_aug(d, k) <= _u_aeh(d, k)
    else:
        start, hit = 2, lambda d: _l_pp(d, k) > _l_bin(d, k)
    for d in range(start, d_max + 1):
        if hit(d):
            return d
    return None


# -- seed closure ---------------------------------------------------------------


def ray_ren_family(d: int, k: int) -> list[SeedTriple]:
    """Seed triples (s, 2, s+1) for 1 <= s <= d, truncated to the budget."""
    if k < 2:
        return []
    return [SeedTriple(s, 2, s + 1) for s in range(1, d + 1)]


def simplex_family(d: int, k: int) -> list[SeedTriple]:
    """Seed triples (K-1, K, K+1) for 3 <= K, truncated to the budget."""
    return [SeedTriple(K - 1, K, K + 1) for K in range(3, k + 1) if K - 1 <= d]


def seed_closure_bound(
    d: int, k: int, family: Sequence[SeedTriple] | Callable[[int, int], Iterable[SeedTriple]]
) -> tuple[BoundValue, SeedRecipe]:
    """Best mode count from products of seeds, lifting, and remote padding.

    Maximizes k - K + prod(modes) over seed multisets with total dimension
    <= d and total component product K <= k.  `family` is either an explicit
    triple list or a generator function like `ray_ren_family`.  The search is
    exhaustive over canonically ordered lists with memoized suffix states, so
    the returned recipe is deterministic; the empty list (pure padding) is
    always admissible and gives k modes.
    """
    d, k = int(d), int(k)
    if d < 1 or k < 2:
        raise ValueError("need d >= 1 and k >= 2")
    triples = family(d, k) if callable(family) else list(family)
    seeds = sorted(
        {(s.dim, s.comps, s.modes) for s in triples if s.dim <= d and s.comps <= k}
    )

    # State: (next seed index, dimension budget, multiplicative component
    # budget).  Values: achievable (K, modes-product) pairs for the suffix,
    # pruned to the (K min, modes max) Pareto frontier with witness lists.
    memo: dict[tuple[int, int, int], list[tuple[int, int, tuple]]] = {}

    def suffix(idx: int, dim_left: int, comp_budget: int) -> list[tuple[int, int, tuple]]:
        key = (idx, dim_left, comp_budget)
        if key in memo:
            return memo[key]
        found: dict[tuple[int, int], tuple] = {(1, 1): ()}
        for j in range(idx, len(seeds)):
            dim_j, comp_j, modes_j = seeds[j]
            if dim_j > dim_left or comp_j > comp_budget:
                continue
            for comps, modes, chosen in suffix(j, dim_left - dim_j, comp_budget // comp_j):
                cand = (comp_j * comps, modes_j * modes)
                witness = (seeds[j],) + chosen
                if cand not in found or witness < found[cand]:
                    found[cand] = witness
        pareto: list[tuple[int, int, tuple]] = []
        for (comps, modes), witness in sorted(found.items()):
            if any(pc <= comps and pm >= modes for pc, pm, _ in pareto):
                continue
            pareto = [p for p in pareto if not (comps <= p[0] and modes >= p[1])]
            pareto.append((comps, modes, witness))
        memo[key] = pareto
        return pareto

    # Ties prefer seed-heavy recipes (larger component product, so less
    # padding), then the lexicographically smallest seed list.
    best = None
    for comps, modes, witness in suffix(0, d, k):
        value = k - comps + modes
        if (
            best is None
            or (value, comps) > (best[0], best[1])
            or ((value, comps) == (best[0], best[1]) and witness < best[2])
        ):
            best = (value, comps, witness)
    assert best is not None
    best_value, _, best_witness = best
    chosen = tuple(SeedTriple(*t) for t in best_witness)
    recipe = SeedRecipe(
        seeds=chosen,
        lift_to=d,
        pad=k - math.prod(t.comps for t in chosen),
        value=best_value,
    )
    return BoundValue(best_value), recipe


# -- reference tables ------------------------------------------------------------

# Row sets exactly as printed in the source tables.
GENERAL_ROWS = ((2, 2), (2, 3), (2, 4), (3, 3), (3, 4), (4, 4), (4, 5), (5, 5), (10, 4), (10, 5))
HOM_ROWS = ((1, 2), (1, 3), (2, 3), (1, 4), (2, 4), (3, 4), (1, 5), (2, 5), (3, 5), (4, 5))
CROSSOVER_K_RANGE = tuple(range(2, 12))


def table_rows(which: int, d_max: int = 200) -> list[dict]:
    """Rows of reference table 1..4 as dicts with keys d, k, family, value.

    Table 1: upper-bound crossover dimensions per k.  Table 2: conjectural
    count and upper bounds, general block then homoscedastic block (rows of
    the latter with r > k - 1 carry realizable=False).  Table 3: lower-bound
    crossover dimensions.  Table 4: conjectural count and lower bounds.
    """
    rows: list[dict] = []
    if which == 1:
        for kind, fam in (("AUG_VS_HET", "d_star"), ("AUG_VS_AEH", "d_aeh")):
            for k in CROSSOVER_K_RANGE:
                d = crossover_dimension(kind, k, d_max)
                rows.append({"d": None, "k": k, "family": fam,
                             "value": None if d is None else BoundValue(d)})
    elif which == 2:
        for d, k in GENERAL_ROWS:
            for fam, val in (
                ("M_AIM", aim_conjecture(d, k)),
                ("BEST", upper_bound("BEST", d, k)),
                ("HET", upper_bound("HET", d, k)),
                ("AUG", upper_bound("AUG", d, k)),
                ("AEH", upper_bound("AEH", d, k)),
            ):
                rows.append({"d": d, "k": k, "family": fam, "value": val})
        for r, k in HOM_ROWS:
            realizable = r <= k - 1
            for fam, val in (
                ("M_AIM", aim_conjecture(r, k)),
                ("BEST_HOM", upper_bound("BEST_HOM", r, k)),
                ("HOM", upper_bound("HOM", r, k)),
                ("AUG", upper_bound("AUG", r, k)),
                ("AUG_HOM", upper_bound("AUG_HOM", k)),
            ):
                rows.append({"d": r, "k": k, "family": fam, "value": val,
                             "realizable": realizable})
    elif which == 3:
        for k in CROSSOVER_K_RANGE:
            d = crossover_dimension("PP_VS_BIN", k, d_max)
            rows.append({"d": None, "k": k, "family": "d_pp",
                         "value": None if d is None else BoundValue(d)})
    elif which == 4:
        for d, k in GENERAL_ROWS:
            for fam, val in (
                ("M_AIM", aim_conjecture(d, k)),
                ("AEH_L", lower_bound("AEH_L", d, k)),
                ("BIN", lower_bound("BIN", d, k)),
                ("PP", lower_bound("PP", d, k)),
                ("BEST_L", lower_bound("BEST_L", d, k)),
            ):
                rows.append({"d": d, "k": k, "family": fam, "value": val})
    else:
        raise ValueError("table number must be 1, 2, 3 or 4")
    return rows


def render_table_csv(which: int, d_max: int = 200) -> str:
    """CSV rendering with columns exactly d,k,family,exact,rendered."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["d", "k", "family", "exact", "rendered"])
    for row in table_rows(which, d_max):
        val: BoundValue | None = row["value"]
        family = row["family"]
        if row.get("realizable") is False:
            family += " (not realizable)"
        writer.writerow([
            "" if row["d"] is None else row["d"],
            row["k"],
            family,
            "" if val is None else val.exact,
            "" if val is None else val.rendered,
        ])
    return out.getvalue()


def _format_grid(header: list[str], lines: list[list[str]]) -> str:
    widths = [max(len(h), *(len(line[i]) for line in lines)) for i, h in enumerate(header)]
    fmt = "  ".join(f"{{:>{w}}}" for w in widths)
    out = [fmt.format(*header), fmt.format(*("-" * w for w in widths))]
    out.extend(fmt.format(*line) for line in lines)
    return "\n".join(out) + "\n"


def render_table_text(which: int, d_max: int = 200) -> str:
    """Aligned plain-text rendering mirroring the printed table layout."""
    rows = table_rows(which, d_max)
    if which in (1, 3):
        ks = [str(r["k"]) for r in rows if r["family"] in ("d_star", "d_pp")]
        lines = []
        for fam in dict.fromkeys(r["family"] for r in rows):
            vals = [("-" if r["value"] is None else str(r["value"].exact))
                    for r in rows if r["family"] == fam]
            lines.append([fam] + vals)
        return _format_grid(["k"] + ks, lines)

    blocks: dict[tuple, dict] = {}
    for r in rows:
        key = (r["d"], r["k"], r.get("realizable", True))
        blocks.setdefault(key, {})[r["family"]] = r["value"]
    header_fams = list(dict.fromkeys(r["family"] for r in rows))
    lines = []
    for (d, k, realizable), vals in blocks.items():
        line = [str(d), str(k)]
        for fam in header_fams:
            v = vals.get(fam)
            line.append("" if v is None else v.rendered)
        line.append("" if realizable else "not realizable")
        lines.append(line)
    return _format_grid(["d/r", "k"] + header_fams + ["note"], lines)
