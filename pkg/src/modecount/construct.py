"""Witness constructions: simplex seeds, lifting, products, remote padding.

These builders realize the lower-bound witnesses as concrete mixtures and
verify the claimed mode counts with the solver.  The guiding principle:
formulas propose, the solver disposes.  A recipe that cannot be verified
numerically raises instead of returning an unchecked witness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag
from scipy.optimize import brentq

from .bounds import SeedRecipe, SeedTriple
from .mixture import Mixture, tilt
from .solver import SolverConfig, SolveReport, find_critical_points

__all__ = [
    "PaddingSpec",
    "PaddingError",
    "RecipeError",
    "RecipeVerificationError",
    "simplex_vertices",
    "simplex_seed",
    "radial_critical_roots",
    "lift",
    "product",
    "pad_remote",
    "realize_recipe",
    "tilt_polish",
]

DEFAULT_EPSILON = 0.1
REALIZE_EPSILON = 0.05
TILT_SEED = 0x5EED
TILT_MAGNITUDE = 1e-3
PAD_BOUNDARY_SEED = 0xBD
MAX_SEPARATION_DOUBLINGS = 40


class PaddingError(RuntimeError):
    """Remote padding could not certify the boundary inequalities."""


class RecipeError(ValueError):
    """A recipe references seeds that cannot be built."""


class RecipeVerificationError(RuntimeError):
    """A realized witness fell short of its claimed mode count."""

    def __init__(self, claimed: int, achieved: int, message: str | None = None):
        self.claimed = claimed
        self.achieved = achieved
        super().__init__(
            message
            or f"witness verification shortfall: claimed {claimed} modes, solver verified {achieved}"
        )


def simplex_vertices(n: int) -> np.ndarray:
    """K = n+1 unit vectors in R^n forming a regular simplex.

    Built from the centered identity: rows of I_K - (1/K)J span the
    sum-zero hyperplane; an orthonormal basis of that hyperplane (QR with a
    fixed sign convention, hence deterministic) maps them into R^n, and the
    sqrt(K/n) rescale makes them unit length with pairwise inner product
    -1/n and zero sum.
    """
    if n < 1:
        raise ValueError("simplex dimension must be at least 1")
    k = n + 1
    centered = np.eye(k) - 1.0 / k
    q, r = np.linalg.qr(centered[:, :n])
    q = q * np.sign(np.diag(r))
    return math.sqrt(k / n) * (centered @ q)


def simplex_seed(K: int, epsilon: float = DEFAULT_EPSILON) -> tuple[Mixture, int]:
    """Equal-weight homoscedastic mixture on regular-simplex vertices.

    K components in R^{K-1} with covariance tau*I, tau = (1+epsilon)/(K-1).
    For small epsilon the density has K+1 modes: the center plus one on
    each vertex ray.  Returns (mixture, expected_modes); the expectation is
    a claim to verify, not a certificate (larger epsilon values cross a
    fold where the ray modes vanish).
    """
    if K < 3:
        raise ValueError("simplex seeds need K >= 3 components")
    if not 0.0 < epsilon <= 0.2:
        raise ValueError("epsilon must lie in (0, 0.2]: the center is a strict "
                         "maximum only for tau > 1/n, and large epsilon loses the ray modes")
    n = K - 1
    tau = (1.0 + epsilon) / n
    vertices = simplex_vertices(n)
    weights = np.full(K, 1.0 / K)
    mixture = Mixture.from_arrays(weights, vertices, shared_covariance=tau * np.eye(n))
    return mixture, K + 1


def radial_critical_roots(n: int, a: float, grid: int = 10_000, tol: float = 1e-12) -> list[float]:
    """Roots in (0, 1) of (1-t)e^{at} = 1+nt, the ray criticality equation.

    Scans ell_a(t) = log(1-t) + a t - log(1+nt) on a uniform grid and
    refines each sign change by bisection.  The root t = 0 is excluded by
    the open interval.  Returns an ascending list, possibly empty: the
    equation has two roots only for a in a window below n+1.
    """
    if n < 2:
        raise ValueError("ray analysis needs n >= 2")
    if a <= 0.0:
        raise ValueError("rate parameter a must be positive")

    def ell(t: float) -> float:
        return math.log1p(-t) + a * t - math.log1p(n * t)

    ts = np.linspace(0.0, 1.0, grid + 1)[1:-1]
    values = np.array([ell(t) for t in ts])
    roots: list[float] = []
    for i, (t, v) in enumerate(zip(ts, values)):
        if v == 0.0:
            roots.append(float(t))
        elif i + 1 < len(ts) and values[i + 1] != 0.0 and v * values[i + 1] < 0.0:
            roots.append(float(brentq(ell, t, ts[i + 1], xtol=tol * 1e-2)))
    return roots


def lift(mixture: Mixture, target_dim: int, pad_covariance: np.ndarray | float | None = None) -> Mixture:
    """Embed a mixture in a higher dimension with a centered Gaussian factor.

    Means gain zero coordinates; covariances gain a block `pad_covariance`
    (identity by default, a scalar is taken as a multiple of the identity).
    Lifting a homoscedastic mixture keeps it homoscedastic, and the lifted
    modes are exactly the base modes with zero pad coordinates.
    """
    d = mixture.dim
    extra = target_dim - d
    if extra <= 0:
        raise ValueError(f"target dimension {target_dim} must exceed the current dimension {d}")
    if pad_covariance is None:
        pad = np.eye(extra)
    else:
        pad = np.asarray(pad_covariance, dtype=float)
        if pad.ndim == 0:
            pad = float(pad) * np.eye(extra)
    if pad.shape != (extra, extra):
        raise ValueError(f"pad covariance must be {extra}x{extra}, got {pad.shape}")
    means = np.hstack([mixture.means, np.zeros((mixture.n_components, extra))])
    covs = np.array([block_diag(c, pad) for c in mixture.covariances])
    return Mixture.from_arrays(mixture.weights, means, covs)


def product(m1: Mixture, m2: Mixture) -> Mixture:
    """Cartesian product density: k1*k2 components in dimension d1+d2.

    Weights multiply, means concatenate, covariances stack block-diagonally.
    The modal set is the product of the factors' modal sets.
    """
    weights = []
    means = []
    covs = []
    for c1 in m1.components:
        for c2 in m2.components:
            weights.append(c1.weight * c2.weight)
            means.append(np.concatenate([c1.mean, c2.mean]))
            covs.append(block_diag(c1.covariance, c2.covariance))
    return Mixture.from_arrays(np.array(weights), np.array(means), np.array(covs))


@dataclass(frozen=True)
class PaddingSpec:
    """Remote padding parameters: how many components, how far, what weight."""

    count: int
    separation_factor: float = 1.5
    weight_theta: float = 0.25

    def __post_init__(self) -> None:
        if self.count < 0:
            raise ValueError("padding count must be nonnegative")
        if self.separation_factor <= 0.0:
            raise ValueError("separation factor must be positive")
        if not 0.0 < self.weight_theta <= 0.5:
            raise ValueError("padding weight theta must lie in (0, 1/2]")


def _sphere_directions(d: int, rng: np.random.Generator, extra: int = 32) -> np.ndarray:
    """Axis directions plus seeded random unit vectors for boundary sampling."""
    axes = np.vstack([np.eye(d), -np.eye(d)])
    if d == 1:
        return axes
    raw = rng.standard_normal((extra, d))
    raw /= np.linalg.norm(raw, axis=1, keepdims=True)
    return np.vstack([axes, raw])


def _ball_certifies_mode(mixture: Mixture, center: np.ndarray, radius: float,
                         directions: np.ndarray) -> bool:
    """Strict boundary test: density at the center beats every sampled boundary point.

    A strict interior maximum of the closed ball certifies a local maximum
    inside it.
    """
    center_log = mixture.log_density(center)
    for direction in directions:
        if mixture.log_density(center + radius * direction) >= center_log:
            return False
    return True


def _max_std(mixture: Mixture) -> float:
    return math.sqrt(max(float(np.linalg.eigvalsh(c)[-1]) for c in mixture.covariances))


def _means_diameter(points: np.ndarray) -> float:
    if len(points) < 2:
        return 0.0
    return max(
        float(np.linalg.norm(points[i] - points[j]))
        for i in range(len(points)) for j in range(i + 1, len(points))
    )


def pad_remote(
    mixture: Mixture,
    spec: PaddingSpec,
    base_report: SolveReport | None = None,
    config: SolverConfig | None = None,
    seed: int = PAD_BOUNDARY_SEED,
) -> Mixture:
    """Add `spec.count` remote low-weight components, one per guaranteed new mode.

    Each new center goes out along a cycling axis direction at distance
    separation_factor * (mean diameter + 10 * max standard deviation); the
    new component takes weight theta, the rest rescale by (1 - theta).  The
    placement is accepted only when a numerical boundary test certifies a
    mode near every retained witness location and near the new center,
    doubling the separation until the test passes (error after 40
    doublings).  The new component reuses the shared covariance when the
    base is homoscedastic, the identity otherwise.
    """
    if spec.count == 0:
        return mixture
    config = config or SolverConfig()
    if base_report is None:
        base_report = find_critical_points(mixture, config)
    mode_locations = [np.array(p.location) for p in base_report.points if p.is_mode]
    if not mode_locations:
        raise PaddingError("base mixture has no verified modes to retain")
    rng = np.random.default_rng(seed)
    current = mixture
    d = mixture.dim
    directions = _sphere_directions(d, rng)

    for j in range(spec.count):
        axis = np.zeros(d)
        axis[j % d] = 1.0 if (j // d) % 2 == 0 else -1.0
        all_centers = np.vstack([current.means, np.vstack(mode_locations)])
        base_distance = spec.separation_factor * (_means_diameter(all_centers) + 10.0 * _max_std(current))
        new_cov = (
            current.covariances[0].copy() if current.is_homoscedastic() else np.eye(d)
        )
        theta = spec.weight_theta
        placed = None
        distance = base_distance
        for _ in range(MAX_SEPARATION_DOUBLINGS):
            center = distance * axis
            weights = np.concatenate([current.weights * (1.0 - theta), [theta]])
            means = np.vstack([current.means, center])
            covs = np.concatenate([current.covariances, new_cov[None, :, :]])
            candidate = Mixture.from_arrays(weights, means, covs)

            ok = True
            retained = mode_locations + [center]
            for i, loc in enumerate(retained):
                neighbor = min(
                    (np.linalg.norm(loc - other) for m, other in enumerate(retained) if m != i),
                    default=math.inf,
                )
                if i < len(mode_locations):
                    radius = min(1e-3 * (1.0 + float(np.linalg.norm(loc))), neighbor / 3.0)
                else:
                    radius = min(2.0 * math.sqrt(float(np.linalg.eigvalsh(new_cov)[-1])), neighbor / 3.0)
                if radius <= 0.0 or not _ball_certifies_mode(candidate, loc, radius, directions):
                    ok = False
                    break
            if ok:
                placed = (candidate, center)
                break
            distance *= 2.0
        if placed is None:
            raise PaddingError(
                f"boundary test failed for padding component {j + 1} after "
                f"{MAX_SEPARATION_DOUBLINGS} separation doublings (last distance {distance:.3e})"
            )
        current, center = placed
        mode_locations.append(center)
    return current


def tilt_polish(
    mixture: Mixture,
    config: SolverConfig | None = None,
    magnitude: float = TILT_MAGNITUDE,
    seed: int = TILT_SEED,
    retries: int = 5,
) -> tuple[Mixture, SolveReport]:
    """Small generic exponential tilt to clear near-degenerate critical points.

    Tilting by e^{c.x} perturbs the critical configuration without changing
    component count; for generic small c all critical points become
    nondegenerate.  Retries with halved magnitude, fixed RNG seed.
    Returns the first all-nondegenerate (tilted mixture, report) pair, or
    the last attempt if none succeeds.
    """
    config = config or SolverConfig()
    rng = np.random.default_rng(seed)
    last: tuple[Mixture, SolveReport] | None = None
    for _ in range(max(1, retries)):
        direction = rng.standard_normal(mixture.dim)
        direction /= np.linalg.norm(direction)
        tilted = tilt(mixture, magnitude * direction)
        report = find_critical_points(tilted, config)
        last = (tilted, report)
        if report.all_nondegenerate:
            return last
        magnitude *= 0.5
    assert last is not None
    return last


def _build_seed(
    triple: SeedTriple,
    registry: dict[SeedTriple, object] | None,
    epsilon: float,
) -> tuple[Mixture, int]:
    if registry and triple in registry:
        mixture, expected = registry[triple](triple)  # type: ignore[operator]
        return mixture, int(expected)
    if triple == SeedTriple(1, 2, 2):
        # well-separated symmetric pair: two clean modes straddling a saddle
        means = np.array([[-2.0], [2.0]])
        mixture = Mixture.from_arrays(np.array([0.5, 0.5]), means, shared_covariance=np.eye(1))
        return mixture, 2
    if triple.dim == triple.comps - 1 and triple.modes == triple.comps + 1 and triple.comps >= 3:
        return simplex_seed(triple.comps, epsilon)
    raise RecipeError(
        f"no builder for seed triple ({triple.dim}, {triple.comps}, {triple.modes}); "
        "register one explicitly to realize this recipe"
    )


def realize_recipe(
    recipe: SeedRecipe,
    registry: dict[SeedTriple, object] | None = None,
    epsilon: float = REALIZE_EPSILON,
    config: SolverConfig | None = None,
    padding: PaddingSpec | None = None,
    pad_seed: int = PAD_BOUNDARY_SEED,
    tilt_seed: int = TILT_SEED,
) -> tuple[Mixture, dict]:
    """Build a witness mixture from a recipe and verify its mode count.

    Seeds are built natively (simplex triples and the 1-d pair (1,2,2)) or
    through the registry, chained by Cartesian product, lifted to
    recipe.lift_to dimensions, then remote-padded with recipe.pad extra
    components.  The solver must confirm at least recipe.value modes; a
    shortfall raises RecipeVerificationError carrying the achieved count.
    Near-degenerate outcomes get one tilt-polish pass before the verdict.

    Returns (witness, provenance) where provenance records the recipe, the
    claim, the verified count, and the tolerances used.
    """
    config = config or SolverConfig()
    if recipe.seeds:
        witness: Mixture | None = None
        for triple in recipe.seeds:
            seed_mix, _ = _build_seed(triple, registry, epsilon)
            witness = seed_mix if witness is None else product(witness, seed_mix)
        assert witness is not None
    else:
        base_dim = max(recipe.lift_to, 1)
        witness = Mixture.from_arrays(
            np.array([1.0]), np.zeros((1, base_dim)), shared_covariance=np.eye(base_dim),
        )
    if witness.dim < recipe.lift_to:
        witness = lift(witness, recipe.lift_to)

    report = find_critical_points(witness, config)
    if recipe.pad > 0:
        pad_spec = padding or PaddingSpec(count=recipe.pad)
        if pad_spec.count != recipe.pad:
            raise ValueError("padding spec count disagrees with the recipe pad count")
        witness = pad_remote(witness, pad_spec, base_report=report, config=config, seed=pad_seed)
        report = find_critical_points(witness, config)

    tilted = False
    if not report.all_nondegenerate:
        witness, report = tilt_polish(witness, config, seed=tilt_seed)
        tilted = True

    achieved = report.n_modes
    provenance = {
        "seeds": [[s.dim, s.comps, s.modes] for s in recipe.seeds],
        "lift_to": recipe.lift_to,
        "pad": recipe.pad,
        "claimed_modes": recipe.value,
        "verified_modes": achieved,
        "n_critical": report.n_critical,
        "all_nondegenerate": report.all_nondegenerate,
        "epsilon": epsilon,
        "tilt_applied": tilted,
        "tolerances": {
            "newton_tol": config.newton_tol,
            "dedup_tol": config.dedup_tol,
            "degeneracy_tol": config.degeneracy_tol,
            "grad_accept_tol": config.grad_accept_tol,
        },
    }
    if achieved < recipe.value:
        raise RecipeVerificationError(recipe.value, achieved)
    return witness, provenance
