"""Gaussian mixture representation and numerically stable evaluation.

Provides the core `Mixture` type (validated SPD covariances, cached
precisions), log-domain density/gradient/Hessian evaluation, exponential
tilting, the affine rank of the component means, and the homoscedastic
reduction onto the affine hull of the means.  All objects are immutable
after construction and all operations are pure.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

__all__ = [
    "GaussianComponent",
    "Mixture",
    "AffineMap",
    "evaluate",
    "tilt",
    "affine_rank",
    "reduce_homoscedastic",
    "read_mixture",
    "write_mixture",
    "mixture_from_dict",
    "mixture_to_dict",
    "MixtureFormatError",
]

# Validation tolerances.  The underlying math never fixes these for floating
# point inputs, so they are explicit keyword knobs with these defaults.
COV_SYMMETRY_RTOL = 1e-12
WEIGHT_SUM_TOL = 1e-12
HOMOSCEDASTIC_RTOL = 1e-10
AFFINE_RANK_TOL = 1e-9

_LOG_2PI = float(np.log(2.0 * np.pi))


class MixtureFormatError(ValueError):
    """Raised when a mixture document is malformed."""


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


def _symmetrize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


@dataclass(frozen=True)
class GaussianComponent:
    """One weighted Gaussian: weight alpha, mean mu, SPD covariance Sigma.

    The covariance is validated (symmetry to relative tolerance 1e-12,
    strictly positive spectrum) and its inverse, inverse square root and
    log-determinant are cached at construction, since evaluation may be
    called millions of times per solve.
    """

    weight: float
    mean: np.ndarray
    covariance: np.ndarray
    precision: np.ndarray = field(init=False, repr=False, compare=False)
    sqrt_precision: np.ndarray = field(init=False, repr=False, compare=False)
    log_det_cov: float = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        weight = float(self.weight)
        if not weight > 0.0 or not np.isfinite(weight):
            raise ValueError(f"component weight must be positive and finite, got {weight}")
        mean = _readonly(np.atleast_1d(self.mean))
        if mean.ndim != 1:
            raise ValueError("component mean must be a vector")
        d = mean.shape[0]
        cov = np.array(self.covariance, dtype=float)
        if cov.shape != (d, d):
            raise ValueError(f"covariance shape {cov.shape} does not match dimension {d}")
        scale = np.abs(cov).max()
        if scale == 0.0 or not np.isfinite(scale):
            raise ValueError("covariance must be finite and nonzero")
        if np.abs(cov - cov.T).max() > COV_SYMMETRY_RTOL * scale:
            raise ValueError("covariance is not symmetric within relative tolerance 1e-12")
        cov = _symmetrize(cov)
        eigval, eigvec = np.linalg.eigh(cov)
        if eigval.min() <= 0.0:
            raise ValueError(f"covariance is not positive definite (min eigenvalue {eigval.min():.3e})")
        object.__setattr__(self, "weight", weight)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", _readonly(cov))
        object.__setattr__(self, "precision", _readonly((eigvec / eigval) @ eigvec.T))
        object.__setattr__(self, "sqrt_precision", _readonly((eigvec / np.sqrt(eigval)) @ eigvec.T))
        object.__setattr__(self, "log_det_cov", float(np.log(eigval).sum()))

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    @property
    def log_norm(self) -> float:
        """log of the Gaussian normalizing constant (2pi)^{-d/2} det(Sigma)^{-1/2}."""
        return -0.5 * (self.dim * _LOG_2PI + self.log_det_cov)


@dataclass(frozen=True)
class Mixture:
    """A finite Gaussian mixture density.

    Weights are normalized to sum to one at construction.  Components are
    stored as an immutable tuple; stacked parameter arrays used by the
    evaluators are cached lazily.
    """

    components: tuple[GaussianComponent, ...]

    def __post_init__(self) -> None:
        comps = tuple(self.components)
        if not comps:
            raise ValueError("mixture needs at least one component")
        d = comps[0].dim
        if any(c.dim != d for c in comps):
            raise ValueError("all components must share one dimension")
        total = sum(c.weight for c in comps)
        if not np.isfinite(total) or total <= 0.0:
            raise ValueError("component weights must have a positive finite sum")
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            comps = tuple(
                GaussianComponent(c.weight / total, c.mean, c.covariance) for c in comps
            )
        object.__setattr__(self, "components", comps)

    @classmethod
    def from_arrays(
        cls,
        weights: Sequence[float],
        means: Sequence[Sequence[float]] | np.ndarray,
        covariances: Sequence | np.ndarray | None = None,
        shared_covariance: Sequence | np.ndarray | None = None,
    ) -> "Mixture":
        """Build a mixture from parameter arrays.

        Parameters
        ----------
        weights : (k,) positive reals, normalized automatically.
        means : (k, d) array of component means.
        covariances : (k, d, d) array, one SPD matrix per component.
        shared_covariance : (d, d) SPD matrix used for every component;
            mutually exclusive with `covariances`.
        """
        w = np.atleast_1d(np.asarray(weights, dtype=float))
        m = np.atleast_2d(np.asarray(means, dtype=float))
        if m.shape[0] != w.shape[0]:
            raise ValueError("weights and means disagree on the component count")
        if (covariances is None) == (shared_covariance is None):
            raise ValueError("give exactly one of covariances / shared_covariance")
        if shared_covariance is not None:
            shared = np.asarray(shared_covariance, dtype=float)
            covs = [shared] * w.shape[0]
        else:
            covs = [np.asarray(c, dtype=float) for c in covariances]
            if len(covs) != w.shape[0]:
                raise ValueError("weights and covariances disagree on the component count")
        return cls(tuple(GaussianComponent(wi, mi, ci) for wi, mi, ci in zip(w, m, covs)))

    @property
    def dim(self) -> int:
        return self.components[0].dim

    @property
    def n_components(self) -> int:
        return len(self.components)

    @cached_property
    def weights(self) -> np.ndarray:
        return _readonly([c.weight for c in self.components])

    @cached_property
    def means(self) -> np.ndarray:
        return _readonly([c.mean for c in self.components])

    @cached_property
    def covariances(self) -> np.ndarray:
        return _readonly([c.covariance for c in self.components])

    @cached_property
    def precisions(self) -> np.ndarray:
        return _readonly([c.precision for c in self.components])

    @cached_property
    def log_weights(self) -> np.ndarray:
        return _readonly(np.log(self.weights))

    @cached_property
    def log_norms(self) -> np.ndarray:
        return _readonly([c.log_norm for c in self.components])

    def is_homoscedastic(self, rtol: float = HOMOSCEDASTIC_RTOL) -> bool:
        """True iff all covariances agree entrywise within relative tolerance."""
        ref = self.components[0].covariance
        for c in self.components[1:]:
            denom = max(np.abs(ref).max(), np.abs(c.covariance).max())
            if np.abs(c.covariance - ref).max() > rtol * denom:
                return False
        return True

    # -- evaluation ---------------------------------------------------------

    def log_component_terms(self, x: np.ndarray) -> np.ndarray:
        """Per-component log(alpha_i phi_i(x)) as a (k,) vector."""
        x = self._check_point(x)
        diff = x[None, :] - self.means                       # (k, d)
        quad = np.einsum("ki,kij,kj->k", diff, self.precisions, diff)
        return self.log_weights + self.log_norms - 0.5 * quad

    def log_density(self, x: np.ndarray) -> float:
        return float(logsumexp(self.log_component_terms(x)))

    def responsibilities(self, x: np.ndarray) -> np.ndarray:
        """Normalized component weights w_i(x) = alpha_i phi_i(x) / Phi(x)."""
        terms = self.log_component_terms(x)
        return np.exp(terms - logsumexp(terms))

    def relative_derivatives(self, x: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
        """Log-density plus gradient and Hessian divided by the density.

        Returns (log Phi(x), grad Phi / Phi, Hess Phi / Phi).  The scaled
        derivatives stay representable arbitrarily far into the tails, where
        Phi itself underflows; this is what the solver classifies with.
        """
        x = self._check_point(x)
        terms = self.log_component_terms(x)
        log_value = float(logsumexp(terms))
        w = np.exp(terms - log_value)                        # responsibilities
        diff = x[None, :] - self.means
        b = -np.einsum("kij,kj->ki", self.precisions, diff)  # b_i = -A_i (x - mu_i)
        rel_grad = w @ b
        rel_hess = np.einsum("k,ki,kj->ij", w, b, b) - np.einsum("k,kij->ij", w, self.precisions)
        return log_value, rel_grad, _symmetrize(rel_hess)

    def evaluate(self, x: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
        """Density, gradient and Hessian of the mixture at x.

        The value is assembled in the log domain per component and combined
        with log-sum-exp; gradient and Hessian come from the responsibility
        decomposition, so relative accuracy survives far from the means.
        """
        log_value, rel_grad, rel_hess = self.relative_derivatives(x)
        value = float(np.exp(log_value))
        return value, value * rel_grad, _symmetrize(value * rel_hess)

    def _check_point(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.dim,):
            raise ValueError(f"point of shape {x.shape} does not match dimension {self.dim}")
        if not np.all(np.isfinite(x)):
            raise ValueError("point must be finite")
        return x


# -- module-level operations ------------------------------------------------


def evaluate(mixture: Mixture, x: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """Density, gradient and Hessian of `mixture` at `x`."""
    return mixture.evaluate(x)


def tilt(mixture: Mixture, c: np.ndarray) -> Mixture:
    """The normalized mixture proportional to exp(c.x) Phi(x).

    Component i keeps its covariance, moves its mean to mu_i + Sigma_i c and
    picks up the log-weight increment c.mu_i + c.Sigma_i c / 2; weights are
    renormalized in the log domain.  The dropped positive global factor does
    not move critical points.
    """
    c = np.atleast_1d(np.asarray(c, dtype=float))
    if c.shape != (mixture.dim,):
        raise ValueError(f"tilt vector of shape {c.shape} does not match dimension {mixture.dim}")
    if not np.all(np.isfinite(c)):
        raise ValueError("tilt vector must be finite")
    sigma_c = np.einsum("kij,j->ki", mixture.covariances, c)
    log_w = mixture.log_weights + mixture.means @ c + 0.5 * (c @ sigma_c.T)
    log_w = log_w - logsumexp(log_w)
    new_means = mixture.means + sigma_c
    comps = tuple(
        GaussianComponent(float(np.exp(lw)), mu, comp.covariance)
        for lw, mu, comp in zip(log_w, new_means, mixture.components)
    )
    return Mixture(comps)


def affine_rank(means: Sequence[np.ndarray] | np.ndarray, tol: float = AFFINE_RANK_TOL) -> int:
    """Dimension of the affine hull of the given points.

    Singular values of the matrix with rows mu_i - mu_1 are thresholded at
    tol times the largest one; coincident points give rank 0.
    """
    m = np.atleast_2d(np.asarray(means, dtype=float))
    if m.shape[0] == 0:
        raise ValueError("need at least one mean")
    diff = m[1:] - m[0]
    if diff.size == 0:
        return 0
    s = np.linalg.svd(diff, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > tol * s[0]))


@dataclass(frozen=True)
class AffineMap:
    """The whitening-and-rotation change of variables T(x) = O B (x - a).

    `whiten` is the symmetric inverse square root of the shared covariance,
    `orthogonal` carries the whitened mean differences onto the leading
    coordinates, `base` is the first component mean.
    """

    orthogonal: np.ndarray
    whiten: np.ndarray
    base: np.ndarray

    def __post_init__(self) -> None:
        o = _readonly(self.orthogonal)
        b = _readonly(self.whiten)
        a = _readonly(np.atleast_1d(self.base))
        d = a.shape[0]
        if o.shape != (d, d) or b.shape != (d, d):
            raise ValueError("inconsistent affine map shapes")
        if np.abs(o.T @ o - np.eye(d)).max() > 1e-10:
            raise ValueError("orthogonal factor fails O^T O = I at 1e-10")
        object.__setattr__(self, "orthogonal", o)
        object.__setattr__(self, "whiten", b)
        object.__setattr__(self, "base", a)

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.orthogonal @ (self.whiten @ (x - self.base))

    def inverse(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        return self.base + np.linalg.solve(self.whiten, self.orthogonal.T @ z)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.apply(x)


def reduce_homoscedastic(
    mixture: Mixture,
    rank_tol: float = AFFINE_RANK_TOL,
    hom_rtol: float = HOMOSCEDASTIC_RTOL,
) -> tuple[AffineMap, Mixture, float]:
    """Reduce a homoscedastic mixture onto the affine hull of its means.

    Returns (map, reduced, constant): `map` is T(x) = O B (x - mu_1) with
    B the inverse square root of the shared covariance, `reduced` is the
    r-dimensional unit-covariance mixture over the leading r coordinates of
    the mapped means, and `constant` is (2 pi)^{-(d-r)/2}, so that the
    pushforward density factors as

        Phi(T^{-1}(u, v)) * det(Sigma)^{1/2} = constant * exp(-|v|^2/2) * G(u).

    Raises if the input is heteroscedastic or all means coincide (r = 0); a
    single-Gaussian caller should handle that case directly.
    """
    if not mixture.is_homoscedastic(rtol=hom_rtol):
        raise ValueError("mixture is not homoscedastic at the configured tolerance")
    d = mixture.dim
    base = mixture.means[0]
    whiten = mixture.components[0].sqrt_precision
    rows = (mixture.means - base) @ whiten       # row i = B (mu_i - a), B symmetric
    _, s, vt = np.linalg.svd(rows, full_matrices=True)
    if s.size == 0 or s[0] == 0.0:
        raise ValueError("all means coincide (affine rank 0); reduce has nothing to keep")
    r = int(np.count_nonzero(s > rank_tol * s[0]))
    if r == 0:
        raise ValueError("all means coincide (affine rank 0); reduce has nothing to keep")
    amap = AffineMap(orthogonal=vt, whiten=whiten, base=base)
    reduced_means = rows @ vt.T[:, :r]
    reduced = Mixture.from_arrays(
        weights=mixture.weights,
        means=reduced_means,
        shared_covariance=np.eye(r),
    )
    constant = float((2.0 * np.pi) ** (-0.5 * (d - r)))
    return amap, reduced, constant


# -- mixture file format ------------------------------------------------------


def mixture_from_dict(doc: dict) -> Mixture:
    """Parse the mixture document {"weights", "means", "covariances" | "shared_covariance"}."""
    if not isinstance(doc, dict):
        raise MixtureFormatError("mixture document must be a JSON object")
    for key in ("weights", "means"):
        if key not in doc:
            raise MixtureFormatError(f"missing field '{key}'")
    has_per = "covariances" in doc
    has_shared = "shared_covariance" in doc
    if has_per == has_shared:
        raise MixtureFormatError("need exactly one of 'covariances' / 'shared_covariance'")
    try:
        return Mixture.from_arrays(
            weights=doc["weights"],
            means=doc["means"],
            covariances=doc.get("covariances"),
            shared_covariance=doc.get("shared_covariance"),
        )
    except MixtureFormatError:
        raise
    except (TypeError, ValueError) as exc:
        raise MixtureFormatError(f"invalid mixture parameters: {exc}") from exc


def mixture_to_dict(mixture: Mixture) -> dict:
    """Mixture document as plain Python lists; uses 'shared_covariance' when exact."""
    doc: dict = {
        "weights": mixture.weights.tolist(),
        "means": mixture.means.tolist(),
    }
    covs = mixture.covariances
    if all(np.array_equal(c, covs[0]) for c in covs[1:]):
        doc["shared_covariance"] = covs[0].tolist()
    else:
        doc["covariances"] = covs.tolist()
    return doc


def _render_json(value, indent: int = 0) -> str:
    # Hand-rolled emitter so that every float carries 17 significant digits
    # (full double round-trip) regardless of json module repr choices.
    pad = " " * indent
    if isinstance(value, dict):
        items = ",\n".join(
            f'{pad}  "{k}": {_render_json(v, indent + 2).lstrip()}' for k, v in value.items()
        )
        return f"{pad}{{\n{items}\n{pad}}}"
    if isinstance(value, list):
        if value and isinstance(value[0], (list, dict)):
            items = ",\n".join(_render_json(v, indent + 2) for v in value)
            return f"{pad}[\n{items}\n{pad}]"
        return pad + "[" + ", ".join(_render_json(v).lstrip() for v in value) + "]"
    if isinstance(value, bool):
        return pad + ("true" if value else "false")
    if isinstance(value, float):
        return pad + format(value, ".17g")
    if isinstance(value, int):
        return pad + str(value)
    return pad + json.dumps(value)


def write_mixture(mixture: Mixture, path) -> None:
    """Write the mixture file with 17-significant-digit decimals."""
    text = _render_json(mixture_to_dict(mixture)) + "\n"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def read_mixture(path) -> Mixture:
    """Read a mixture file; weights are normalized on load."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MixtureFormatError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}") from exc
    return mixture_from_dict(doc)
