"""Design-matrix generation and gram-matrix factorizations.

Two design classes are supported: exactly orthogonal designs (X/sqrt(n) has
orthonormal columns) and isotropic sub-gaussian designs with i.i.d. rows
(gaussian or rademacher entries).  Everything downstream whitens through the
symmetric square root of X'X, so the factorization is computed spectrally
rather than by Cholesky.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

FAMILIES = ("orthogonal", "gaussian", "rademacher")

# Relative eigenvalue floor below which X'X is treated as singular.
EIG_REL_TOL = 1e-12
# Attempts before a degenerate family draw becomes an error.
MAX_REJECTED_DRAWS = 10


class DimensionError(ValueError):
    """Raised when matrix dimensions are incompatible with the request."""


class SingularDesignError(ValueError):
    """Raised when X'X is numerically singular."""


@dataclass(frozen=True)
class DesignMatrix:
    """An n x p design with provenance metadata.

    `entries` is immutable; share freely across threads.
    """

    entries: np.ndarray = field(repr=False)
    family: str
    n: int
    p: int
    seed: int

    def __post_init__(self):
        self.entries.setflags(write=False)

    @cached_property
    def gram(self) -> np.ndarray:
        g = self.entries.T @ self.entries
        g = (g + g.T) / 2.0
        g.setflags(write=False)
        return g

    @cached_property
    def factorization(self) -> "GramFactorization":
        return gram_factorize(self)


@dataclass(frozen=True)
class GramFactorization:
    """Spectral (X'X)^(-1/2) and (X'X)^(-1) of a design."""

    inv_sqrt: np.ndarray = field(repr=False)
    inverse: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray = field(repr=False)

    def __post_init__(self):
        for a in (self.inv_sqrt, self.inverse, self.eigenvalues):
            a.setflags(write=False)


def _family_code(family: str) -> int:
    try:
        return FAMILIES.index(family)
    except ValueError:
        raise ValueError(f"unknown design family {family!r}; choose from {FAMILIES}")


def _draw_entries(family: str, n: int, p: int, rng: np.random.Generator) -> np.ndarray:
    """One raw draw from the family (no degeneracy check)."""
    if family == "orthogonal":
        g = rng.standard_normal((n, p))
        q, r = np.linalg.qr(g, mode="reduced")
        # canonical sign convention so the draw is a deterministic function
        # of g rather than of LAPACK internals
        q = q * np.sign(np.diag(r))
        return np.sqrt(n) * q
    if family == "gaussian":
        return rng.standard_normal((n, p))
    if family == "rademacher":
        return rng.integers(0, 2, size=(n, p)).astype(float) * 2.0 - 1.0
    raise ValueError(family)


def _is_degenerate(entries: np.ndarray) -> bool:
    g = entries.T @ entries
    eigs = np.linalg.eigvalsh((g + g.T) / 2.0)
    return eigs[0] <= EIG_REL_TOL * max(eigs[-1], np.finfo(float).tiny)


def draw_design(family: str, n: int, p: int, rng: np.random.Generator) -> np.ndarray:
    """Entries of a non-degenerate design, rejecting degenerate draws.

    Consumes `rng` in place; deterministic given the generator state.
    """
    _family_code(family)
    if n < 1 or p < 1:
        raise DimensionError(f"need n >= 1 and p >= 1, got n={n}, p={p}")
    if family == "orthogonal" and n < p:
        raise DimensionError(f"orthogonal family needs n >= p, got n={n} < p={p}")
    for _ in range(MAX_REJECTED_DRAWS):
        entries = _draw_entries(family, n, p, rng)
        if not _is_degenerate(entries):
            return entries
    raise SingularDesignError(
        f"{family} design with n={n}, p={p} was singular in "
        f"{MAX_REJECTED_DRAWS} consecutive draws"
    )


def generate_design(family: str, n: int, p: int, seed: int) -> DesignMatrix:
    """Draw a design; identical (family, n, p, seed) gives identical output."""
    code = _family_code(family)
    rng = np.random.default_rng(np.random.SeedSequence([code, n, p, int(seed)]))
    entries = draw_design(family, n, p, rng)
    return DesignMatrix(entries=entries, family=family, n=n, p=p, seed=int(seed))


def gram_factorize(x: DesignMatrix) -> GramFactorization:
    """Spectral (X'X)^(-1/2) and (X'X)^(-1); raises if X'X is singular."""
    eigs, vecs = np.linalg.eigh(x.gram)
    if eigs[0] <= EIG_REL_TOL * max(eigs[-1], np.finfo(float).tiny):
        raise SingularDesignError(
            f"X'X numerically singular: lambda_min={eigs[0]:.3e}, "
            f"lambda_max={eigs[-1]:.3e}"
        )
    inv_sqrt = (vecs / np.sqrt(eigs)) @ vecs.T
    inverse = (vecs / eigs) @ vecs.T
    inv_sqrt = (inv_sqrt + inv_sqrt.T) / 2.0
    inverse = (inverse + inverse.T) / 2.0
    return GramFactorization(inv_sqrt=inv_sqrt, inverse=inverse, eigenvalues=eigs)


def rip_deviation(x: DesignMatrix, s: int, trials: int, seed: int) -> float:
    """Max over random s-sparse unit vectors b of | ||Xb||^2/n - ||b||^2 |.

    Empirical probe of the restricted-isometry constant of X/sqrt(n).
    """
    if not 1 <= s <= x.p:
        raise DimensionError(f"need 1 <= s <= p, got s={s}, p={x.p}")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), x.p, s, 7]))
    worst = 0.0
    for _ in range(trials):
        support = rng.choice(x.p, size=s, replace=False)
        b = rng.standard_normal(s)
        b /= np.linalg.norm(b)
        xb = x.entries[:, support] @ b
        worst = max(worst, abs(xb @ xb / x.n - 1.0))
    return worst


def gram_sqrt_deviation(x: DesignMatrix) -> float:
    """Spectral norm of (X'X/n)^(1/2) - I via the eigenvalues of X'X."""
    eigs = np.linalg.eigvalsh(x.gram)
    return float(np.max(np.abs(np.sqrt(eigs / x.n) - 1.0)))
