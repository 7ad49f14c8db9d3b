"""Random wavenumber fields affine in the random variables.

A field is ``k(x, xi) = k_0(x) + sum_l xi_l k_l(x)``.  Coefficients are
evaluated at exact rational coordinates ``num / den`` so that region tests
on grid nodes (e.g. the wedge interfaces) are decided without rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Callable

import numpy as np

__all__ = [
    "RandomField",
    "constant_field_1d",
    "deterministic_field_1d",
    "wedge_field_2d",
    "wedge_layer",
    "max_wavenumber",
    "min_wavenumber",
    "mean_max_wavenumber",
]

# coefficients(num, den) -> array (s + 1, N); num has shape (dim, N), points are num / den
CoefficientFn = Callable[[np.ndarray, int], np.ndarray]


@dataclass(frozen=True)
class RandomField:
    """Affine random wavenumber on the unit interval or unit square."""

    s: int
    dim: int
    coefficients: CoefficientFn = field(repr=False)
    label: str = "custom"
    params: dict = field(default_factory=dict, compare=False)

    def sample(self, num: np.ndarray, den: int) -> np.ndarray:
        """Coefficients ``k_0..k_s`` at the points ``num / den``; shape ``(s + 1, N)``."""
        num = np.asarray(num, dtype=np.int64).reshape(self.dim, -1)
        out = np.asarray(self.coefficients(num, int(den)), dtype=float)
        if out.shape != (self.s + 1, num.shape[1]):
            raise ValueError(f"coefficient function returned shape {out.shape}")
        return out

    def evaluate(self, point, xi) -> float:
        """``k(point, xi)`` at one point given as decimal-exact floats or Fractions."""
        coords = [Fraction(str(c)) if isinstance(c, float) else Fraction(c)
                  for c in np.atleast_1d(point)]
        if len(coords) != self.dim:
            raise ValueError(f"expected a {self.dim}-D point")
        den = lcm(*(c.denominator for c in coords))
        num = np.array([[int(c * den)] for c in coords], dtype=np.int64)
        coef = self.sample(num, den)[:, 0]
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        if xi.shape != (self.s,):
            raise ValueError(f"xi must have {self.s} entries")
        return float(coef[0] + coef[1:] @ xi)

    def positivity_margin(self, num: np.ndarray, den: int) -> float:
        """``min_x k_0(x) - sum_l |k_l(x)|`` over the given points."""
        coef = self.sample(num, den)
        return float(np.min(coef[0] - np.abs(coef[1:]).sum(axis=0)))


def constant_field_1d(kbar: float, theta: float) -> RandomField:
    """``k(xi) = (1 + theta xi) kbar``, constant in space, one random variable."""
    if not kbar > 0:
        raise ValueError(f"mean wavenumber must be positive, got {kbar}")
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta must lie in (0, 1), got {theta}")
    return _constant_field(kbar, theta)


def deterministic_field_1d(kbar: float) -> RandomField:
    """The ``theta = 0`` limit of :func:`constant_field_1d` (still one random variable)."""
    if not kbar > 0:
        raise ValueError(f"mean wavenumber must be positive, got {kbar}")
    return _constant_field(kbar, 0.0)


def _constant_field(kbar: float, theta: float) -> RandomField:
    def coefficients(num, den):
        npts = num.shape[1]
        return np.vstack([np.full(npts, kbar), np.full(npts, theta * kbar)])

    return RandomField(
        s=1, dim=1, coefficients=coefficients, label="constant1d",
        params={"kbar": kbar, "theta": theta, "kmin": (1 - theta) * kbar,
                "kmax": (1 + theta) * kbar},
    )


def wedge_layer(num: np.ndarray, den: int) -> np.ndarray:
    """Layer (1, 2 or 3) of each point ``num / den`` of the unit square.

    Layer 1: ``y <= 0.2 + 0.1 x``; layer 3: ``0.6 - 0.2 x <= y``; layer 2 between.
    Both tests are done in integers after scaling by ``10 den``.
    """
    x, y = np.asarray(num, dtype=np.int64)
    below = 10 * y <= 2 * den + x
    above = 6 * den - 2 * x <= 10 * y
    # the two closed regions cannot overlap inside the unit square
    assert not np.any(below & above), "wedge layers overlap"
    return np.where(below, 1, np.where(above, 3, 2))


def wedge_field_2d(k1: float, k2: float, k3: float, theta: float) -> RandomField:
    """Three-layer wedge wavenumber with an independent variable per layer."""
    ks = np.array([k1, k2, k3], dtype=float)
    if np.any(ks <= 0):
        raise ValueError("layer wavenumbers must be positive")
    if not abs(theta) < 1.0:
        raise ValueError(f"|theta| must be below 1 for a positive wavenumber, got {theta}")

    def coefficients(num, den):
        layer = wedge_layer(num, den)
        out = np.zeros((4, num.shape[1]))
        out[0] = ks[layer - 1]
        for ell in (1, 2, 3):
            mask = layer == ell
            out[ell, mask] = theta * ks[ell - 1]
        return out

    return RandomField(
        s=3, dim=2, coefficients=coefficients, label="wedge2d",
        params={"k1": k1, "k2": k2, "k3": k3, "theta": theta},
    )


def _unit_nodes(dim: int, q: int) -> tuple[np.ndarray, int]:
    ax = np.arange(q + 2)
    if dim == 1:
        return ax.reshape(1, -1), q + 1
    xx, yy = np.meshgrid(ax, ax, indexing="xy")
    return np.vstack([xx.ravel(), yy.ravel()]), q + 1


def max_wavenumber(f: RandomField, q: int = 127) -> float:
    """``max_x k_0(x) + sum_l |k_l(x)|`` over a grid with ``q`` interior nodes per axis.

    For the shipped fields the value does not depend on ``q``.
    """
    num, den = _unit_nodes(f.dim, q)
    coef = f.sample(num, den)
    return float(np.max(coef[0] + np.abs(coef[1:]).sum(axis=0)))


def min_wavenumber(f: RandomField, q: int = 127) -> float:
    num, den = _unit_nodes(f.dim, q)
    return f.positivity_margin(num, den)


def mean_max_wavenumber(f: RandomField, q: int = 127) -> float:
    """``max_x k_0(x)``: the largest value of the mean wavenumber."""
    num, den = _unit_nodes(f.dim, q)
    return float(np.max(f.sample(num, den)[0]))
