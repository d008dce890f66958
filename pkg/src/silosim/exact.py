"""Closed-form similarity solutions used as oracles for the numerical solvers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Grid1D, Parameters, SimilarityPair, SourceSpec, source_mean


def source_cumulative(f: SourceSpec, x) -> np.ndarray:
    """Integral of f over (0, x); an atom at z counts only for x > z."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for p in f.patches:
        out += p.intensity * (np.clip(x, p.lo, p.hi) - p.lo)
    for a in f.atoms:
        out += np.where(x > float(a.location), a.mass, 0.0)
    return out


def G_function(f: SourceSpec, length: float, x):
    """Net-flux primitive G(x) = (x/L) * integral(f) - integral_0^x f.

    Exact for the supported source class; at an atom location the left
    limit is used (the atom is not yet counted).
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < -1e-12 * length) or np.any(x > length * (1.0 + 1e-12)):
        raise ValueError("x outside [0, L]")
    return (x / length) * f.total_integral() - source_cumulative(f, x)


def similarity_1d_exact(
    f: SourceSpec, grid: Grid1D, p: Parameters
) -> SimilarityPair:
    """Similarity profile pair on (0, L) from the closed 1D formulas.

    U is recovered by trapezoidal integration of its slope and shifted
    to min 0.
    """
    total = f.total_integral()
    if total <= 0.0:
        raise ValueError("source must have positive total mass")
    L = grid.length
    x = grid.nodes
    G = G_function(f, L, x)
    V = total / (p.gamma * p.alpha * L) + np.abs(G) / (p.alpha * p.beta)
    Ux = p.alpha * G / ((p.beta / (p.gamma * L)) * total + np.abs(G))
    U = np.concatenate(([0.0], np.cumsum(0.5 * (Ux[1:] + Ux[:-1]) * np.diff(x))))
    U -= U.min()
    return SimilarityPair(U=U, V=V, c=source_mean(f, grid))


def example1_exact(grid: Grid1D, p: Parameters) -> SimilarityPair:
    """Similarity pair for a unit point source over the middle of (0, L)."""
    L = grid.length
    x = grid.nodes
    V = 1.0 / (p.gamma * p.alpha * L) + np.minimum(x, L - x) / (p.alpha * p.beta * L)
    scale = p.alpha * p.gamma / p.beta
    U = np.where(
        x <= L / 2.0,
        scale * (x - np.log1p(x)),
        scale * ((L - x) - np.log1p(L - x)),
    )
    return SimilarityPair(U=U, V=V, c=1.0 / L)


@dataclass(frozen=True)
class RadialProfile:
    """Radial similarity profile for a cylindrical silo with a central point source.

    The rolling layer blows up at r = 0, so profiles are sampled on (0, R] only.
    """

    radius: float
    c: float
    radii: np.ndarray
    V: np.ndarray
    U_r: np.ndarray
    U: np.ndarray


def example2_radial(
    radius: float, p: Parameters, c: float, radii, quadrature_points: int = 65536
) -> RadialProfile:
    """Radial profiles V(r), U_r(r), U(r) for the disk of the given radius.

    U(r) = -integral_r^R U_r with U(R) = 0, evaluated by trapezoidal
    quadrature of the smooth slope on a dense internal grid and
    interpolated at the sample radii, so sparse samples stay accurate.
    """
    r = np.sort(np.asarray(radii, dtype=float))
    if np.any(r <= 0.0):
        raise ValueError("radii must be positive (V is singular at r = 0)")
    if np.any(r > radius * (1.0 + 1e-12)):
        raise ValueError("radii must not exceed the silo radius")
    if c <= 0.0:
        raise ValueError("growth velocity must be positive")
    R = radius

    def V_of(s):
        return (c / (p.gamma * p.alpha)) * (
            1.0 + (p.gamma / (2.0 * p.beta * s)) * (R**2 - s**2)
        )

    def Ur_of(s):
        return -p.alpha * (R**2 - s**2) / (R**2 - s**2 + 2.0 * p.beta * s / p.gamma)

    dense = np.linspace(float(r[0]), R, quadrature_points)
    Ur_dense = Ur_of(dense)
    seg = 0.5 * (Ur_dense[1:] + Ur_dense[:-1]) * np.diff(dense)
    # Cumulative integral from each dense point to the wall.
    tail = np.concatenate((np.cumsum(seg[::-1])[::-1], [0.0]))
    # Anchored at the wall: U(R) = 0, so U >= 0 on the monotone profile.
    U = np.interp(r, dense, -tail)
    return RadialProfile(radius=R, c=c, radii=r, V=V_of(r), U_r=Ur_of(r), U=U)
