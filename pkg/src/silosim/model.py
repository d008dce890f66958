"""Shared domain types: material parameters, grids, sources, layer states."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

_REL_TOL = 1e-12


@dataclass(frozen=True)
class Parameters:
    """Material constants: critical slope, mobility, collision rate."""

    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            value = getattr(self, name)
            if not (value > 0.0 and math.isfinite(value)):
                raise ValueError(f"{name} must be strictly positive, got {value}")


@dataclass(frozen=True)
class Grid1D:
    """Uniform nodes x_i = (i-1)h on [0, L], i = 1..N."""

    length: float
    node_count: int

    def __post_init__(self):
        if not (self.length > 0.0 and math.isfinite(self.length)):
            raise ValueError(f"length must be positive, got {self.length}")
        if self.node_count < 3:
            raise ValueError(f"node_count must be >= 3, got {self.node_count}")

    @property
    def h(self) -> float:
        return self.length / (self.node_count - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.length, self.node_count)

    @property
    def ndim(self) -> int:
        return 1

    @property
    def measure(self) -> float:
        return self.length


@dataclass(frozen=True)
class Grid2D:
    """Uniform lattice on [0,Lx]x[0,Ly] with a common spacing h.

    Node (i, j) sits at ((i-1)h, (j-1)h); nodal fields are arrays of
    shape (node_count_x, node_count_y).
    """

    length_x: float
    length_y: float
    node_count_x: int
    node_count_y: int

    def __post_init__(self):
        if not (self.length_x > 0.0 and self.length_y > 0.0):
            raise ValueError("lengths must be positive")
        if self.node_count_x < 3 or self.node_count_y < 3:
            raise ValueError("node counts must be >= 3")
        hx = self.length_x / (self.node_count_x - 1)
        hy = self.length_y / (self.node_count_y - 1)
        if abs(hx - hy) > _REL_TOL * max(hx, hy):
            raise ValueError(f"spacing must match in both directions ({hx} vs {hy})")

    @classmethod
    def square(cls, length: float, node_count: int) -> "Grid2D":
        return cls(length, length, node_count, node_count)

    @property
    def h(self) -> float:
        return self.length_x / (self.node_count_x - 1)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.node_count_x, self.node_count_y)

    @property
    def nodes_x(self) -> np.ndarray:
        return np.linspace(0.0, self.length_x, self.node_count_x)

    @property
    def nodes_y(self) -> np.ndarray:
        return np.linspace(0.0, self.length_y, self.node_count_y)

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.nodes_x, self.nodes_y, indexing="ij")

    @property
    def ndim(self) -> int:
        return 2

    @property
    def measure(self) -> float:
        return self.length_x * self.length_y


@dataclass(frozen=True)
class IntervalPatch:
    """Constant-intensity source over an interval [lo, hi]."""

    lo: float
    hi: float
    intensity: float

    def __post_init__(self):
        if self.hi < self.lo:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")
        if self.intensity < 0.0:
            raise ValueError("intensity must be nonnegative")

    ndim = 1

    @property
    def area(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class RectPatch:
    """Constant-intensity source over an axis-aligned rectangle."""

    x0: float
    x1: float
    y0: float
    y1: float
    intensity: float

    def __post_init__(self):
        if self.x1 < self.x0 or self.y1 < self.y0:
            raise ValueError("empty rectangle")
        if self.intensity < 0.0:
            raise ValueError("intensity must be nonnegative")

    ndim = 2

    @property
    def area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)


@dataclass(frozen=True)
class DiskPatch:
    """Constant-intensity source over a disk."""

    cx: float
    cy: float
    radius: float
    intensity: float

    def __post_init__(self):
        if self.radius <= 0.0:
            raise ValueError("radius must be positive")
        if self.intensity < 0.0:
            raise ValueError("intensity must be nonnegative")

    ndim = 2

    @property
    def area(self) -> float:
        return math.pi * self.radius**2


@dataclass(frozen=True)
class Atom:
    """Point (Dirac) source of the given mass.

    location is a float in 1D, an (x, y) pair in 2D.
    """

    location: float | tuple[float, float]
    mass: float

    def __post_init__(self):
        if self.mass < 0.0:
            raise ValueError("mass must be nonnegative")
        if isinstance(self.location, tuple) and len(self.location) != 2:
            raise ValueError("2D atom location must be an (x, y) pair")

    @property
    def ndim(self) -> int:
        return 2 if isinstance(self.location, tuple) else 1


@dataclass(frozen=True)
class SourceSpec:
    """Vertical material source: piecewise-constant patches plus point atoms.

    The class is closed under exact integration, so source means carry no
    quadrature error.
    """

    patches: tuple = ()
    atoms: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "patches", tuple(self.patches))
        object.__setattr__(self, "atoms", tuple(self.atoms))
        dims = {p.ndim for p in self.patches} | {a.ndim for a in self.atoms}
        if len(dims) > 1:
            raise ValueError(f"mixed source dimensions: {sorted(dims)}")

    @property
    def ndim(self) -> int | None:
        for item in self.patches + self.atoms:
            return item.ndim
        return None

    def total_integral(self) -> float:
        return sum(p.intensity * p.area for p in self.patches) + sum(
            a.mass for a in self.atoms
        )

    def scaled(self, factor: float) -> "SourceSpec":
        """Source with all intensities and masses multiplied by factor."""
        if factor < 0.0:
            raise ValueError("factor must be nonnegative")
        patches = []
        for p in self.patches:
            if isinstance(p, IntervalPatch):
                patches.append(IntervalPatch(p.lo, p.hi, factor * p.intensity))
            elif isinstance(p, RectPatch):
                patches.append(RectPatch(p.x0, p.x1, p.y0, p.y1, factor * p.intensity))
            else:
                patches.append(DiskPatch(p.cx, p.cy, p.radius, factor * p.intensity))
        atoms = [Atom(a.location, factor * a.mass) for a in self.atoms]
        return SourceSpec(tuple(patches), tuple(atoms))


def uniform_source_1d(length: float, intensity: float) -> SourceSpec:
    return SourceSpec(patches=(IntervalPatch(0.0, length, intensity),))


def uniform_source_2d(length_x: float, length_y: float, intensity: float) -> SourceSpec:
    return SourceSpec(patches=(RectPatch(0.0, length_x, 0.0, length_y, intensity),))


def _check_patch_inside(patch, grid) -> None:
    if isinstance(grid, Grid1D):
        tol = _REL_TOL * grid.length
        if patch.lo < -tol or patch.hi > grid.length + tol:
            raise ValueError(f"patch {patch} extends outside (0, {grid.length})")
    else:
        tol = _REL_TOL * max(grid.length_x, grid.length_y)
        if isinstance(patch, RectPatch):
            inside = (
                patch.x0 >= -tol
                and patch.x1 <= grid.length_x + tol
                and patch.y0 >= -tol
                and patch.y1 <= grid.length_y + tol
            )
        else:
            inside = (
                patch.cx - patch.radius >= -tol
                and patch.cx + patch.radius <= grid.length_x + tol
                and patch.cy - patch.radius >= -tol
                and patch.cy + patch.radius <= grid.length_y + tol
            )
        if not inside:
            raise ValueError(f"patch {patch} extends outside the domain")


def source_mean(f: SourceSpec, grid) -> float:
    """Mean source intensity over the domain (the similarity growth velocity)."""
    if f.ndim is not None and f.ndim != grid.ndim:
        raise ValueError("source and domain dimension mismatch")
    for patch in f.patches:
        _check_patch_inside(patch, grid)
    return f.total_integral() / grid.measure


def _nearest_node_index(position: float, h: float, count: int) -> int:
    # Ties between two nodes break toward the lower index.
    i = math.floor(position / h + 0.5)
    if position / h + 0.5 == i:
        i -= 1
    return min(max(i, 0), count - 1)


def sample_patches(f: SourceSpec, grid) -> np.ndarray:
    """Nodal indicator sampling of the patch part of f (atoms excluded).

    Nodes on a patch boundary are included.
    """
    if isinstance(grid, Grid1D):
        vals = np.zeros(grid.node_count)
        x = grid.nodes
        tol = _REL_TOL * max(grid.length, 1.0)
        for patch in f.patches:
            _check_patch_inside(patch, grid)
            vals[(x >= patch.lo - tol) & (x <= patch.hi + tol)] += patch.intensity
        return vals

    vals = np.zeros(grid.shape)
    X, Y = grid.meshgrid()
    tol = _REL_TOL * max(grid.length_x, grid.length_y, 1.0)
    for patch in f.patches:
        _check_patch_inside(patch, grid)
        if isinstance(patch, RectPatch):
            mask = (
                (X >= patch.x0 - tol)
                & (X <= patch.x1 + tol)
                & (Y >= patch.y0 - tol)
                & (Y <= patch.y1 + tol)
            )
        else:
            mask = (X - patch.cx) ** 2 + (Y - patch.cy) ** 2 <= patch.radius**2 * (
                1.0 + _REL_TOL
            )
        vals[mask] += patch.intensity
    return vals


def sample_source(f: SourceSpec, grid) -> np.ndarray:
    """Discretize f on the grid for the finite-difference scheme.

    Patches contribute their intensity at covered nodes; an atom of mass m
    adds m/h (1D) or m/h^2 (2D) to its nearest node.
    """
    vals = sample_patches(f, grid)
    h = grid.h
    if isinstance(grid, Grid1D):
        for atom in f.atoms:
            i = _nearest_node_index(float(atom.location), h, grid.node_count)
            vals[i] += atom.mass / h
    else:
        for atom in f.atoms:
            ax, ay = atom.location
            i = _nearest_node_index(ax, h, grid.node_count_x)
            j = _nearest_node_index(ay, h, grid.node_count_y)
            vals[i, j] += atom.mass / h**2
    return vals


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class LayerState:
    """Standing layer u and rolling layer v at time t."""

    u: np.ndarray
    v: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "u", _frozen_array(self.u))
        object.__setattr__(self, "v", _frozen_array(self.v))
        if self.u.shape != self.v.shape:
            raise ValueError("u and v must share a shape")
        if self.t < 0.0:
            raise ValueError("time must be nonnegative")
        if not np.all(np.isfinite(self.u)):
            raise ValueError("u contains non-finite values")
        if np.any(self.v < 0.0):
            raise ValueError("rolling layer must be nonnegative")

    @classmethod
    def zero(cls, grid) -> "LayerState":
        shape = grid.shape if isinstance(grid, Grid2D) else grid.node_count
        return cls(np.zeros(shape), np.zeros(shape), 0.0)


@dataclass(frozen=True)
class SimilarityPair:
    """Similarity profile pair (U, V) with growth velocity c; min U = 0."""

    U: np.ndarray
    V: np.ndarray
    c: float

    def __post_init__(self):
        object.__setattr__(self, "U", _frozen_array(self.U))
        object.__setattr__(self, "V", _frozen_array(self.V))
        if self.c < 0.0:
            raise ValueError("growth velocity must be nonnegative")
        scale = 1.0 + float(np.max(np.abs(self.U)))
        if abs(float(np.min(self.U))) > 1e-8 * scale:
            raise ValueError("U must be normalized to min 0")
