"""Finite element characterization of similarity solutions.

Solves the semidefinite Neumann potential problem on intervals and on
Courant-triangulated rectangles, then reconstructs the flux, the rolling
layer, and the standing layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .model import (
    Atom,
    Grid1D,
    Grid2D,
    Parameters,
    SourceSpec,
    sample_patches,
    source_mean,
)


class SolverError(RuntimeError):
    """Conjugate gradient failed to reach the requested residual."""


class AssemblyError(RuntimeError):
    """Assembled system violates a structural requirement."""


@dataclass(frozen=True)
class CourantMesh:
    """Uniform Courant triangulation of a Grid2D rectangle.

    Every cell is split along its lower-left to upper-right diagonal; node
    (i, j) has flat index i * node_count_y + j.
    """

    grid: Grid2D
    triangles: np.ndarray

    @classmethod
    def from_grid(cls, grid: Grid2D) -> "CourantMesh":
        nx, ny = grid.shape
        i, j = np.meshgrid(np.arange(nx - 1), np.arange(ny - 1), indexing="ij")
        n00 = (i * ny + j).ravel()
        n10 = ((i + 1) * ny + j).ravel()
        n01 = (i * ny + j + 1).ravel()
        n11 = ((i + 1) * ny + j + 1).ravel()
        lower = np.stack([n00, n10, n11], axis=1)
        upper = np.stack([n00, n11, n01], axis=1)
        tris = np.vstack([lower, upper])
        tris.setflags(write=False)
        return cls(grid=grid, triangles=tris)

    @property
    def node_count(self) -> int:
        return self.grid.node_count_x * self.grid.node_count_y

    @property
    def element_count(self) -> int:
        return self.triangles.shape[0]

    @property
    def element_area(self) -> float:
        return self.grid.h**2 / 2.0

    def node_coords(self) -> np.ndarray:
        X, Y = self.grid.meshgrid()
        return np.stack([X.ravel(), Y.ravel()], axis=1)


def _element_count(domain) -> int:
    if isinstance(domain, Grid1D):
        return domain.node_count - 1
    return domain.element_count


def lumped_masses(domain) -> np.ndarray:
    """Nodal weights from lumping the mass matrix; they sum to the domain area."""
    if isinstance(domain, Grid1D):
        w = np.full(domain.node_count, domain.h)
        w[0] = w[-1] = domain.h / 2.0
        return w
    w = np.zeros(domain.node_count)
    np.add.at(w, domain.triangles.ravel(), domain.element_area / 3.0)
    return w


def stiffness_matrix(domain, weights=None) -> sp.csr_matrix:
    """P1 stiffness matrix, optionally with element-constant weights."""
    if isinstance(domain, Grid1D):
        n = domain.node_count
        w = np.ones(n - 1) if weights is None else np.asarray(weights, dtype=float)
        diag = np.zeros(n)
        diag[:-1] += w
        diag[1:] += w
        A = sp.diags([-w, diag, -w], offsets=[-1, 0, 1], format="csr")
        return A / domain.h

    mesh = domain
    tris = mesh.triangles
    w = (
        np.ones(mesh.element_count)
        if weights is None
        else np.asarray(weights, dtype=float)
    )
    coords = mesh.node_coords()
    p = coords[tris]  # (n_elem, 3, 2)
    # Gradient coefficients of the three vertex hats on each triangle.
    b = p[:, [1, 2, 0], 1] - p[:, [2, 0, 1], 1]
    c = p[:, [2, 0, 1], 0] - p[:, [1, 2, 0], 0]
    area = mesh.element_area
    k_loc = (b[:, :, None] * b[:, None, :] + c[:, :, None] * c[:, None, :]) / (
        4.0 * area
    )
    k_loc *= w[:, None, None]
    rows = np.repeat(tris, 3, axis=1).ravel()
    cols = np.tile(tris, (1, 3)).ravel()
    A = sp.coo_matrix(
        (k_loc.ravel(), (rows, cols)), shape=(mesh.node_count, mesh.node_count)
    )
    return A.tocsr()


def _hat_values_1d(grid: Grid1D, z: float):
    h = grid.h
    k = min(max(int(math.floor(z / h)), 0), grid.node_count - 2)
    xi = z / h - k
    return np.array([k, k + 1]), np.array([1.0 - xi, xi])


def _hat_values_2d(mesh: CourantMesh, point):
    grid = mesh.grid
    h = grid.h
    px, py = point
    i = min(max(int(math.floor(px / h)), 0), grid.node_count_x - 2)
    j = min(max(int(math.floor(py / h)), 0), grid.node_count_y - 2)
    xi = px / h - i
    eta = py / h - j
    ny = grid.node_count_y
    n00 = i * ny + j
    n10 = (i + 1) * ny + j
    n01 = i * ny + j + 1
    n11 = (i + 1) * ny + j + 1
    if xi >= eta:  # lower triangle (n00, n10, n11)
        return np.array([n00, n10, n11]), np.array([1.0 - xi, xi - eta, eta])
    return np.array([n00, n11, n01]), np.array([1.0 - eta, xi, eta - xi])


def source_load(f: SourceSpec, domain) -> tuple[np.ndarray, np.ndarray]:
    """Nodal load of f and the lumped weights: patches via sampled nodal
    values against lumped masses, atoms via hat evaluation."""
    grid = domain.grid if isinstance(domain, CourantMesh) else domain
    w = lumped_masses(domain)
    F = w * sample_patches(f, grid).ravel()
    for atom in f.atoms:
        if isinstance(grid, Grid1D):
            idx, vals = _hat_values_1d(grid, float(atom.location))
        else:
            idx, vals = _hat_values_2d(domain, atom.location)
        F[idx] += atom.mass * vals
    return F, w


def discrete_mean_rate(f: SourceSpec, domain) -> float:
    """Discrete growth velocity c_h; equals the exact mean on intervals
    and rectangles, where the mesh covers the domain exactly."""
    grid = domain.grid if isinstance(domain, CourantMesh) else domain
    return source_mean(f, grid)


@dataclass(frozen=True)
class PotentialSolution:
    """Zero-mean flux potential with solver diagnostics."""

    psi: np.ndarray
    residual_norm: float
    iterations: int


def _projected_cg(A, F, tol, maxiter):
    """CG on the semidefinite Neumann system, constants projected out."""
    n = F.shape[0]

    def deflate(vec):
        return vec - vec.mean()

    F = deflate(F)
    norm_F = float(np.linalg.norm(F))
    if norm_F == 0.0:
        return np.zeros(n), 0.0, 0
    x = np.zeros(n)
    r = F.copy()
    d = r.copy()
    rs = float(r @ r)
    for it in range(1, maxiter + 1):
        Ad = A @ d
        denom = float(d @ Ad)
        if denom <= 0.0:
            break
        step = rs / denom
        x += step * d
        r -= step * Ad
        x = deflate(x)
        r = deflate(r)
        rs_new = float(r @ r)
        if math.sqrt(rs_new) <= tol * norm_F:
            return x, math.sqrt(rs_new) / norm_F, it
        d = r + (rs_new / rs) * d
        rs = rs_new
    raise SolverError(
        f"CG did not converge in {maxiter} iterations "
        f"(relative residual {math.sqrt(rs) / norm_F:.3e})"
    )


def solve_potential(
    f: SourceSpec, domain, p: Parameters, tol: float = 1e-10
) -> PotentialSolution:
    """Solve -laplace(psi) = (f - c_h)/beta with natural Neumann walls.

    The singular symmetric system is solved by conjugate gradient with the
    constant component projected out; psi is returned with zero
    mass-weighted mean.
    """
    if f.total_integral() <= 0.0:
        raise ValueError("source must have positive total mass")
    A = stiffness_matrix(domain)
    F_f, w = source_load(f, domain)
    area = float(w.sum())
    c_used = float(F_f.sum()) / area
    F = (F_f - c_used * w) / p.beta
    scale = max(float(np.abs(F_f).sum()), 1.0)
    if abs(float(F.sum())) > 1e-12 * scale:
        raise AssemblyError("right-hand side is not zero-mean: assembly bug")
    n = F.shape[0]
    psi, res, it = _projected_cg(A, F, tol, maxiter=10 * n)
    psi = psi - float(w @ psi) / area
    return PotentialSolution(psi=psi, residual_norm=res, iterations=it)


def flux_from_potential(psi: np.ndarray, domain) -> np.ndarray:
    """Element-constant gradient of the piecewise-linear interpolant of psi."""
    if isinstance(domain, Grid1D):
        return np.diff(np.asarray(psi, dtype=float)) / domain.h
    mesh = domain
    h = mesh.grid.h
    vals = np.asarray(psi, dtype=float).ravel()[mesh.triangles]
    n = mesh.element_count // 2
    grad = np.empty((mesh.element_count, 2))
    # Lower triangles (n00, n10, n11), upper triangles (n00, n11, n01).
    grad[:n, 0] = (vals[:n, 1] - vals[:n, 0]) / h
    grad[:n, 1] = (vals[:n, 2] - vals[:n, 1]) / h
    grad[n:, 0] = (vals[n:, 1] - vals[n:, 2]) / h
    grad[n:, 1] = (vals[n:, 2] - vals[n:, 0]) / h
    return grad


def flux_magnitude(w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    return np.abs(w) if w.ndim == 1 else np.linalg.norm(w, axis=1)


def rolling_from_flux(w: np.ndarray, c_h: float, p: Parameters) -> np.ndarray:
    """Element-wise rolling layer v = c_h/(gamma*alpha) + |w|/alpha."""
    return c_h / (p.gamma * p.alpha) + flux_magnitude(w) / p.alpha


def standing_gradient(w: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Element-wise standing-layer gradient z = w / v."""
    w = np.asarray(w, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any(v <= 0.0):
        raise ValueError("rolling layer must be positive on every element")
    return w / v if w.ndim == 1 else w / v[:, None]


def reconstruct_u_1d(z: np.ndarray, grid: Grid1D) -> np.ndarray:
    """Standing layer from its interval slopes by cumulative integration."""
    u = np.concatenate(([0.0], grid.h * np.cumsum(z)))
    return u - u.min()


def reconstruct_u_2d(
    v: np.ndarray,
    f: SourceSpec,
    mesh: CourantMesh,
    p: Parameters,
    tol: float = 1e-10,
) -> np.ndarray:
    """Standing layer on a rectangle from the weighted Neumann problem
    div(v grad u) = -(f - c_h)/beta, min-shifted to 0."""
    v = np.asarray(v, dtype=float)
    if np.any(v <= 0.0):
        raise ValueError("weights must be positive on every element")
    A = stiffness_matrix(mesh, weights=v)
    F_f, w = source_load(f, mesh)
    area = float(w.sum())
    c_used = float(F_f.sum()) / area
    F = (F_f - c_used * w) / p.beta
    u, _, _ = _projected_cg(A, F, tol, maxiter=10 * mesh.node_count)
    u = u - u.min()
    return u.reshape(mesh.grid.shape)


def element_to_node(field: np.ndarray, domain) -> np.ndarray:
    """Project an element field to nodes by averaging incident elements."""
    field = np.asarray(field, dtype=float)
    if isinstance(domain, Grid1D):
        out = np.empty(domain.node_count)
        out[0] = field[0]
        out[-1] = field[-1]
        out[1:-1] = 0.5 * (field[:-1] + field[1:])
        return out
    mesh = domain
    acc = np.zeros(mesh.node_count)
    cnt = np.zeros(mesh.node_count)
    np.add.at(acc, mesh.triangles.ravel(), np.repeat(field, 3))
    np.add.at(cnt, mesh.triangles.ravel(), 1.0)
    return (acc / cnt).reshape(mesh.grid.shape)


@dataclass(frozen=True)
class FESimilarity:
    """Bundle of the discrete similarity reconstruction."""

    potential: PotentialSolution
    flux: np.ndarray
    v_element: np.ndarray
    z_element: np.ndarray
    u: np.ndarray
    v: np.ndarray
    c: float


def similarity_fe(
    f: SourceSpec, domain, p: Parameters, tol: float = 1e-10
) -> FESimilarity:
    """Full discrete pipeline: potential, flux, rolling and standing layers.

    domain is a Grid1D or a CourantMesh; u is nodal and min-shifted, v is
    the incident-element average of the element-wise rolling layer.
    """
    c_h = discrete_mean_rate(f, domain)
    sol = solve_potential(f, domain, p, tol=tol)
    w = flux_from_potential(sol.psi, domain)
    v_el = rolling_from_flux(w, c_h, p)
    z = standing_gradient(w, v_el)
    if isinstance(domain, Grid1D):
        u = reconstruct_u_1d(z, domain)
    else:
        u = reconstruct_u_2d(v_el, f, domain, p, tol=tol)
    v_nodal = element_to_node(v_el, domain)
    return FESimilarity(
        potential=sol, flux=w, v_element=v_el, z_element=z, u=u, v=v_nodal, c=c_h
    )
