"""Tests for the shared domain types and source discretization."""

import math

import numpy as np
import pytest

from silosim import (
    Atom,
    DiskPatch,
    Grid1D,
    Grid2D,
    IntervalPatch,
    LayerState,
    Parameters,
    RectPatch,
    SimilarityPair,
    SourceSpec,
    sample_source,
    source_mean,
    uniform_source_1d,
    uniform_source_2d,
)
from silosim.model import _nearest_node_index, sample_patches


def test_parameters_positive():
    Parameters(1.0, 2.0, 0.5)
    with pytest.raises(ValueError):
        Parameters(alpha=0.0)
    with pytest.raises(ValueError):
        Parameters(beta=-1.0)
    with pytest.raises(ValueError):
        Parameters(gamma=float("nan"))


def test_grid1d_basic():
    g = Grid1D(2.0, 5)
    assert g.h == pytest.approx(0.5)
    assert np.allclose(g.nodes, [0.0, 0.5, 1.0, 1.5, 2.0])
    assert g.ndim == 1
    assert g.measure == pytest.approx(2.0)
    with pytest.raises(ValueError):
        Grid1D(1.0, 2)
    with pytest.raises(ValueError):
        Grid1D(-1.0, 5)


def test_grid2d_basic():
    g = Grid2D.square(1.0, 11)
    assert g.h == pytest.approx(0.1)
    assert g.shape == (11, 11)
    assert g.measure == pytest.approx(1.0)
    X, Y = g.meshgrid()
    assert X[3, 7] == pytest.approx(0.3)
    assert Y[3, 7] == pytest.approx(0.7)
    # Spacing must agree between the axes.
    Grid2D(2.0, 1.0, 21, 11)
    with pytest.raises(ValueError):
        Grid2D(2.0, 1.0, 11, 11)


def test_source_total_integral():
    f = SourceSpec(
        patches=(IntervalPatch(0.2, 0.5, 2.0),),
        atoms=(Atom(0.7, 0.25),),
    )
    assert f.total_integral() == pytest.approx(0.85)
    f2 = SourceSpec(patches=(DiskPatch(0.5, 0.5, 0.1, 3.0),))
    assert f2.total_integral() == pytest.approx(3.0 * math.pi * 0.01)
    rect = SourceSpec(patches=(RectPatch(0.0, 0.5, 0.0, 0.25, 2.0),))
    assert rect.total_integral() == pytest.approx(0.25)


def test_source_dimension_mixing_rejected():
    with pytest.raises(ValueError):
        SourceSpec(
            patches=(IntervalPatch(0.0, 1.0, 1.0), RectPatch(0, 1, 0, 1, 1.0))
        )
    with pytest.raises(ValueError):
        SourceSpec(atoms=(Atom(0.5, 1.0), Atom((0.5, 0.5), 1.0)))


def test_source_scaled():
    f = SourceSpec(
        patches=(IntervalPatch(0.2, 0.5, 2.0),), atoms=(Atom(0.7, 0.25),)
    )
    g = f.scaled(2.0)
    assert g.total_integral() == pytest.approx(2.0 * f.total_integral())
    assert g.patches[0].lo == 0.2 and g.patches[0].intensity == 4.0


def test_source_mean_exact():
    g = Grid1D(1.0, 11)
    f = SourceSpec(patches=(IntervalPatch(0.25, 0.75, 2.0),))
    assert source_mean(f, g) == pytest.approx(1.0)
    g2 = Grid2D.square(2.0, 11)
    f2 = SourceSpec(patches=(DiskPatch(1.0, 1.0, 0.5, 4.0),))
    assert source_mean(f2, g2) == pytest.approx(math.pi / 4.0)


def test_source_mean_rejects_outside_patch():
    g = Grid1D(1.0, 11)
    with pytest.raises(ValueError):
        source_mean(SourceSpec(patches=(IntervalPatch(0.5, 1.5, 1.0),)), g)
    g2 = Grid2D.square(1.0, 11)
    with pytest.raises(ValueError):
        source_mean(SourceSpec(patches=(DiskPatch(0.95, 0.5, 0.1, 1.0),)), g2)


def test_sample_patches_boundary_inclusive():
    g = Grid1D(1.0, 11)
    f = SourceSpec(patches=(IntervalPatch(0.2, 0.5, 1.5),))
    vals = sample_patches(f, g)
    # Nodes 0.2, 0.3, 0.4, 0.5 are covered, endpoints included.
    assert np.allclose(vals, [0, 0, 1.5, 1.5, 1.5, 1.5, 0, 0, 0, 0, 0])


def test_sample_patches_2d_disk():
    g = Grid2D.square(1.0, 11)
    f = SourceSpec(patches=(DiskPatch(0.5, 0.5, 0.1, 2.0),))
    vals = sample_patches(f, g)
    # The disk of radius 0.1 covers exactly the 5-node plus of its center.
    assert vals[5, 5] == 2.0
    assert vals[4, 5] == 2.0 and vals[6, 5] == 2.0
    assert vals[5, 4] == 2.0 and vals[5, 6] == 2.0
    assert vals.sum() == pytest.approx(10.0)


def test_nearest_node_index_tie_breaks_down():
    # 0.05 sits exactly between nodes 0 and 1 at h = 0.1: lower index wins.
    assert _nearest_node_index(0.05, 0.1, 11) == 0
    assert _nearest_node_index(0.051, 0.1, 11) == 1
    assert _nearest_node_index(0.55, 0.1, 11) == 5
    assert _nearest_node_index(1.0, 0.1, 11) == 10


def test_sample_source_atom_scaling():
    g = Grid1D(1.0, 11)
    f = SourceSpec(atoms=(Atom(0.52, 0.3),))
    vals = sample_source(f, g)
    assert vals[5] == pytest.approx(0.3 / g.h)
    assert np.count_nonzero(vals) == 1
    g2 = Grid2D.square(1.0, 11)
    f2 = SourceSpec(atoms=(Atom((0.52, 0.48), 0.3),))
    vals2 = sample_source(f2, g2)
    assert vals2[5, 5] == pytest.approx(0.3 / g2.h**2)
    assert np.count_nonzero(vals2) == 1


def test_uniform_sources():
    g = Grid1D(2.0, 21)
    f = uniform_source_1d(2.0, 1.5)
    assert source_mean(f, g) == pytest.approx(1.5)
    assert np.allclose(sample_source(f, g), 1.5)
    g2 = Grid2D(2.0, 1.0, 21, 11)
    f2 = uniform_source_2d(2.0, 1.0, 0.5)
    assert source_mean(f2, g2) == pytest.approx(0.5)
    assert np.allclose(sample_source(f2, g2), 0.5)


def test_layer_state_validation():
    u = np.zeros(5)
    v = np.ones(5)
    st = LayerState(u=u, v=v, t=1.0)
    assert st.t == 1.0
    with pytest.raises(ValueError):
        LayerState(u=u, v=-v, t=0.0)


def test_similarity_pair_min_shift_required():
    U = np.array([0.0, 0.1, 0.2])
    V = np.array([1.0, 1.0, 1.0])
    SimilarityPair(U=U, V=V, c=1.0)
    with pytest.raises(ValueError):
        SimilarityPair(U=U + 1.0, V=V, c=1.0)
