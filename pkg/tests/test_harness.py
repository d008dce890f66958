"""Tests for the experiment driver, CSV export, configs, and the CLI."""

import math

import numpy as np
import pytest

from silosim import (
    ErrorTable,
    ExperimentConfig,
    Grid1D,
    Grid2D,
    IntervalPatch,
    SourceSpec,
    export_profile,
    observed_order,
    run_experiment,
    run_similarity,
)
from silosim.cli import main
from silosim.config import (
    BUILTIN_CONFIGS,
    config_from_text,
    parse_key_values,
    write_builtin_configs,
)
from silosim.experiments import _node_count


def test_observed_order_basic():
    hs = [0.1, 0.05, 0.025]
    errs = [4.0, 2.0, 1.0]
    assert np.allclose(observed_order(errs, hs), [1.0, 1.0])
    errs2 = [16.0, 4.0, 1.0]
    assert np.allclose(observed_order(errs2, hs), [2.0, 2.0])
    assert observed_order([1.0, 0.0], [0.1, 0.05]) == [None]
    with pytest.raises(ValueError):
        observed_order([1.0], [0.1])


def test_observed_order_reference_sweep():
    # Frozen arithmetic check on a published-style refinement record:
    # sup-norm errors of the four profile columns over h = 0.01..0.001.
    hs = [0.01, 0.005, 0.0025, 0.001]
    cols = {
        "u_fe": [3.07e-3, 1.55e-3, 7.8e-4, 3.1e-4],
        "u_fd": [4.97e-3, 2.66e-3, 1.44e-3, 4.7e-4],
        "v_fe": [4.6e-4, 2.3e-4, 1.2e-4, 5e-5],
        "v_fd": [1.62e-3, 8.4e-4, 5.3e-4, 2e-4],
    }
    expected = {
        "u_fe": [0.986, 0.991, 1.007],
        "u_fd": [0.902, 0.885, 1.222],
        "v_fe": [1.000, 0.939, 0.955],
        "v_fd": [0.948, 0.665, 1.064],
    }
    for name, errs in cols.items():
        assert observed_order(errs, hs) == pytest.approx(expected[name], abs=5e-3)


def test_error_table_csv_markers():
    t = ErrorTable(
        hs=[0.1, 0.05], columns={"u": [2.0, 1.0], "v": [1.0, None]}
    ).compute_orders()
    text = t.to_csv()
    lines = text.strip().splitlines()
    assert lines[0] == "h,err_u,err_v,order_u,order_v"
    assert lines[1] == "0.10000000000000001,2,1,,"
    assert "failed" in lines[2]
    assert "1" in lines[2].split(",")[3]
    exact = ErrorTable(hs=[0.1, 0.05], columns={"u": [0.0, 0.0]}).compute_orders()
    assert "exact" in exact.to_csv()


def test_export_profile_formats(tmp_path):
    g = Grid1D(1.0, 3)
    path = tmp_path / "p.csv"
    export_profile(np.array([0.0, 0.5, 1.0 / 3.0]), g, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "x,value"
    assert lines[2] == "0.5,0.5"
    # Full 17-digit round trip for non-representable values.
    assert float(lines[3].split(",")[1]) == 1.0 / 3.0
    g2 = Grid2D.square(1.0, 3)
    path2 = tmp_path / "p2.csv"
    export_profile(np.arange(9.0).reshape(3, 3), g2, path2)
    lines = path2.read_text().strip().splitlines()
    assert lines[0] == "x,y,value"
    assert len(lines) == 10
    # Row-major: x varies slowest.
    assert lines[1] == "0,0,0"
    assert lines[2] == "0,0.5,1"
    assert lines[4] == "0.5,0,3"


def test_node_count_validation():
    assert _node_count(1.0, 0.01) == 101
    assert _node_count(2.0, 0.01) == 201
    with pytest.raises(ValueError):
        _node_count(1.0, 0.013)


def test_experiment_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(kind="disk", lengths=(1.0,), h_list=(0.1,))
    with pytest.raises(ValueError):
        ExperimentConfig(kind="interval", lengths=(1.0,), h_list=())
    with pytest.raises(ValueError):
        ExperimentConfig(kind="interval", lengths=(1.0,), h_list=(0.05, 0.1))
    cfg = ExperimentConfig(kind="interval", lengths=(1.0,), h_list=(0.1, 0.05))
    assert cfg.grid(0.1).node_count == 11


def test_parse_key_values():
    kv = parse_key_values("a.b = 1\n# comment\n\nc = x,y\n")
    assert kv == {"a.b": "1", "c": "x,y"}
    with pytest.raises(ValueError):
        parse_key_values("not a pair")


def test_config_from_text_round_trip():
    text = """
domain.kind = interval
domain.length = 2.0
grid.h_list = 0.02,0.01
params.alpha = 1.5
params.beta = 2.0
source.patches = 0.2,0.5,2.0 ; 0.9,1.1,1.0
source.atoms = 1.5,0.25
scheme.stop_epsilon = 1e-5
scheme.max_steps = 1234
output.kinds = table,profiles
output.dir = results
"""
    cfg = config_from_text(text)
    assert cfg.kind == "interval"
    assert cfg.lengths == (2.0,)
    assert cfg.h_list == (0.02, 0.01)
    assert cfg.params.alpha == 1.5 and cfg.params.beta == 2.0
    assert len(cfg.source.patches) == 2 and len(cfg.source.atoms) == 1
    assert cfg.source.atoms[0].mass == 0.25
    assert cfg.scheme.stop_epsilon == 1e-5
    assert cfg.scheme.max_steps == 1234
    assert cfg.outputs == ("table", "profiles")
    assert cfg.out_dir == "results"


def test_config_overrides():
    text = "domain.kind = interval\ngrid.h_list = 0.1\n"
    cfg = config_from_text(
        text, {"grid.h_list": "0.05,0.025", "scheme.max_steps": "7"}
    )
    assert cfg.h_list == (0.05, 0.025)
    assert cfg.scheme.max_steps == 7


def test_config_2d_sources():
    text = """
domain.kind = rectangle
domain.lengths = 1.0,1.0
grid.h_list = 0.125
source.disks = 0.5,0.5,0.2,4.0
source.rects = 0.1,0.3,0.1,0.3,1.0
source.atoms = 0.5,0.5,1.0
"""
    cfg = config_from_text(text)
    assert cfg.kind == "rectangle"
    assert len(cfg.source.patches) == 2
    assert cfg.source.atoms[0].location == (0.5, 0.5)
    g = cfg.grid(0.125)
    assert g.shape == (9, 9)


def test_builtin_configs_parse(tmp_path):
    paths = write_builtin_configs(tmp_path)
    assert len(paths) == len(BUILTIN_CONFIGS)
    for path in paths:
        cfg = config_from_text(path.read_text())
        assert cfg.source.total_integral() > 0.0


def test_run_similarity_writes_profiles(tmp_path):
    cfg = ExperimentConfig(
        kind="interval",
        lengths=(1.0,),
        h_list=(0.02,),
        source=SourceSpec(patches=(IntervalPatch(0.4, 0.6, 1.0),)),
        outputs=("profiles",),
        out_dir=str(tmp_path / "out"),
    )
    result = run_similarity(cfg)
    assert not result.failures
    assert (tmp_path / "out" / "h0.02" / "fe_u.csv").exists()
    assert (tmp_path / "out" / "h0.02" / "fe_v.csv").exists()


def test_run_experiment_1d_table(tmp_path):
    cfg = ExperimentConfig(
        kind="interval",
        lengths=(1.0,),
        h_list=(0.02, 0.01),
        source=SourceSpec(patches=(IntervalPatch(0.395, 0.605, 4.0),)),
        outputs=("table",),
        out_dir=str(tmp_path / "out"),
    )
    result = run_experiment(cfg)
    assert not result.failures and not result.alarms
    assert (tmp_path / "out" / "table.csv").exists()
    orders = result.table.orders
    assert set(orders) == {"u_fe", "u_fd", "v_fe", "v_fd"}
    for col in orders.values():
        assert len(col) == 1


def test_cli_examples_and_compare(tmp_path, capsys):
    cfgdir = tmp_path / "configs"
    assert main(["examples", "--out", str(cfgdir), "--quiet"]) == 0
    assert (cfgdir / "fig3a_centered_patch_1d.cfg").exists()
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text(
        "domain.kind = interval\n"
        "grid.h_list = 0.05,0.025\n"
        "source.patches = 0.395,0.605,4.0\n"
    )
    code = main(
        [
            "compare",
            "--config",
            str(cfgfile),
            "--out",
            str(tmp_path / "out"),
        ]
    )
    out = capsys.readouterr().out
    assert code == 0
    assert out.startswith("h,err_u_fe")
    assert "c_obs=" in out
    assert (tmp_path / "out" / "table.csv").exists()


def test_cli_failure_exit_code(tmp_path, capsys):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text(
        "domain.kind = interval\n"
        "grid.h_list = 0.05\n"
        "source.patches = 0.395,0.605,4.0\n"
    )
    code = main(
        [
            "evolve",
            "--config",
            str(cfgfile),
            "--out",
            str(tmp_path / "out"),
            "--max-steps",
            "5",
            "--quiet",
        ]
    )
    err = capsys.readouterr().err
    assert code == 1
    assert "FAILED" in err


def test_cli_determinism(tmp_path):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text(
        "domain.kind = interval\n"
        "grid.h_list = 0.05,0.025\n"
        "source.patches = 0.395,0.605,4.0\n"
        "output.kinds = table,profiles\n"
    )
    texts = []
    for name in ("a", "b"):
        outdir = tmp_path / name
        assert (
            main(
                [
                    "compare",
                    "--config",
                    str(cfgfile),
                    "--out",
                    str(outdir),
                    "--quiet",
                ]
            )
            == 0
        )
        blob = (outdir / "table.csv").read_bytes()
        for sub in sorted(outdir.rglob("*.csv")):
            blob += sub.read_bytes()
        texts.append(blob)
    assert texts[0] == texts[1]
