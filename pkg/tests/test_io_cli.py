"""Tests for serialization, config parsing, and the command line tool."""

import json
import os

import numpy as np
import pytest

import chaosid as ci
from chaosid import io
from chaosid.cli import CONFIG_DEFAULTS, main


# ---------------------------------------------------------------------------
# canonical JSON


def test_canonical_json_is_order_independent():
    a = io.canonical_json({"b": 1, "a": [1.5, 2.5], "c": {"y": 2, "x": 1}})
    b = io.canonical_json({"c": {"x": 1, "y": 2}, "a": [1.5, 2.5], "b": 1})
    assert a == b


def test_canonical_json_round_trips_floats():
    values = [1.0 / 3.0, 1e-17, 6.02e23, -0.1, 2.0**-52]
    text = io.canonical_json({"v": values})
    back = json.loads(text)
    assert back["v"] == values


def test_canonical_json_non_finite_literals():
    text = io.canonical_json({"a": float("inf"), "b": float("-inf"), "c": float("nan")})
    assert "Infinity" in text and "-Infinity" in text and "NaN" in text
    back = json.loads(text)
    assert back["a"] == float("inf")
    assert back["b"] == float("-inf")
    assert np.isnan(back["c"])


def test_canonical_json_handles_arrays_and_bools():
    text = io.canonical_json({"m": np.arange(4.0).reshape(2, 2), "flag": True, "n": 3})
    back = json.loads(text)
    assert back["m"] == [[0.0, 1.0], [2.0, 3.0]]
    assert back["flag"] is True
    assert back["n"] == 3


def test_write_and_load_json(tmp_path):
    path = tmp_path / "doc.json"
    doc = {"schema": "test/1", "x": [1.25, 2.5], "name": "abc"}
    io.write_json(path, doc)
    assert io.load_json(path) == doc


# ---------------------------------------------------------------------------
# CSV


def test_read_series_with_header(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("left,right\n1,2\n3,4\n5,6\n")
    series = io.read_series(path, dt=0.5)
    assert series.labels == ("left", "right")
    assert series.dt == 0.5
    assert np.array_equal(series.values, [[1, 2], [3, 4], [5, 6]])


def test_read_series_without_header(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("1.5\n2.5\n3.5\n")
    series = io.read_series(path)
    # the series fills in default channel names when the file has no header
    assert series.labels == ("ch0",)
    assert np.array_equal(series.values[:, 0], [1.5, 2.5, 3.5])


def test_read_series_skips_comments_and_blanks(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("# generated\nv\n1\n\n# middle note\n2\n3\n")
    series = io.read_series(path)
    assert series.labels == ("v",)
    assert series.values.shape == (3, 1)


def test_read_series_crlf(tmp_path):
    path = tmp_path / "s.csv"
    path.write_bytes(b"a,b\r\n1,2\r\n3,4\r\n")
    series = io.read_series(path)
    assert series.labels == ("a", "b")
    assert np.array_equal(series.values, [[1, 2], [3, 4]])


def test_read_series_ragged_row(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("1,2\n3\n")
    with pytest.raises(ci.InputError):
        io.read_series(path)


def test_read_series_non_numeric_cell(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("1,2\n3,oops\n")
    with pytest.raises(ci.InputError):
        io.read_series(path)


def test_read_series_missing_file(tmp_path):
    with pytest.raises(ci.NotFoundError):
        io.read_series(tmp_path / "nothing.csv")


def test_series_round_trip_is_exact(tmp_path):
    rng = np.random.default_rng(51)
    values = rng.normal(size=(40, 3))
    series = ci.TimeSeries(values, dt=0.01, labels=("p", "q", "r"))
    path = tmp_path / "rt.csv"
    io.write_series(path, series, comments=("tail note",))
    back = io.read_series(path, dt=0.01)
    assert back.labels == ("p", "q", "r")
    assert np.array_equal(back.values, values)


# ---------------------------------------------------------------------------
# structured documents


def test_embedding_round_trip(tmp_path):
    rng = np.random.default_rng(52)
    emb = ci.DelayEmbedding(states=rng.normal(size=(30, 3)), tau=4, m=3, source_channel=1, dt=0.05)
    path = tmp_path / "embedding.json"
    io.write_embedding(path, emb)
    back = io.read_embedding(path)
    assert np.array_equal(back.states, emb.states)
    assert (back.tau, back.m, back.source_channel, back.dt) == (4, 3, 1, 0.05)


def test_model_round_trip_every_term_type(tmp_path):
    basis = ci.ForcingBasis(
        (
            ci.Sinusoid(omega=3.2227, phi=0.17, time_power=1.0),
            ci.Exponential(rate=-0.25),
            ci.Polynomial(degree=2),
            ci.Polynomial(degree=2, coeffs=(-0.93, -2.0, 1.0)),
            ci.Product(ci.Exponential(rate=1.0, time_power=0.0001), ci.Sinusoid(omega=1.0, phi=0.0, time_power=0.4)),
        )
    )
    rng = np.random.default_rng(53)
    model = ci.StateSpaceModel(
        A=rng.normal(size=(3, 3)),
        B=rng.normal(size=(3, 5)),
        C=rng.normal(size=(1, 3)),
        basis=basis,
        dt=0.05,
        embedding_tau=26,
        embedding_channel=0,
    )
    path = tmp_path / "model.json"
    io.write_model(path, model)
    back = io.read_model(path)
    assert np.array_equal(back.A, model.A)
    assert np.array_equal(back.B, model.B)
    assert np.array_equal(back.C, model.C)
    assert back.basis.terms == basis.terms
    assert back.dt == model.dt
    assert back.embedding_tau == 26


def test_model_schema_checked(tmp_path):
    emb = ci.DelayEmbedding(states=np.zeros((5, 2)), tau=1, m=2)
    path = tmp_path / "embedding.json"
    io.write_embedding(path, emb)
    with pytest.raises(ci.InputError):
        io.read_model(path)


def test_symmetry_report_round_trip(tmp_path):
    theta = 0.61
    rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    transforms = [
        ci.SymmetryTransform(
            transform_class=ci.TransformClass.ROTATION,
            rotation=rot,
            scale=1.0,
            translation=np.array([0.1, -0.2]),
            affine=np.eye(2),
            residual=0.003,
            source_segment=0,
            target_segment=2,
        ),
        ci.SymmetryTransform(
            transform_class=ci.TransformClass.SCALING,
            rotation=np.eye(2),
            scale=1.4,
            translation=np.zeros(2),
            affine=np.eye(2),
            residual=0.004,
            source_segment=1,
            target_segment=3,
        ),
    ]
    report = ci.classify_symmetry(transforms, threshold=0.01, diameter=2.5)
    path = tmp_path / "symmetry.json"
    io.write_symmetry_report(path, report)
    back = io.read_symmetry_report(path)
    assert back.dominant_class is report.dominant_class
    assert back.class_histogram == report.class_histogram
    assert back.threshold == report.threshold
    assert back.diameter == report.diameter
    assert len(back.transforms) == 2
    assert np.array_equal(back.transforms[0].rotation, rot)
    assert back.transforms[0].source_segment == 0
    assert back.transforms[1].scale == 1.4
    assert back.recommended_basis.terms == report.recommended_basis.terms


# ---------------------------------------------------------------------------
# config parsing


def test_parse_config_defaults_and_overrides(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(
        "# comment\n"
        "\n"
        "input.path = wave.csv\n"
        "ga.population=80\n"
        "input.dt = 0.25\n"
        "identify.refine = false\n"
        "validate.enabled = 1\n"
    )
    config = io.parse_config(path, CONFIG_DEFAULTS)
    assert config["input.path"] == "wave.csv"
    assert config["ga.population"] == 80
    assert config["input.dt"] == 0.25
    assert config["identify.refine"] is False
    assert config["validate.enabled"] is True
    # untouched keys keep their defaults
    assert config["ga.generations"] == CONFIG_DEFAULTS["ga.generations"]


def test_parse_config_rejects_unknown_key(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("nope.key=1\n")
    with pytest.raises(ci.ConfigError, match="nope.key"):
        io.parse_config(path, CONFIG_DEFAULTS)


def test_parse_config_rejects_bad_value(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("ga.population=many\n")
    with pytest.raises(ci.ConfigError, match="ga.population"):
        io.parse_config(path, CONFIG_DEFAULTS)


def test_parse_config_rejects_bad_bool(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("identify.refine=maybe\n")
    with pytest.raises(ci.ConfigError):
        io.parse_config(path, CONFIG_DEFAULTS)


def test_parse_config_rejects_missing_file(tmp_path):
    with pytest.raises(ci.NotFoundError):
        io.parse_config(tmp_path / "none.cfg", CONFIG_DEFAULTS)


def test_parse_config_rejects_bare_line(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("just some words\n")
    with pytest.raises(ci.ConfigError):
        io.parse_config(path, CONFIG_DEFAULTS)


# ---------------------------------------------------------------------------
# command line, stage by stage


def _write_wave_csv(path, n=400):
    """A clean quasi-periodic wave: embeds to a closed curve."""
    k = np.arange(n)
    values = np.sin(0.1237 * k)
    io.write_series(path, ci.TimeSeries(values.reshape(-1, 1), dt=1.0, labels=("y",)))


def test_cli_stage_chain(tmp_path, capsys):
    csv = tmp_path / "wave.csv"
    _write_wave_csv(csv)
    out = str(tmp_path)

    rc = main(["embed", str(csv), "--tau", "12", "--m", "2", "--out-dir", out])
    assert rc == 0
    assert (tmp_path / "embedding.json").exists()
    assert (tmp_path / "diagnostics_acf.csv").exists()
    assert (tmp_path / "diagnostics_ami.csv").exists()
    assert (tmp_path / "diagnostics_fnn.csv").exists()

    rc = main(
        [
            "symmetry",
            str(tmp_path / "embedding.json"),
            "--population",
            "48",
            "--generations",
            "40",
            "--threshold",
            "0.01",
            "--out-dir",
            out,
        ]
    )
    assert rc == 0
    report = io.read_symmetry_report(tmp_path / "symmetry.json")
    assert report.dominant_class is ci.TransformClass.ROTATION

    rc = main(
        [
            "identify",
            str(tmp_path / "embedding.json"),
            str(tmp_path / "symmetry.json"),
            "--out-dir",
            out,
        ]
    )
    assert rc == 0
    model = io.read_model(tmp_path / "model.json")
    assert model.A.shape == (2, 2)
    fit_doc = io.load_json(tmp_path / "fit.json")
    assert "one_step_nrmse" in fit_doc

    rc = main(
        ["simulate", str(tmp_path / "model.json"), "--steps", "200", "--x0", "0.1,0.2", "--out-dir", out]
    )
    assert rc == 0
    trajectory = io.read_series(tmp_path / "trajectory.csv")
    assert trajectory.values.shape == (200, 3)

    rc = main(
        [
            "validate",
            str(csv),
            str(tmp_path / "model.json"),
            "--no-dimension",
            "--out-dir",
            out,
        ]
    )
    assert rc == 0
    comparison = io.load_json(tmp_path / "comparison.json")
    assert "nrmse" in comparison

    capsys.readouterr()


def test_cli_missing_input_exits_2(capsys):
    rc = main(["embed", "no_such_file.csv"])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_cli_constant_series_exits_3(tmp_path, capsys):
    csv = tmp_path / "flat.csv"
    csv.write_text("y\n" + "1.0\n" * 50)
    rc = main(["embed", str(csv), "--out-dir", str(tmp_path)])
    assert rc == 3
    capsys.readouterr()


def test_cli_divergent_simulation_exits_4(tmp_path, capsys):
    model = ci.StateSpaceModel(
        A=np.array([[2.0]]),
        B=np.zeros((1, 0)),
        C=np.eye(1),
        basis=ci.ForcingBasis(()),
        dt=1.0,
    )
    path = tmp_path / "model.json"
    io.write_model(path, model)
    rc = main(["simulate", str(path), "--steps", "1200", "--x0", "1.0", "--out-dir", str(tmp_path)])
    assert rc == 4
    capsys.readouterr()


def test_cli_bad_x0_exits_2(tmp_path, capsys):
    model = ci.StateSpaceModel(
        A=np.eye(1), B=np.zeros((1, 0)), C=np.eye(1), basis=ci.ForcingBasis(()), dt=1.0
    )
    path = tmp_path / "model.json"
    io.write_model(path, model)
    rc = main(["simulate", str(path), "--x0", "a,b", "--out-dir", str(tmp_path)])
    assert rc == 2
    rc = main(["simulate", str(path), "--x0", "1,2,3", "--out-dir", str(tmp_path)])
    assert rc == 2
    capsys.readouterr()


def test_cli_validate_needs_a_model(tmp_path, capsys):
    csv = tmp_path / "wave.csv"
    _write_wave_csv(csv)
    rc = main(["validate", str(csv), "--out-dir", str(tmp_path)])
    assert rc == 2
    capsys.readouterr()


def test_cli_symmetry_insufficient_segments_exits_3(tmp_path, capsys):
    emb = ci.DelayEmbedding(states=np.random.default_rng(0).normal(size=(5, 2)), tau=1, m=2)
    path = tmp_path / "embedding.json"
    io.write_embedding(path, emb)
    rc = main(["symmetry", str(path), "--out-dir", str(tmp_path)])
    assert rc == 3
    capsys.readouterr()


def test_cli_bad_config_key_exits_2(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("nope.key=1\n")
    rc = main(["pipeline", str(cfg)])
    assert rc == 2
    assert "nope.key" in capsys.readouterr().err


def test_cli_fixtures_list_dump_verify(tmp_path, capsys):
    rc = main(["fixtures"])
    assert rc == 0
    text = capsys.readouterr().out
    for label in ci.fixture_names():
        assert label in text

    rc = main(["fixtures", "--dump", "Example3_ViscousFluid", "--out-dir", str(tmp_path)])
    assert rc == 0
    model = io.read_model(tmp_path / "Example3_ViscousFluid_model.json")
    assert model.A.shape == (6, 6)
    capsys.readouterr()

    rc = main(["fixtures", "--verify"])
    assert rc == 0
    assert "verified" in capsys.readouterr().out


def test_cli_unknown_fixture_exits_2(tmp_path, capsys):
    rc = main(["fixtures", "--dump", "Example9_Missing", "--out-dir", str(tmp_path)])
    assert rc == 2
    capsys.readouterr()


# ---------------------------------------------------------------------------
# pipeline


def _pipeline_config(tmp_path, out_name):
    csv = tmp_path / "wave.csv"
    if not csv.exists():
        _write_wave_csv(csv, n=1500)
    cfg = tmp_path / f"{out_name}.cfg"
    cfg.write_text(
        f"input.path = {csv}\n"
        "ga.population = 48\n"
        "ga.generations = 60\n"
        f"output.dir = {tmp_path / out_name}\n"
    )
    return cfg


def test_cli_pipeline_end_to_end_and_deterministic(tmp_path, capsys):
    cfg = _pipeline_config(tmp_path, "run1")
    rc = main(["pipeline", str(cfg)])
    assert rc == 0
    run1 = tmp_path / "run1"
    for name in ("embedding.json", "symmetry.json", "model.json", "fit.json", "report.json"):
        assert (run1 / name).exists()
    report = io.load_json(run1 / "report.json")
    assert report["schema"] == "run-report/1"
    assert report["metrics"] is not None
    assert report["embedding"]["m"] >= 2

    rc = main(["pipeline", str(cfg), "--out-dir", str(tmp_path / "run2")])
    assert rc == 0
    other = io.load_json(tmp_path / "run2" / "report.json")
    report.pop("timings")
    other.pop("timings")
    report["config"]["output.dir"] = ""
    other["config"]["output.dir"] = ""
    assert report == other
    capsys.readouterr()


def test_cli_pipeline_requires_input_path(tmp_path, capsys):
    cfg = tmp_path / "empty.cfg"
    cfg.write_text("run.seed = 1\n")
    rc = main(["pipeline", str(cfg)])
    assert rc == 2
    capsys.readouterr()
