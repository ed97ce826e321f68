import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from specrecon.cli import main
from specrecon.config import (
    ExperimentConfig,
    apply_overrides,
    parse_config,
    serialize_config,
)
from specrecon.errors import ConfigParseError, EmptySeriesError
from specrecon.plots import emit_plot
from specrecon.runner import run_experiment


class TestParseConfig:
    def test_empty_gives_defaults(self):
        cfg = parse_config("")
        assert cfg.command == "validate"
        assert cfg.p == 100
        assert cfg.c == 2.0
        assert cfg.seed == 0

    def test_comments_and_values(self):
        cfg = parse_config("# a comment\np = 40\nc = 4  # inline\nmodel = identity\n")
        assert (cfg.p, cfg.c, cfg.model) == (40, 4.0, "identity")

    def test_unknown_key_is_error(self):
        with pytest.raises(ConfigParseError, match="unknown key"):
            parse_config("pp = 40\n")

    def test_negative_c_names_key(self):
        with pytest.raises(ConfigParseError, match="'c'"):
            parse_config("c = -1\n")

    def test_round_trip(self):
        cfg = parse_config("p = 33\ntrials = 7\nformats = csv,json\n")
        assert parse_config(serialize_config(cfg)) == cfg

    def test_overrides(self):
        cfg = apply_overrides(parse_config(""), ["p=12", "command=simulate"])
        assert cfg.p == 12 and cfg.command == "simulate"

    def test_bad_override(self):
        with pytest.raises(ConfigParseError):
            apply_overrides(parse_config(""), ["nope"])


class TestEmitPlot:
    def test_valid_svg(self, tmp_path):
        path = tmp_path / "t.svg"
        emit_plot({"s": ([1, 2, 3], [3, 2, 1])}, "spectrum_overlay", str(path))
        root = ET.parse(path).getroot()
        assert root.tag.endswith("svg")

    def test_legend_labels_present(self, tmp_path):
        path = tmp_path / "t.svg"
        idx = np.arange(5)
        emit_plot(
            {"truth": (idx, idx + 1.0), "sample": (idx, idx + 1.5), "reconstructed": (idx, idx + 1.2)},
            "spectrum_overlay",
            str(path),
        )
        text = path.read_text()
        for label in ("truth", "sample", "reconstructed"):
            assert label in text

    def test_empty_series_raises(self, tmp_path):
        with pytest.raises(EmptySeriesError):
            emit_plot({}, "spectrum_overlay", str(tmp_path / "x.svg"))

    def test_deterministic_bytes(self, tmp_path):
        a, b = tmp_path / "a.svg", tmp_path / "b.svg"
        series = {"s": ([1.0, 2.0], [2.0, 1.0])}
        emit_plot(series, "density_overlay", str(a))
        emit_plot(series, "density_overlay", str(b))
        assert a.read_bytes() == b.read_bytes()

    def test_slope_annotation(self, tmp_path):
        path = tmp_path / "e.svg"
        cs = np.array([2.0, 4.0, 8.0, 16.0])
        emit_plot({"err": (cs, 1.0 / cs)}, "error_vs_c", str(path))
        assert "slope" in path.read_text()


class TestRunExperiment:
    def test_reconstruct_artifacts(self, tmp_path):
        cfg = apply_overrides(
            parse_config(""),
            ["command=reconstruct", "p=40", "trials=3", f"output_dir={tmp_path}/r"],
        )
        manifest = run_experiment(cfg)
        assert set(manifest) >= {"report.csv", "summary.json", "spectrum_overlay.svg"}
        header = (tmp_path / "r" / "report.csv").read_text().splitlines()[0]
        assert header == "index,sample,estimate,truth,raw_rel_err,recon_rel_err,valid"
        doc = json.loads((tmp_path / "r" / "summary.json").read_text())
        assert "median_recon_rel_err" in doc

    def test_manifest_determinism(self, tmp_path):
        cfg = apply_overrides(
            parse_config(""),
            ["command=simulate", "p=24", "trials=2", f"output_dir={tmp_path}/d"],
        )
        m1 = run_experiment(cfg)
        m2 = run_experiment(cfg)
        assert m1 == m2

    def test_formats_gate_outputs(self, tmp_path):
        cfg = apply_overrides(
            parse_config(""),
            ["command=simulate", "p=20", "trials=2", "formats=json", f"output_dir={tmp_path}/f"],
        )
        manifest = run_experiment(cfg)
        assert "report.csv" not in manifest
        assert not any(name.endswith(".svg") for name in manifest)
        assert "summary.json" in manifest


class TestCliMain:
    def test_success_exit_zero(self, tmp_path, capsys):
        rc = main(["simulate", "--set", "p=20", "--set", "trials=2", "--out", str(tmp_path / "o")])
        assert rc == 0
        assert (tmp_path / "o" / "manifest.json").exists()

    def test_config_file(self, tmp_path):
        cfg_file = tmp_path / "exp.cfg"
        cfg_file.write_text("p = 20\ntrials = 2\n")
        rc = main(["simulate", "--config", str(cfg_file), "--out", str(tmp_path / "o2")])
        assert rc == 0

    def test_bad_key_exit_two(self, tmp_path, capsys):
        rc = main(["simulate", "--set", "bogus=1", "--out", str(tmp_path / "x")])
        assert rc == 2

    def test_missing_config_exit_four(self, tmp_path):
        rc = main(["simulate", "--config", str(tmp_path / "absent.cfg")])
        assert rc == 4
