import json
import re

import numpy as np
import pytest

from trainfractal.cli import main
from trainfractal.formats import field_to_bytes, read_field
from fieldutil import build_field

FINAL_RENDER_LINE = re.compile(r"^dimension=(\S+) r2=(\S+)$")
FINAL_ZOOM_LINE = re.compile(r"^median_dimension=(\S+) frames=(\d+)$")


def run(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


class TestRenderCommand:
    def test_writes_artifacts_and_final_line(self, tmp_path, capsys):
        prefix = tmp_path / "probe"
        code, out, _ = run([
            "render", "--size", "24x24", "--steps", "25", "--seed", "0",
            "--out", str(prefix), "--workers", "1"], capsys)
        assert code == 0
        assert (tmp_path / "probe.png").exists()
        assert (tmp_path / "probe.nnfr").exists()
        assert (tmp_path / "probe.json").exists()
        final = out.strip().splitlines()[-1]
        assert FINAL_RENDER_LINE.match(final)
        sidecar = json.loads((tmp_path / "probe.json").read_text())
        assert sidecar["condition"] == "tanh-fullbatch"
        assert sidecar["seed"] == 0
        assert sidecar["steps"] == 25
        with open(tmp_path / "probe.nnfr", "rb") as f:
            field = read_field(f)
        assert field.width == field.height == 24

    def test_deterministic_across_invocations(self, tmp_path, capsys):
        for name in ("a", "b"):
            code, _, _ = run([
                "render", "--size", "10x10", "--steps", "8",
                "--out", str(tmp_path / name), "--workers", "1"], capsys)
            assert code == 0
        assert (tmp_path / "a.nnfr").read_bytes() == \
            (tmp_path / "b.nnfr").read_bytes()
        assert (tmp_path / "a.png").read_bytes() == \
            (tmp_path / "b.png").read_bytes()

    def test_condition_flag_selects_preset(self, tmp_path, capsys):
        code, _, _ = run([
            "render", "--condition", "deep-linear", "--size", "6x6",
            "--steps", "5", "--out", str(tmp_path / "lin"),
            "--workers", "1"], capsys)
        assert code == 0
        with open(tmp_path / "lin.nnfr", "rb") as f:
            field = read_field(f)
        assert field.condition.id == "deep-linear"
        assert field.condition.model.dataset_size == 16

    def test_custom_window_respected(self, tmp_path, capsys):
        code, _, _ = run([
            "render", "--size", "4x4", "--steps", "3", "--workers", "1",
            "--window", "1,2,0.5,2.5", "--out", str(tmp_path / "w")], capsys)
        assert code == 0
        with open(tmp_path / "w.nnfr", "rb") as f:
            field = read_field(f)
        assert field.viewport.x_axis.lo == 1.0
        assert field.viewport.y_axis.hi == 2.5

    def test_bad_window_exits_2(self, tmp_path, capsys):
        with pytest.raises(SystemExit) as err:
            main(["render", "--window", "2,1,0,1", "--out",
                  str(tmp_path / "x")])
        assert err.value.code == 2

    def test_bad_size_exits_2(self, capsys):
        with pytest.raises(SystemExit) as err:
            main(["render", "--size", "banana"])
        assert err.value.code == 2

    def test_report_writes_figure_and_csv(self, tmp_path, capsys):
        prefix = tmp_path / "rep"
        code, _, _ = run([
            "render", "--size", "48x48", "--steps", "25", "--workers", "1",
            "--report", "--out", str(prefix)], capsys)
        assert code == 0
        assert (tmp_path / "rep.boxcount.csv").exists()
        assert (tmp_path / "rep.boxcount.png").exists()
        text = (tmp_path / "rep.boxcount.csv").read_text()
        assert text.startswith("box_size,occupied\n")


class TestZoomCommand:
    def test_writes_frames_and_manifest(self, tmp_path, capsys):
        out_dir = tmp_path / "zoomed"
        code, out, _ = run([
            "zoom", "--center", "1.5,2.3", "--halfwidth", "0.5,0.5",
            "--frames", "3", "--size", "6", "--steps", "4",
            "--out", str(out_dir), "--workers", "1"], capsys)
        assert code == 0
        for k in range(3):
            assert (out_dir / f"frame_{k:03d}.png").exists()
            assert (out_dir / f"frame_{k:03d}.nnfr").exists()
        manifest = json.loads((out_dir / "sequence.json").read_text())
        assert len(manifest["frames"]) == 3
        assert manifest["frames"][0]["viewport"]["x"] == {"lo": 1.0, "hi": 2.0}
        assert manifest["frames"][1]["viewport"]["x"] == {"lo": 1.25, "hi": 1.75}
        final = out.strip().splitlines()[-1]
        m = FINAL_ZOOM_LINE.match(final)
        assert m and m.group(2) == "3"

    def test_viewports_nest(self, tmp_path, capsys):
        out_dir = tmp_path / "nest"
        code, _, _ = run([
            "zoom", "--center", "1.0,1.0", "--halfwidth", "0.25",
            "--frames", "4", "--size", "4", "--steps", "2",
            "--out", str(out_dir), "--workers", "1"], capsys)
        assert code == 0
        manifest = json.loads((out_dir / "sequence.json").read_text())
        frames = manifest["frames"]
        for a, b in zip(frames, frames[1:]):
            assert b["viewport"]["x"]["lo"] > a["viewport"]["x"]["lo"]
            assert b["viewport"]["x"]["hi"] < a["viewport"]["x"]["hi"]


class TestFracdimCommand:
    def test_straight_boundary_dimension(self, tmp_path, capsys):
        grid = np.zeros((128, 128))
        grid[:, 64:] = 1
        field = build_field(grid)
        path = tmp_path / "line.nnfr"
        path.write_bytes(field_to_bytes(field))
        code, out, _ = run(["fracdim", "--in", str(path)], capsys)
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "box_size,occupied"
        final = lines[-1]
        dim = float(final.split("=", 1)[1])
        assert abs(dim - 1.0) <= 0.05

    def test_round_trip_of_rendered_field(self, tmp_path, capsys):
        code, _, _ = run([
            "render", "--size", "16x16", "--steps", "12", "--workers", "1",
            "--out", str(tmp_path / "f")], capsys)
        assert code == 0
        code, out, _ = run(["fracdim", "--in", str(tmp_path / "f.nnfr")],
                           capsys)
        assert code == 0
        assert out.startswith("box_size,occupied")
        assert out.strip().splitlines()[-1].startswith("dimension=")

    def test_truncated_file_exits_1(self, tmp_path, capsys):
        field = build_field(np.zeros((4, 4)))
        path = tmp_path / "trunc.nnfr"
        path.write_bytes(field_to_bytes(field)[:-7])
        code, _, err = run(["fracdim", "--in", str(path)], capsys)
        assert code == 1
        assert "error" in err

    def test_missing_file_exits_1(self, tmp_path, capsys):
        code, _, err = run(["fracdim", "--in", str(tmp_path / "no.nnfr")],
                           capsys)
        assert code == 1

    def test_plot_flag_writes_figure(self, tmp_path, capsys):
        grid = np.zeros((64, 64))
        grid[:, 32:] = 1
        path = tmp_path / "line.nnfr"
        path.write_bytes(field_to_bytes(build_field(grid)))
        fig = tmp_path / "fit.png"
        code, _, _ = run(["fracdim", "--in", str(path), "--plot", str(fig)],
                         capsys)
        assert code == 0
        assert fig.exists() and fig.stat().st_size > 0


class TestOracleCheckCommand:
    def test_agreement_on_default_seed(self, capsys):
        code, out, _ = run(["oracle-check", "--samples", "48"], capsys)
        lines = out.strip().splitlines()
        assert lines[0].startswith("critical_eta1=")
        final = lines[-1]
        assert final.startswith("agreement=")
        agreement = float(final.split("=", 1)[1])
        assert code == 0
        assert agreement >= 0.99


class TestServeCommand:
    def test_help_exits_cleanly(self):
        with pytest.raises(SystemExit) as err:
            main(["serve", "--help"])
        assert err.value.code == 0


class TestParserDefaults:
    def test_render_defaults_match_paper_scale(self):
        from trainfractal.cli import _build_parser
        parser = _build_parser()
        args = parser.parse_args(["render"])
        assert args.condition == "tanh-fullbatch"
        assert args.seed == 0
        assert args.size == (1024, 1024)
        assert args.steps is None  # preset default of 500
        args = parser.parse_args(["zoom", "--center", "0,0",
                                  "--halfwidth", "1", "--out", "d"])
        assert args.frames == 50
        assert args.size == 1024
