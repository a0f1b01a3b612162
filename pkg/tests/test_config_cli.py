import json
from fractions import Fraction

import pytest

from push_sentinel import cli
from push_sentinel.config import (
    apply_env_overrides,
    build_pipeline_config,
    load_config_file,
)
from push_sentinel.ingest import SourceMode

from conftest import scrolling_frames, write_video


@pytest.fixture
def video_path(tmp_path):
    return write_video(tmp_path / "cfg.avi", scrolling_frames(125, 132, 132))


def write_toml(tmp_path, video_path, extra=""):
    path = tmp_path / "config.toml"
    path.write_text(f"""
[source]
mode = "file_replay"
path_or_url = "{video_path}"

[roi]
top_left = [2, 2]
bottom_right = [130, 130]

[grid]
rows = 2
cols = 2

[classifier]
input_side = 32
{extra}
""")
    return path


class TestConfigLoading:
    def test_toml_to_pipeline_config(self, tmp_path, video_path):
        data = load_config_file(write_toml(tmp_path, video_path))
        cfg = build_pipeline_config(data)
        assert cfg.source.mode is SourceMode.FILE_REPLAY
        assert cfg.source.native_fps == 25.0
        assert cfg.source.downscale_factor == Fraction(1, 2)
        assert cfg.grid.n == 2 and cfg.grid.m == 2
        assert cfg.roi.top_left == (2, 2)
        assert cfg.interval_s == 2.0
        assert cfg.segment_deadline_s == 2.0
        assert cfg.store is None and cfg.listen is None

    def test_env_overrides_take_precedence(self, tmp_path, video_path):
        data = load_config_file(write_toml(tmp_path, video_path))
        env = {"PUSH_SENTINEL_GRID_ROWS": "1",
               "PUSH_SENTINEL_SAMPLE_INTERVAL_S": "1.0",
               "PUSH_SENTINEL_SOURCE_MODE": "file_replay"}
        cfg = build_pipeline_config(apply_env_overrides(data, env))
        assert cfg.grid.n == 1
        assert cfg.interval_s == 1.0

    def test_local_store_and_listen(self, tmp_path, video_path):
        extra = f"""
[store]
kind = "local"
root = "{tmp_path / 'archive'}"

[server]
listen = "127.0.0.1:0"
"""
        data = load_config_file(write_toml(tmp_path, video_path, extra))
        cfg = build_pipeline_config(data)
        assert cfg.store is not None
        assert cfg.listen == ("127.0.0.1", 0)

    def test_missing_source_rejected(self):
        with pytest.raises(ValueError, match="path_or_url"):
            build_pipeline_config({"roi": {"top_left": [0, 0],
                                           "bottom_right": [10, 10]}})

    def test_ground_cell_scale_warns_on_fine_grids(self, tmp_path, video_path):
        data = load_config_file(write_toml(tmp_path, video_path))
        data["grid"] = {"rows": 4, "cols": 4, "px_per_meter": 64.0}
        with pytest.warns(UserWarning, match="1m"):
            build_pipeline_config(data)


class TestCli:
    def test_eval_command(self, tmp_path, capsys):
        (tmp_path / "pred.csv").write_text(
            "sample,delta\na,0.9\nb,0.2\nc,0.8\nd,0.4\n")
        (tmp_path / "gt.csv").write_text(
            "sample,label\na,pushing\nb,non_pushing\nc,pushing\nd,non_pushing\n")
        rc = cli.main(["eval", "--predictions", str(tmp_path / "pred.csv"),
                       "--labels", str(tmp_path / "gt.csv")])
        out = capsys.readouterr().out
        assert rc == 0
        assert "accuracy   100%" in out
        assert "auc        100%" in out

    def test_eval_json_output(self, tmp_path, capsys):
        (tmp_path / "pred.csv").write_text("a,0.9\nb,0.2\n")
        (tmp_path / "gt.csv").write_text("a,pushing\nb,non_pushing\n")
        rc = cli.main(["eval", "--predictions", str(tmp_path / "pred.csv"),
                       "--labels", str(tmp_path / "gt.csv"), "--json"])
        assert rc == 0
        data = json.loads(capsys.readouterr().out)
        assert data["accuracy"] == 1.0

    def test_datasetgen_command(self, tmp_path, capsys):
        video = write_video(tmp_path / "dg.avi", scrolling_frames(125, 48, 64))
        frames = (0, 13, 25, 38, 50, 63, 75, 88, 100)
        (tmp_path / "traj.txt").write_text(
            "\n".join(f"1 {f} 20 20" for f in frames) + "\n" +
            "\n".join(f"2 {f} 100 30" for f in frames) + "\n")
        (tmp_path / "gt.csv").write_text(
            "\n".join(f"1,{f},pushing" for f in frames) + "\n" +
            "\n".join(f"2,{f},non_pushing" for f in frames) + "\n")
        rc = cli.main([
            "datasetgen", "--video", str(video),
            "--trajectories", str(tmp_path / "traj.txt"),
            "--groundtruth", str(tmp_path / "gt.csv"),
            "--roi", "0,0,64,48", "--grid", "1x2", "--downscale", "1",
            "--ped-radius-px", "4", "--seed", "3",
            "--out", str(tmp_path / "ds")])
        out = capsys.readouterr().out
        assert rc == 0
        assert (tmp_path / "ds" / "manifest.csv").is_file()
        assert "split sizes" in out

    def test_serve_command_runs_to_completion(self, tmp_path, video_path, capsys):
        config = write_toml(tmp_path, video_path)
        rc = cli.main(["serve", "--config", str(config), "--max-segments", "2"])
        out = capsys.readouterr().out
        assert rc == 0
        assert "2 segments processed, 2 ok" in out
