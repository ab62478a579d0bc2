import json

import pytest

from cvtnet import cli, pipeline
from cvtnet.config import ConfigError, RunConfig, validate_config

FAST = ["-s", "epochs=60", "-s", "n_trees=10"]


def run(capsys, *argv):
    code = cli.main(list(argv))
    return code, capsys.readouterr()


def error_of(captured):
    lines = captured.err.strip().splitlines()
    assert len(lines) == 1
    return json.loads(lines[0])


def test_empty_config_echoes_defaults(tmp_path, capsys):
    cfg_file = tmp_path / "empty.cfg"
    cfg_file.write_text("")
    code, cap = run(capsys, "validate-config", "-c", str(cfg_file), "-o", str(tmp_path / "o"))
    assert code == 0
    expected = RunConfig(output_dir=str(tmp_path / "o")).echo()
    assert cap.out == expected
    assert len(expected.splitlines()) == len(RunConfig.__dataclass_fields__)
    assert (tmp_path / "o" / "config.txt").read_text() == RunConfig().echo(with_output_dir=False)


def test_comments_and_colors(tmp_path):
    cfg_file = tmp_path / "c.cfg"
    cfg_file.write_text("# a comment\n\ncolor_low = #00ff00\ncorrelation = kendall\n")
    cfg = validate_config(cfg_file)
    assert cfg.color_low == "#00ff00"
    assert cfg.correlation == "kendall_tau_b"


def test_bins_zero_names_key(tmp_path, capsys):
    cfg_file = tmp_path / "bad.cfg"
    cfg_file.write_text("bins = 0\n")
    code, cap = run(capsys, "validate-config", "-c", str(cfg_file), "-o", str(tmp_path))
    assert code == 1
    err = error_of(cap)
    assert err["code"] == 1 and err["message"].startswith("bins:")


@pytest.mark.parametrize("pair, key", [
    (("nbins", "3"), "nbins"),
    (("seed", "-1"), "seed"),
    (("train_fraction", "1.5"), "train_fraction"),
    (("hidden", "6,0"), "hidden"),
    (("bootstrap", "maybe"), "bootstrap"),
    (("correlation", "distance"), "correlation"),
])
def test_config_errors_name_key(pair, key):
    with pytest.raises(ConfigError, match=f"^{key}:"):
        validate_config(overrides=[pair])


def test_flags_override_file(tmp_path):
    cfg_file = tmp_path / "c.cfg"
    cfg_file.write_text("bins = 5\n")
    assert validate_config(cfg_file, [("bins", "7")]).bins == 7


def test_usage_errors(capsys):
    code, cap = run(capsys, "frobnicate")
    assert code == 1 and error_of(cap)["error"] == "usage"
    code, cap = run(capsys, "train", "-s", "novalue")
    assert code == 1


def test_missing_config_file(tmp_path, capsys):
    code, cap = run(capsys, "train", "-c", str(tmp_path / "nope.cfg"))
    assert code == 1


def test_rank_before_analyze(tmp_path, capsys):
    out = tmp_path / "o"
    code, cap = run(capsys, "rank", "-o", str(out))
    assert code == 2
    err = error_of(cap)
    assert err["type"] == "MissingArtifact"
    assert "model.json" in err["message"]
    # only the config echo could have been written, and it is cleaned up
    assert not (out / "config.txt").exists()


def test_rank_names_missing_correlation(tmp_path, capsys):
    out = str(tmp_path / "o")
    assert run(capsys, "train", "-o", out, *FAST)[0] == 0
    code, cap = run(capsys, "rank", "-o", out, *FAST)
    assert code == 2
    assert "correlation_0_1.csv" in error_of(cap)["message"]


def test_bad_data_file(tmp_path, capsys):
    data = tmp_path / "d.csv"
    data.write_text("a,b,species\n1,2,x\n3,oops,y\n")
    code, cap = run(capsys, "train", "-o", str(tmp_path / "o"), "-s", f"data={data}")
    assert code == 2
    assert "row" in error_of(cap)["message"]


def test_divergence_is_numeric_and_cleans_up(tmp_path, capsys):
    out = tmp_path / "o"
    code, cap = run(capsys, "train", "-o", str(out), "-s", "learning_rate=1e300",
                    "-s", "epochs=5")
    assert code == 3
    assert error_of(cap)["type"] == "TrainingDiverged"
    assert not any(out.iterdir())


def test_failed_stage_removes_its_partial_files(tmp_path, capsys, monkeypatch):
    out = tmp_path / "o"
    assert run(capsys, "train", "-o", str(out), *FAST)[0] == 0
    before = sorted(p.name for p in out.iterdir())

    def boom(*args, **kwargs):
        raise FloatingPointError("injected")

    # traces and CDFs are on disk by the time correlations are computed
    monkeypatch.setattr(pipeline.depstats, "correlation_matrix", boom)
    code, cap = run(capsys, "analyze", "-o", str(out), *FAST)
    assert code == 3 and error_of(cap)["message"] == "injected"
    assert sorted(p.name for p in out.iterdir()) == [n for n in before if n != "config.txt"]


def test_env_var_sets_output_dir(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "env"))
    assert run(capsys, "train", *FAST)[0] == 0
    assert (tmp_path / "env" / "model.json").is_file()
    assert run(capsys, "train", "-o", str(tmp_path / "flag"), *FAST)[0] == 0
    assert (tmp_path / "flag" / "model.json").is_file()


def test_spearman_propagates(tmp_path, capsys):
    out = tmp_path / "o"
    assert run(capsys, "train", "-o", str(out), *FAST)[0] == 0
    assert run(capsys, "analyze", "-o", str(out), *FAST, "-s", "correlation=spearman")[0] == 0
    for l in range(3):
        rows = [r for r in (out / f"correlation_{l}_{l + 1}.csv").read_text().splitlines()
                if not r.startswith("#")]
        assert rows[0].split(",")[4] == "kind"
        assert {r.split(",")[4] for r in rows[1:]} == {"spearman"}


def test_artifacts_are_self_describing(tmp_path, capsys):
    out = tmp_path / "o"
    assert run(capsys, "all", "-o", str(out), *FAST)[0] == 0
    cfg = validate_config(overrides=[("epochs", "60"), ("n_trees", "10")])
    tag = f"config_hash={cfg.digest()} seed={cfg.seed}"
    for name in ("traces.csv", "cdfs.csv", "correlation_0_1.csv", "path_ranking.csv",
                 "edge_importance.csv", "feature_importance.csv", "importance_bars.csv",
                 "network.dot"):
        assert tag in (out / name).read_text().splitlines()[0], name
    for name in ("train_summary.json", "importance_report.json", "forest_summary.json"):
        meta = json.loads((out / name).read_text())["meta"]
        assert meta["config_hash"] == cfg.digest() and meta["tool"].startswith("cvtnet ")
    assert json.loads((out / "model.json").read_text())["meta"]["seed"] == 7


def test_default_all_ranking_top_rows(tmp_path, capsys):
    out = tmp_path / "o"
    assert run(capsys, "all", "-o", str(out))[0] == 0
    rows = [r for r in (out / "path_ranking.csv").read_text().splitlines()
            if not r.startswith("#")]
    assert rows[0].startswith("rank,path,ccc_setosa,ccc_versicolor,ccc_virginica,var_ccc")
    assert len(rows) == 145
    assert all(r.split(",")[1][:3] in ("x_2", "x_3") for r in rows[1:11])


def test_stagewise_equals_all(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(capsys, "all", "-o", str(a), *FAST)[0] == 0
    for stage in pipeline.STAGES:
        assert run(capsys, stage, "-o", str(b), *FAST)[0] == 0
    for p in a.iterdir():
        assert p.read_bytes() == (b / p.name).read_bytes(), p.name


def test_dead_node_run_completes(tmp_path, capsys):
    out = tmp_path / "o"
    assert run(capsys, "train", "-o", str(out), *FAST)[0] == 0
    model = json.loads((out / "model.json").read_text())
    model["weights"][0][1] = [0.0] * 4
    model["biases"][0][1] = -1.0
    (out / "model.json").write_text(json.dumps(model))
    for stage in ("analyze", "rank", "compare-rf", "render"):
        code, cap = run(capsys, stage, "-o", str(out), *FAST)
        assert code == 0, (stage, cap.err)
    analysis = json.loads((out / "analysis_summary.json").read_text())
    assert {"kind": "constant_node", "node": "h0_1", "value": 0.0} in analysis["warnings"]
    report = json.loads((out / "importance_report.json").read_text())
    assert report["excluded_paths"] >= 4 * 6 * 1
    assert report["warnings"][0]["kind"] == "undefined_paths"
    ranking = (out / "path_ranking.csv").read_text().splitlines()
    assert all(line.endswith(",0") for line in ranking if ">h0_1>" in line)
