import json
import os
import shutil

import pytest

from ipdlab import cli
from ipdlab.batch import BatchConfig, load_config, parse_seed_span, run_batch
from ipdlab.strategies.registry import manifest_digest, render_manifest
from ipdlab.tournament import ConfigError
from ipdlab.trials import ParameterRanges, load_directory, tournament_results

POOL = ("Cooperator", "Defector", "Tit For Tat", "Grudger", "Alternator", "Random: 0.5", "Win-Stay Lose-Shift",
        "ZD-Extort-2", "Bully", "Suspicious Tit For Tat")
CFG = BatchConfig(ranges=ParameterRanges(N=(3, 6), k=(1, 3), n=(1, 20)), pool=POOL, seeds=(0, 11))


@pytest.fixture(scope="module")
def batch(tmp_path_factory):
    out = tmp_path_factory.mktemp("batch")
    run_batch(CFG, out=out)
    return out


def test_seed_spans():
    assert parse_seed_span("0..11420") == (0, 11420)
    assert parse_seed_span([3, 4]) == (3, 4)
    assert parse_seed_span(7) == (7, 7)
    for bad in ("x..y", "5..2", [-1, 3], "1..2..3"):
        with pytest.raises(ConfigError):
            parse_seed_span(bad)


def test_config_validation():
    with pytest.raises(ConfigError, match="unknown config keys"):
        BatchConfig.from_dict({"seedz": "0..1"})
    with pytest.raises(ConfigError, match="unknown strategy in pool: Tit For Toot"):
        BatchConfig.from_dict({"pool": ["Tit For Tat", "Tit For Toot"]})
    with pytest.raises(ConfigError):
        BatchConfig.from_dict({"workers": 0})
    cfg = BatchConfig.from_dict({"pool": ["TitForTat", "Defector", "Cooperator"], "seeds": "2..3",
                                 "ranges": {"N": [3, 3]}})
    assert cfg.pool == ("Tit For Tat", "Defector", "Cooperator") and cfg.seeds == (2, 3)


def test_config_file_and_environment(tmp_path, monkeypatch):
    path = tmp_path / "c.yaml"
    path.write_text("seeds: 5..9\nmaster_seed: 2\nranges:\n  N: [3, 4]\n")
    cfg = load_config(path)
    assert cfg.seeds == (5, 9) and cfg.master_seed == 2 and cfg.ranges.N == (3, 4)
    monkeypatch.setenv("IPDLAB_CONFIG", str(path))
    assert load_config(None) == cfg
    monkeypatch.delenv("IPDLAB_CONFIG")
    assert load_config(None) == BatchConfig()
    (tmp_path / "bad.yaml").write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "bad.yaml")


def test_digest_covers_reproducibility_inputs_only():
    assert CFG.digest() == BatchConfig(ranges=CFG.ranges, pool=POOL, seeds=(50, 60), workers=4).digest()
    assert CFG.digest() != BatchConfig(ranges=CFG.ranges, pool=POOL, master_seed=1).digest()


def test_batch_layout(batch):
    files = sorted(p.name for p in (batch / "trials").iterdir())
    assert files == sorted(f"{s}.csv" for s in range(12))
    manifest = json.loads((batch / "manifest.json").read_text())
    assert manifest["config_digest"] == CFG.digest()
    assert manifest["registry_manifest_digest"] == manifest_digest()
    assert manifest["seed_span"] == [0, 11]
    assert [r.seed for r in load_directory(batch)] == list(range(12))


def test_resume_skips_finished_and_repairs_partial(batch, tmp_path):
    out = tmp_path / "copy"
    shutil.copytree(batch, out)
    (out / "trials" / "3.csv").unlink()
    text = (out / "trials" / "5.csv").read_text()
    (out / "trials" / "5.csv").write_text(text[: len(text) // 2])
    summary = run_batch(CFG, out=out)
    assert sorted(summary.written) == [3, 5]
    assert len(summary.skipped) == 10
    for seed in (3, 5):
        assert (out / "trials" / f"{seed}.csv").read_bytes() == (batch / "trials" / f"{seed}.csv").read_bytes()


def test_different_config_refuses_existing_directory(batch, tmp_path):
    out = tmp_path / "copy"
    shutil.copytree(batch, out)
    with pytest.raises(ConfigError):
        run_batch(BatchConfig(pool=POOL, master_seed=9, seeds=(0, 0)), out=out)


def test_parallel_batch_is_byte_identical(batch, tmp_path):
    summary = run_batch(CFG, seeds=(0, 5), out=tmp_path / "par", workers=2)
    assert summary.written == list(range(6))
    for seed in range(6):
        assert (tmp_path / "par" / "trials" / f"{seed}.csv").read_bytes() == \
            (batch / "trials" / f"{seed}.csv").read_bytes()


# ---------------------------------------------------------------------- cli

def run_cli(*argv):
    return cli.main(list(argv))


def read_export(path):
    lines = path.read_text().splitlines()
    comments = [l for l in lines if l.startswith("#")]
    body = [l.split(",") for l in lines if not l.startswith("#")]
    return comments, body


def test_parse_filter():
    pred = cli.parse_filter("p_n<0.5 and N>=10")
    assert pred({"p_n": 0.2, "N": 10}) and not pred({"p_n": 0.6, "N": 10}) and not pred({"p_n": 0.2, "N": 9})
    assert cli.parse_filter("n<=50, k==5")({"n": 50, "k": 5})
    # a clause on an unused parameter is false
    assert not cli.parse_filter("n<100")({"n": None})
    assert cli.parse_filter(None)({})
    for bad in ("foo<1", "N<<3", "p_n<abc"):
        with pytest.raises(cli.UsageError):
            cli.parse_filter(bad)


def test_rank_command(batch, tmp_path, capsys):
    out = tmp_path / "rank.csv"
    assert run_cli("rank", "--in", str(batch), "--type", "standard", "--out", str(out)) == 0
    comments, body = read_export(out)
    assert comments[0].startswith("# ipdlab ")
    assert f"# registry_manifest {manifest_digest()}" in comments
    assert f"# batch_config {CFG.digest()}" in comments
    assert body[0] == ["position", "name", "median_r", "participation"]
    assert {row[1] for row in body[1:]} <= set(POOL)
    medians = [float(row[2]) for row in body[1:]]
    assert medians == sorted(medians)
    assert "median r" in capsys.readouterr().out
    assert b"\r\n" not in out.read_bytes()


def test_rank_matches_library_and_filter(batch, tmp_path):
    from ipdlab.tournament import median_rank_table

    out = tmp_path / "rank.csv"
    assert run_cli("rank", "--in", str(batch), "--type", "noisy", "--filter", "p_n<0.5", "--top", "3",
                   "--out", str(out)) == 0
    _, body = read_export(out)
    results = tournament_results(load_directory(batch), "noisy")
    expected = median_rank_table([r for r in results if r.params["p_n"] < 0.5])[:3]
    assert [(row[1], float(row[2]), int(row[3])) for row in body[1:]] == \
        [(e.name, e.median_r, e.participation) for e in expected]


def test_exit_codes(batch, tmp_path, capsys):
    assert run_cli("rank", "--in", str(batch), "--type", "standard", "--filter", "N>1000") == 3
    assert run_cli("rank", "--in", str(batch), "--type", "standard", "--filter", "Q>1") == 2
    assert run_cli("rank", "--in", str(batch), "--type", "nonsense") == 2
    assert run_cli("rank", "--in", str(tmp_path / "missing"), "--type", "standard") == 2
    assert run_cli("frobnicate") == 2
    tiny = tmp_path / "tiny"
    run_batch(BatchConfig(ranges=ParameterRanges(N=(3, 3), k=(1, 1), n=(1, 5)), pool=POOL, seeds=(0, 1)), out=tiny)
    assert run_cli("analyze", "--in", str(tiny), "--type", "standard", "--what", "importance") == 3
    bad = tmp_path / "badcfg.yaml"
    bad.write_text("pool: [Tit For Toot]\n")
    assert run_cli("run", "--config", str(bad), "--out", str(tmp_path / "x")) == 2
    err = capsys.readouterr().err
    assert "unknown strategy in pool: Tit For Toot" in err


def test_corrupt_records_exit_runtime(batch, tmp_path):
    out = tmp_path / "copy"
    shutil.copytree(batch, out)
    path = out / "trials" / "2.csv"
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-1] + [lines[-1][:10]]) + "\n")
    assert run_cli("rank", "--in", str(out), "--type", "standard") == 1


def test_run_command(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("pool: [Cooperator, Defector, Tit For Tat, Grudger]\nranges:\n  N: [3, 4]\n  k: [1, 2]\n"
                   "  n: [1, 10]\n")
    out = tmp_path / "run"
    assert run_cli("run", "--config", str(cfg), "--seeds", "0..2", "--out", str(out)) == 0
    assert sorted(os.listdir(out / "trials")) == ["0.csv", "1.csv", "2.csv"]
    assert run_cli("run", "--config", str(cfg), "--seeds", "0..2", "--out", str(out)) == 0
    assert "3 already present" in capsys.readouterr().out


def test_analyze_correlations_and_winners(batch, tmp_path):
    out = tmp_path / "corr.csv"
    assert run_cli("analyze", "--in", str(batch), "--type", "standard", "--what", "correlations",
                   "--out", str(out)) == 0
    comments, body = read_export(out)
    assert body[0] == ["feature", "r", "median_score"]
    assert {"SSE", "C_r", "C_r/C_max", "memory_usage", "N", "k"} <= {row[0] for row in body[1:]}
    out = tmp_path / "win.csv"
    assert run_cli("analyze", "--in", str(batch), "--type", "standard", "--what", "winners", "--out", str(out)) == 0
    _, body = read_export(out)
    assert body[0] == ["quantity", "bin_left", "bin_right", "count"]


def test_analyze_importance_export_header(tmp_path):
    cfg = BatchConfig(ranges=ParameterRanges(N=(5, 8), k=(1, 2), n=(1, 15)), pool=POOL, seeds=(0, 5))
    out_dir = tmp_path / "imp"
    run_batch(cfg, out=out_dir)
    for approach in (1, 4):
        out = tmp_path / f"imp{approach}.csv"
        assert run_cli("analyze", "--in", str(out_dir), "--type", "probend", "--what", "importance",
                       "--approach", str(approach), "--trees", "10", "--out", str(out)) == 0
        comments, body = read_export(out)
        assert body[0] == ["rank", "feature", "importance"]
        chosen = [c for c in comments if c.startswith("# chosen_k")]
        assert len(chosen) == 1
        assert (chosen[0] == "# chosen_k") == (approach != 4)
        assert sum(float(row[2]) for row in body[1:]) == pytest.approx(1.0)


def test_registry_command(tmp_path, capsys):
    assert run_cli("registry") == 0
    assert capsys.readouterr().out == render_manifest()
    assert run_cli("registry", "--write", str(tmp_path / "m.json")) == 0
    assert (tmp_path / "m.json").read_text() == render_manifest()
