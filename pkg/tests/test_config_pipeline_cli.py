import json
import socket

import pytest
import yaml

from tsshunt import demo
from tsshunt.cli import main
from tsshunt.config import ConfigError, parse_config, validate_config
from tsshunt.pipeline import STAGES, HashMismatch, RunManifest, StageError, run_pipeline


@pytest.fixture
def no_network(monkeypatch):
    """Any attempt to open a connection fails the test."""
    attempts = []

    def refuse(self, address, *a, **k):
        attempts.append(address)
        raise AssertionError(f"network connection attempted: {address}")

    monkeypatch.setattr(socket.socket, "connect", refuse)
    monkeypatch.setattr(socket.socket, "connect_ex", refuse)
    monkeypatch.setattr(socket, "create_connection", lambda address, *a, **k: refuse(None, address))
    return attempts


@pytest.fixture(scope="module")
def demo_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("demo")
    demo.build_demo(d)
    return d


@pytest.fixture(scope="module")
def demo_run(demo_dir):
    cfg = validate_config(demo_dir / "config.yaml")
    manifest = run_pipeline(cfg)
    return cfg, manifest


def raw_config(demo_dir):
    return yaml.safe_load((demo_dir / "config.yaml").read_text())


# config

def test_demo_config_valid(demo_dir):
    cfg = validate_config(demo_dir / "config.yaml")
    assert cfg.mode == "fixture" and cfg.amplify["lambda"] == 500
    assert cfg.path("corpus") == demo_dir / "corpus.jsonl"
    assert cfg.seedgen["thresholds"][2] == 0.012


def test_negative_lambda(demo_dir):
    raw = raw_config(demo_dir)
    raw["amplify"]["lambda"] = -1
    with pytest.raises(ConfigError) as err:
        parse_config(raw, demo_dir, env={})
    assert err.value.errors == ["amplification lambda must be ≥ 1"]


def test_all_errors_reported_together(demo_dir):
    raw = raw_config(demo_dir)
    raw["amplify"]["lambda"] = 0
    raw["classify"]["threshold"] = 1.5
    raw["paths"]["zone"] = "missing_zone.json"
    with pytest.raises(ConfigError) as err:
        parse_config(raw, demo_dir, env={})
    assert len(err.value.errors) == 3
    assert any("classifier threshold" in e for e in err.value.errors)
    assert any("paths.zone does not exist" in e for e in err.value.errors)


def test_unknown_and_mistyped_keys(demo_dir):
    raw = raw_config(demo_dir)
    raw["colour"] = "blue"
    raw["cluster"]["kmax"] = 3
    raw["crawl"]["max_hops"] = "ten"
    with pytest.raises(ConfigError) as err:
        parse_config(raw, demo_dir, env={})
    assert err.value.errors == ["unknown key 'colour'", "crawl.max_hops must be an integer",
                                "unknown key 'cluster.kmax'"]


def test_env_overrides_paths(demo_dir, tmp_path):
    cfg = parse_config(raw_config(demo_dir), demo_dir,
                       env={"TSSHUNT_RUN_DIR": str(tmp_path / "r"), "TSSHUNT_CORPUS": str(demo_dir / "training.jsonl")})
    assert cfg.run_dir == tmp_path / "r"
    assert cfg.path("corpus") == demo_dir / "training.jsonl"


def test_unreadable_and_invalid_yaml(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        validate_config(tmp_path / "nope.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("seed: [1,\n")
    with pytest.raises(ConfigError, match="not valid YAML"):
        validate_config(bad)


# pipeline

def test_full_run_manifest(demo_run):
    cfg, manifest = demo_run
    assert list(manifest.stages) == list(STAGES)
    assert all(r.status == "ran" for r in manifest.stages.values())
    on_disk = RunManifest.load(cfg.run_dir)
    assert set(on_disk.stages) == set(STAGES)
    for rec in on_disk.stages.values():
        assert rec.outputs and all(len(h) == 64 for h in rec.outputs.values())


def test_rerun_skips_everything(demo_run):
    cfg, first = demo_run
    again = run_pipeline(cfg)
    assert {r.status for r in again.stages.values()} == {"skipped"}
    assert {s: r.outputs for s, r in again.stages.items()} == {s: r.outputs for s, r in first.stages.items()}


def test_fixture_run_opens_no_socket(demo_dir, tmp_path, no_network):
    cfg = parse_config(raw_config(demo_dir), demo_dir, env={"TSSHUNT_RUN_DIR": str(tmp_path / "run")})
    run_pipeline(cfg, stages=["seed", "crawl"])
    assert no_network == []
    assert (tmp_path / "run" / "listings" / "requests.jsonl").exists()


def test_missing_upstream_names_stage(demo_dir, tmp_path):
    cfg = parse_config(raw_config(demo_dir), demo_dir, env={"TSSHUNT_RUN_DIR": str(tmp_path / "empty")})
    with pytest.raises(StageError, match="'crawl'"):
        run_pipeline(cfg, stages=["classify"])
    with pytest.raises(StageError, match="unknown stages"):
        run_pipeline(cfg, stages=["bake"])


def test_bit_flip_is_detected(demo_dir, tmp_path):
    run_dir = tmp_path / "run"
    cfg = parse_config(raw_config(demo_dir), demo_dir, env={"TSSHUNT_RUN_DIR": str(run_dir)})
    run_pipeline(cfg, stages=["seed", "crawl"])
    rels = sorted(RunManifest.load(run_dir).stages["crawl"].outputs)
    target = next(run_dir / r for r in rels if (run_dir / r).is_file() and (run_dir / r).stat().st_size)
    data = bytearray(target.read_bytes())
    data[0] ^= 0x01
    target.write_bytes(bytes(data))
    with pytest.raises(HashMismatch, match="hash mismatch"):
        run_pipeline(cfg, stages=["classify"])


# cli

def test_cli_exit_codes(demo_dir, tmp_path, capsys):
    assert main(["validate", "--config", str(demo_dir / "config.yaml")]) == 0
    raw = raw_config(demo_dir)
    raw["amplify"]["lambda"] = -1
    bad = demo_dir / "bad.yaml"
    bad.write_text(yaml.safe_dump(raw))
    assert main(["validate", "--config", str(bad)]) == 1
    assert "config error: amplification lambda must be ≥ 1" in capsys.readouterr().err
    assert main(["run", "--config", str(demo_dir / "config.yaml"), "--run-dir", str(tmp_path / "r"),
                 "--stages", "cluster"]) == 2
    assert "stage failed" in capsys.readouterr().err


def test_cli_amplify_rejects_bad_lambda(tmp_path, capsys):
    seeds = tmp_path / "s.txt"
    seeds.write_text("a.com\n")
    dns = tmp_path / "d.jsonl"
    dns.write_text("")
    assert main(["amplify", "--seeds", str(seeds), "--dns", str(dns), "--lambda", "-1"]) == 1
    assert "amplification lambda must be ≥ 1" in capsys.readouterr().err


def test_cli_run_and_report(demo_dir, demo_run, tmp_path, capsys):
    cfg, _ = demo_run
    assert main(["run", "--config", str(demo_dir / "config.yaml")]) == 0
    out = capsys.readouterr().out
    assert all(f"{s}|skipped|" in out for s in STAGES)
    assert main(["report", "--inputs", str(cfg.run_dir), "--config", str(demo_dir / "config.yaml"),
                 "--no-figures", "--out", str(tmp_path / "rep")]) == 0
    rows = json.loads((tmp_path / "rep" / "campaigns.json").read_text())
    assert rows and set(rows[0]) == {"campaign_id", "final_domains", "support_domains", "ips", "phone_numbers",
                                     "labels", "samples"}


def test_cli_seed_threshold_errors(demo_dir, tmp_path, capsys):
    args = ["seed", "--corpus", str(demo_dir / "corpus.jsonl"), "--out", str(tmp_path / "p.jsonl")]
    assert main(args + ["--threshold", "1=0.05", "--threshold", "2=0.01", "--threshold", "3=0.004",
                        "--max-n", "3"]) == 0
    assert (tmp_path / "p.jsonl").read_text().strip()
    assert main(args + ["--threshold", "1=0.05"]) == 1
    assert "missing threshold" in capsys.readouterr().err
