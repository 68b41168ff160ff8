import json
from pathlib import Path

import pytest

from vssc.cli import main

FIXTURE = Path(__file__).resolve().parents[1] / "fixtures" / "reference_profiles.json"


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    rc = main(["synth", "--n", "400", "--d", "16", "--classes", "4", "--spread", "0.3",
               "--norm-log-sigma", "0.2", "--queries", "15", "--seed", "3", "--out-dir", str(out)])
    assert rc == 0
    return out


def test_synth_outputs(synth_dir):
    for name in ("base.fvecs", "base.labels", "query.fvecs", "query.labels", "synth.json"):
        assert (synth_dir / name).exists()
    assert len((synth_dir / "base.labels").read_text().splitlines()) == 400


def test_profile_then_select(tmp_path, synth_dir, capsys):
    prof = tmp_path / "p.json"
    assert main(["profile", "--data", str(synth_dir / "base.fvecs"), "--k", "8", "--seed", "1", "--out", str(prof)]) == 0
    assert main(["select", "--profile", str(prof)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["metric"] in ("Euclidean", "InnerProduct") and out["family"] in ("Partition", "Graph")


def test_select_fixture(capsys):
    assert main(["select", "--profile", str(FIXTURE)]) == 0
    out = json.loads(capsys.readouterr().out)
    expected = json.loads(FIXTURE.read_text())["expected"]
    assert {k: (v["metric"], v["family"]) for k, v in out.items()} == {
        k: (v["metric"], v["family"]) for k, v in expected.items()
    }


def test_groundtruth_evaluate_roundtrip(tmp_path, synth_dir):
    base, query = synth_dir / "base.fvecs", synth_dir / "query.fvecs"
    prefix = tmp_path / "gt"
    assert main(["groundtruth", "--data", str(base), "--queries", str(query), "--k", "10",
                 "--metric", "l2", "--out-prefix", str(prefix)]) == 0
    outs = []
    for workers in ("1", "8"):
        rep = tmp_path / f"r{workers}.json"
        assert main(["evaluate", "--data", str(base), "--queries", str(query), "--truth-prefix", str(prefix),
                     "--labels", str(synth_dir / "base.labels"), "--index", "ivf", "--metric", "l2", "--k", "10",
                     "--build-params", "nlist=8", "--search-params", "1,2,8", "--workers", workers,
                     "--csv", str(tmp_path / "c.csv"), "--out", str(rep)]) == 0
        outs.append(json.loads(rep.read_text()))
    assert outs[0]["points"][-1]["synthetic_recall"] == 1.0
    from vssc.harness import dumps
    assert dumps(outs[0], deterministic=True) == dumps(outs[1], deterministic=True)
    assert (tmp_path / "c.csv").exists()
    # truth computed under l2 cannot be used for an ip sweep
    assert main(["evaluate", "--data", str(base), "--queries", str(query), "--truth-prefix", str(prefix),
                 "--labels", str(synth_dir / "base.labels"), "--index", "flat", "--metric", "ip", "--k", "10"]) == 2


def test_funnel_cli(tmp_path, synth_dir):
    out = tmp_path / "f.json"
    assert main(["funnel", "--data", str(synth_dir / "base.fvecs"), "--queries", str(synth_dir / "query.fvecs"),
                 "--labels", str(synth_dir / "base.labels"), "--k", "10", "--nlist", "8", "--efs", "10,40",
                 "--nsw-m", "8", "--nsw-efc", "32", "--profile-k", "6", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["kind"] == "funnel_report" and "dominance" in rep


@pytest.mark.parametrize(
    "argv",
    [
        ["synth", "--n", "3", "--classes", "5", "--out-dir", "{tmp}/x"],
        ["groundtruth", "--data", "{base}", "--queries", "{query}", "--k", "0", "--metric", "l2", "--out-prefix", "{tmp}/g"],
        ["groundtruth", "--data", "{base}", "--queries", "{query}", "--k", "5", "--metric", "cos", "--out-prefix", "{tmp}/g"],
        ["bogus"],
    ],
)
def test_validation_exit_code(tmp_path, synth_dir, argv):
    fill = {"tmp": tmp_path, "base": synth_dir / "base.fvecs", "query": synth_dir / "query.fvecs"}
    argv = [a.format(**fill) for a in argv]
    with pytest.raises(SystemExit) as exc:
        raise SystemExit(main(argv))
    assert exc.value.code == 2


def test_io_exit_codes(tmp_path):
    assert main(["profile", "--data", str(tmp_path / "missing.fvecs")]) == 3
    bad = tmp_path / "bad.fvecs"
    bad.write_bytes(b"\x05\x00\x00\x00\x00")
    assert main(["profile", "--data", str(bad)]) == 3
