import csv
import json

import numpy as np
import pytest

from spdr.cli import EXIT_DATA, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, main
from spdr.grassmann import orthonormality_error
from spdr.io import load_bundle, load_projection, save_bundle


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def config(path, **kv):
    path.write_text("".join(f"{k} = {v}\n" for k, v in kv.items()))
    return str(path)


def run(*argv):
    return main([str(a) for a in argv])


def strip_timing(report):
    for rec in report["records"]:
        rec.pop("elapsed_seconds")
    return report


def test_synth_deterministic(workdir):
    cfg = config(workdir / "c.cfg", seed=7)
    assert run("synth", "--config", cfg, "--out", "a") == EXIT_OK
    assert run("synth", "--config", cfg, "--out", "b") == EXIT_OK
    for part in ("train", "test"):
        assert (workdir / f"a.{part}.spdb").read_bytes() == (workdir / f"b.{part}.spdb").read_bytes()
    manifest = json.loads((workdir / "a.manifest.json").read_text())
    assert manifest["generator"]["seed"] == 7


def test_synth_zero_spread(workdir):
    cfg = config(workdir / "c.cfg", sigma=0, n_classes=2, train_per_class=3, test_per_class=0)
    run("synth", "--config", cfg, "--out", "z")
    b = load_bundle("z.train.spdb")
    for c in (0, 1):
        members = b.matrices[b.labels == c]
        assert np.allclose(members, members[0], rtol=1e-12, atol=0)


def test_seed_flag_overrides(workdir):
    cfg = config(workdir / "c.cfg", seed=1)
    run("synth", "--config", cfg, "--out", "a", "--seed", 2)
    cfg2 = config(workdir / "d.cfg", seed=2)
    run("synth", "--config", cfg2, "--out", "b")
    assert (workdir / "a.train.spdb").read_bytes() == (workdir / "b.train.spdb").read_bytes()


@pytest.fixture
def data(workdir):
    cfg = config(workdir / "s.cfg", seed=3, n=6, intrinsic_dim=2, train_per_class=8,
                 test_per_class=6)
    run("synth", "--config", cfg, "--out", "d")
    return workdir


def test_fit_cg(data):
    cfg = config(data / "f.cfg", metric="stein", target_dim=2, max_iters=40)
    assert run("fit", "--config", cfg, "--train", "d.train.spdb", "--out", "W.spdw") == EXIT_OK
    W = load_projection("W.spdw")
    assert W.shape == (6, 2) and orthonormality_error(W) < 1e-10
    report = json.loads((data / "W.spdw.report.json").read_text())
    costs = [r["cost"] for r in report["records"]]
    assert report["solver"] == "cg" and all(b <= a for a, b in zip(costs, costs[1:]))


def test_fit_logeuclidean_uses_eig(data):
    cfg = config(data / "f.cfg", metric="logeuclidean", target_dim=2)
    assert run("fit", "--config", cfg, "--train", "d.train.spdb", "--out", "L.spdw") == EXIT_OK
    report = json.loads((data / "L.spdw.report.json").read_text())
    assert report["solver"] == "eig"


def test_fit_reproducible(data):
    cfg = config(data / "f.cfg", metric="jeffrey", target_dim=2, max_iters=20)
    run("fit", "--config", cfg, "--train", "d.train.spdb", "--out", "A.spdw")
    run("fit", "--config", cfg, "--train", "d.train.spdb", "--out", "B.spdw")
    assert (data / "A.spdw").read_bytes() == (data / "B.spdw").read_bytes()
    ra = strip_timing(json.loads((data / "A.spdw.report.json").read_text()))
    rb = strip_timing(json.loads((data / "B.spdw.report.json").read_text()))
    assert ra == rb


def test_fit_unsupervised(data):
    cfg = config(data / "f.cfg", metric="airm", mode="unsupervised", target_dim=2, max_iters=20)
    assert run("fit", "--config", cfg, "--train", "d.test.spdb", "--out", "U.spdw") == EXIT_OK


def test_transform_truncated_identity(data):
    W = np.eye(6, 3)
    from spdr.io import save_projection
    save_projection(data / "I.spdw", W)
    cfg = config(data / "t.cfg")
    assert run("transform", "--config", cfg, "--in", "d.test.spdb", "--proj", "I.spdw",
               "--out", "t.spdb") == EXIT_OK
    src, out = load_bundle("d.test.spdb"), load_bundle("t.spdb")
    np.testing.assert_array_equal(out.matrices, src.matrices[:, :3, :3])
    np.testing.assert_array_equal(out.labels, src.labels)


def test_dist_self_zero_diagonal(data):
    cfg = config(data / "d.cfg", metric="jeffrey")
    assert run("dist", "--config", cfg, "--in", "d.test.spdb", "--out", "D.csv") == EXIT_OK
    D = np.loadtxt(data / "D.csv", delimiter=",")
    assert D.shape == (12, 12)
    np.testing.assert_array_equal(np.diag(D), 0.0)
    np.testing.assert_array_equal(D, D.T)


def test_mean(data):
    cfg = config(data / "m.cfg", metric="airm")
    assert run("mean", "--config", cfg, "--in", "d.test.spdb", "--out", "M.spdb") == EXIT_OK
    assert load_bundle("M.spdb").matrices.shape == (1, 6, 6)


def test_classify(data):
    cfg = config(data / "c.cfg", metric="stein")
    assert run("classify", "--config", cfg, "--train", "d.train.spdb", "--in", "d.test.spdb",
               "--out", "p.csv") == EXIT_OK
    with open(data / "p.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["label"] and len(rows) == 13
    assert 0.0 <= json.loads((data / "p.csv.json").read_text())["accuracy"] <= 1.0


def test_sweep(data):
    cfg = config(data / "w.cfg", metric="logeuclidean", m_grid="1, 2")
    assert run("sweep", "--config", cfg, "--train", "d.train.spdb", "--in", "d.test.spdb",
               "--out", "sweep.csv") == EXIT_OK
    rows = list(csv.DictReader(open(data / "sweep.csv")))
    assert [r["m"] for r in rows] == ["0", "1", "2"]


@pytest.mark.parametrize("method,extra", [("kmeans", {}), ("kernel", {"beta": 1.0})])
def test_cluster_separable(workdir, method, extra):
    cfg = config(workdir / "c.cfg", seed=4, n=5, intrinsic_dim=2, n_classes=3, sigma=0.05,
                 separation=2.0, train_per_class=6, test_per_class=0, metric="stein",
                 cluster_method=method, **extra)
    run("synth", "--config", cfg, "--out", "s")
    assert run("cluster", "--config", cfg, "--in", "s.train.spdb", "--out", "a.csv") == EXIT_OK
    summary = json.loads((workdir / "a.csv.json").read_text())
    assert summary["accuracy"] == 1.0 and summary["nmi"] == 1.0


def test_cluster_rejects_non_pd_beta(data):
    cfg = config(data / "c.cfg", metric="stein", cluster_method="kernel", beta=0.75, k=2)
    assert run("cluster", "--config", cfg, "--in", "d.test.spdb", "--out", "x.csv") == EXIT_USAGE
    assert not (data / "x.csv").exists()


def test_exit_codes(workdir, rng):
    cfg = config(workdir / "c.cfg", target_dim=2)
    assert run("fit", "--config", cfg) == EXIT_USAGE
    assert run("nonsense") == EXIT_USAGE
    assert run("dist", "--config", config(workdir / "bad.cfg", foo=1), "--in", "x",
               "--out", "y") == EXIT_USAGE
    assert run("dist", "--config", cfg, "--in", "missing.spdb", "--out", "y.csv") == EXIT_DATA
    save_bundle(workdir / "neg.spdb", -np.eye(3)[None])
    assert run("mean", "--config", cfg, "--in", "neg.spdb", "--out", "m.spdb") == EXIT_DATA
    # unlabelled data cannot drive a supervised fit
    save_bundle(workdir / "u.spdb", np.stack([np.eye(3)] * 4))
    assert run("fit", "--config", cfg, "--train", "u.spdb", "--out", "w") == EXIT_DATA


def test_numerical_exit_code(workdir, monkeypatch):
    from spdr import cli
    from spdr.exceptions import SingularProjectedMatrixError

    def boom(*args, **kwargs):
        raise SingularProjectedMatrixError("collapsed")

    monkeypatch.setattr(cli, "_run_fit", boom)
    save_bundle(workdir / "l.spdb", np.stack([np.eye(3)] * 4), [0, 0, 1, 1])
    cfg = config(workdir / "c.cfg", target_dim=2)
    assert run("fit", "--config", cfg, "--train", "l.spdb", "--out", "w") == EXIT_NUMERICAL
