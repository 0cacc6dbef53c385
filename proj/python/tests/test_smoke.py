import json

import numpy as np
import pytest

import gevsel


def test_gevd_matches_numpy():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((5, 7))
    b = rng.standard_normal((5, 7))
    r1 = a @ a.T / 7 + 0.01 * np.eye(5)
    r2 = b @ b.T / 7 + 0.01 * np.eye(5)
    w, lam, db = gevsel.solve_gevd(r1, r2, K=2)
    ref = np.sort(np.linalg.eigvals(np.linalg.solve(r2, r1)).real)[::-1][:2]
    np.testing.assert_allclose(lam, ref, rtol=1e-9)
    np.testing.assert_allclose(w.T @ r2 @ w, np.eye(2), atol=1e-8)
    assert db == pytest.approx(gevsel.grq_db(r1, r2, w))


def test_exhaustive_on_diagonal_pencil():
    r1 = np.diag([3.0, 2.0, 1.0])
    r2 = np.eye(3)
    out = gevsel.select(r1, r2, C=3, L=1, M=2, method="exhaustive")
    assert out["sensors"] == [0, 1]
    assert out["grq_db"] == pytest.approx(10 * np.log10(3.0))


def test_methods_and_errors():
    assert set(gevsel.methods()) == {"gs", "gs-diag", "be", "fs", "stecs", "exhaustive", "random"}
    with pytest.raises(ValueError):
        gevsel.select(np.eye(2), np.eye(2), C=2, L=1, M=1, method="nope")
    with pytest.raises(ValueError):
        gevsel.solve_gevd(np.eye(2), -np.eye(2))


def test_simulate_is_deterministic_and_selectable():
    r1, r2, manifest = gevsel.simulate(C=4, L=2, seed=3, T=2000)
    r1b, r2b, _ = gevsel.simulate(C=4, L=2, seed=3, T=2000)
    assert np.array_equal(r1, r1b) and np.array_equal(r2, r2b)
    assert json.loads(manifest)["seed"] == 3
    be = gevsel.select(r1, r2, C=4, L=2, M=2, method="be")
    ex = gevsel.select(r1, r2, C=4, L=2, M=2, method="exhaustive")
    assert ex["grq_db"] >= be["grq_db"] - 1e-9
    sensors, db = gevsel.eval_subset(r1, r2, C=4, L=2, sensors=ex["sensors"])
    assert db == ex["grq_db"]


def test_gs_runs_on_a_small_instance():
    r1, r2, _ = gevsel.simulate(C=4, L=1, seed=5, T=2000)
    out = gevsel.select(r1, r2, C=4, L=1, M=2, method="gs")
    assert out["status"] in ("ok", "not_found")
    if out["status"] == "ok":
        assert len(out["sensors"]) == 2


def test_covariance_file_round_trip(tmp_path):
    m = np.array([[2.0, 0.5], [0.5, 1.0]])
    path = str(tmp_path / "r.cov")
    gevsel.write_covariance(path, 2, 1, m)
    C, L, back = gevsel.read_covariance(path)
    assert (C, L) == (2, 1)
    np.testing.assert_array_equal(back, m)


def test_benchmark_replays():
    cfg = json.dumps({"schema_version": 1, "C": 4, "L": 1, "runs": 2, "seed": 1,
                      "methods": ["exhaustive", "fs"], "scene": {"T": 500}})
    a = gevsel.run_benchmark(cfg)
    assert a == gevsel.run_benchmark(cfg)
    assert a.splitlines()[0] == "run,seed,method,M,grq_db,status,wall_ms"
    assert len(a.splitlines()) == 1 + 2 * 2 * 4
