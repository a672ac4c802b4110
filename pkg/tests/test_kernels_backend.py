import os
import subprocess
import sys

import numpy as np
import pytest

from rgw import _kernels
from rgw.pisolver import SinkhornSettings, solve_pi_subproblem


def probe_backend(env_value):
    env = dict(os.environ)
    env.pop("RGW_NUMBA", None)
    if env_value is not None:
        env["RGW_NUMBA"] = env_value
    out = subprocess.run(
        [sys.executable, "-c", "import rgw._kernels as k; print(k.backend_name())"],
        capture_output=True, text=True, env=env,
    )
    return out.returncode, out.stdout.strip()


def random_log_kernel(rng, n, m, sharp=1.0):
    logK = -sharp * rng.uniform(0.0, 5.0, size=(n, m))
    logK[rng.random((n, m)) < 0.1] = _kernels.NEG
    # keep every row and column alive so both sweeps have support
    logK[np.arange(n), rng.integers(0, m, n)] = -sharp * rng.uniform(0.0, 1.0, n)
    logK[rng.integers(0, n, m), np.arange(m)] = -sharp * rng.uniform(0.0, 1.0, m)
    return logK


class TestBackendSelection:
    def test_env_zero_forces_numpy(self):
        rc, name = probe_backend("0")
        assert rc == 0 and name == "numpy"

    def test_env_one_requires_numba(self):
        rc, name = probe_backend("1")
        assert rc == 0 and name == "numba"

    def test_unset_prefers_numba_when_available(self):
        rc, name = probe_backend(None)
        assert rc == 0
        assert name == ("numba" if _kernels._HAVE_NUMBA else "numpy")


@pytest.mark.skipif(not _kernels._HAVE_NUMBA, reason="numba backend not importable")
class TestBackendAgreement:
    def run_both(self, logK, la, lb, f1, f2, tol, maxit):
        lu0 = np.zeros(logK.shape[0])
        lv0 = np.zeros(logK.shape[1])
        args_np = (logK, la, lb, f1, f2, lu0, lv0, tol, maxit)
        a = _kernels._sweeps_numpy(*args_np)
        b = _kernels._sweeps_numba(
            np.ascontiguousarray(logK), np.ascontiguousarray(la),
            np.ascontiguousarray(lb), f1, f2, lu0.copy(), lv0.copy(), tol, maxit,
        )
        return a, b

    def test_fixed_sweep_count_agreement(self):
        # tol=0 pins the sweep count, so both backends run the identical
        # recursion; only summation order differs between them
        rng = np.random.default_rng(21)
        for _ in range(12):
            n, m = int(rng.integers(2, 12)), int(rng.integers(2, 12))
            logK = random_log_kernel(rng, n, m, sharp=float(rng.uniform(0.5, 40.0)))
            la = np.log(rng.dirichlet(np.ones(n)))
            lb = np.log(rng.dirichlet(np.ones(m)))
            f1 = float(rng.uniform(0.3, 1.0))
            f2 = float(rng.uniform(0.3, 1.0))
            (lu_a, lv_a, s_a, _), (lu_b, lv_b, s_b, _) = self.run_both(
                logK, la, lb, f1, f2, 0.0, 60)
            assert s_a == s_b == 60
            assert np.allclose(lu_a, lu_b, rtol=1e-10, atol=1e-10)
            assert np.allclose(lv_a, lv_b, rtol=1e-10, atol=1e-10)

    def test_dead_rows_handled_identically(self):
        rng = np.random.default_rng(4)
        logK = random_log_kernel(rng, 5, 6)
        logK[2, :] = _kernels.NEG
        la = np.log(np.full(5, 0.2))
        lb = np.log(np.full(6, 1.0 / 6.0))
        (lu_a, lv_a, _, _), (lu_b, lv_b, _, _) = self.run_both(
            logK, la, lb, 1.0, 1.0, 0.0, 30)
        assert lu_a[2] == lu_b[2] == 0.0
        assert np.allclose(lu_a, lu_b, atol=1e-10)
        assert np.allclose(lv_a, lv_b, atol=1e-10)

    def test_solver_level_agreement(self, monkeypatch):
        rng = np.random.default_rng(17)
        cost = rng.uniform(0.0, 3.0, size=(6, 7))
        pi_prev = rng.uniform(0.1, 1.0, size=(6, 7))
        pi_prev /= pi_prev.sum()
        alpha = rng.dirichlet(np.ones(6))
        beta = rng.dirichlet(np.ones(7))
        settings = SinkhornSettings(inner_tolerance=1e-12, max_inner_iterations=5000)

        def force(backend):
            monkeypatch.setattr(_kernels, "_BACKEND", backend)
            pi, info = solve_pi_subproblem(cost, pi_prev, alpha, beta, 0.5, 0.5, 1.0,
                                           settings=settings, log=True)
            return pi, info

        pi_numba, _ = force("numba")
        pi_numpy, _ = force("numpy")
        assert np.allclose(pi_numba, pi_numpy, rtol=1e-9, atol=1e-13)


class TestDeterminism:
    def test_repeated_calls_bit_identical(self):
        rng = np.random.default_rng(33)
        logK = random_log_kernel(rng, 8, 9, sharp=10.0)
        la = np.log(rng.dirichlet(np.ones(8)))
        lb = np.log(rng.dirichlet(np.ones(9)))
        lu0 = np.zeros(8)
        lv0 = np.zeros(9)
        a = _kernels.scaling_sweeps(logK, la, lb, 0.9, 0.8, lu0, lv0, 1e-10, 2000)
        b = _kernels.scaling_sweeps(logK, la, lb, 0.9, 0.8, lu0, lv0, 1e-10, 2000)
        assert a[0].tobytes() == b[0].tobytes()
        assert a[1].tobytes() == b[1].tobytes()
        assert a[2] == b[2] and a[3] == b[3]
