"""Log-domain scaling sweeps shared by the coupling subproblem solvers.

Two interchangeable backends compute the same iteration: a numba-compiled
loop and a vectorized numpy fallback. Selection happens once at import:
RGW_NUMBA=1 requires the compiled path, RGW_NUMBA=0 forces numpy, and an
unset variable tries numba first. Both backends run the sweeps in a fixed
order with plain float64 arithmetic, so results are deterministic for
fixed inputs within one backend.

Log-kernel convention: entries that are exactly zero in the kernel are
encoded as NEG rather than -inf, which keeps max/exp arithmetic NaN-free.
A row or column whose every entry sits at NEG has empty support; its
scaling is pinned to 0 and its mass stays zero.
"""

import os

import numpy as np

from .errors import InvalidParams

NEG = -1e30
_NEG_HALF = NEG / 2


def _sweeps_numpy(logK, la, lb, f1, f2, lu, lv, tol, maxit):
    lu = lu.copy()
    lv = lv.copy()
    sweeps = 0
    delta = np.inf
    for _ in range(maxit):
        M = logK + lv[None, :]
        mx = M.max(axis=1)
        live = mx > _NEG_HALF
        # The max element contributes exp(0)=1, so the sum is >= 1 and the
        # log is safe; dead rows reduce to 0-differences and are masked out.
        lse = mx + np.log(np.exp(M - mx[:, None]).sum(axis=1))
        new_lu = np.where(live, f1 * (la - lse), 0.0)
        d_u = np.abs(new_lu - lu).max()
        lu = new_lu

        M = logK + lu[:, None]
        mx = M.max(axis=0)
        live = mx > _NEG_HALF
        lse = mx + np.log(np.exp(M - mx[None, :]).sum(axis=0))
        new_lv = np.where(live, f2 * (lb - lse), 0.0)
        d_v = np.abs(new_lv - lv).max()
        lv = new_lv

        sweeps += 1
        delta = max(d_u, d_v)
        if delta < tol:
            break
    return lu, lv, sweeps, delta


try:
    from numba import njit as _njit

    @_njit(cache=True)
    def _sweeps_numba(logK, la, lb, f1, f2, lu0, lv0, tol, maxit):  # pragma: no cover
        n, m = logK.shape
        lu = lu0.copy()
        lv = lv0.copy()
        sweeps = 0
        delta = np.inf
        for _ in range(maxit):
            d_u = 0.0
            for i in range(n):
                mx = -1.0e308
                for j in range(m):
                    val = logK[i, j] + lv[j]
                    if val > mx:
                        mx = val
                if mx > _NEG_HALF:
                    s = 0.0
                    for j in range(m):
                        s += np.exp(logK[i, j] + lv[j] - mx)
                    new = f1 * (la[i] - (mx + np.log(s)))
                else:
                    new = 0.0
                d = abs(new - lu[i])
                if d > d_u:
                    d_u = d
                lu[i] = new

            d_v = 0.0
            for j in range(m):
                mx = -1.0e308
                for i in range(n):
                    val = logK[i, j] + lu[i]
                    if val > mx:
                        mx = val
                if mx > _NEG_HALF:
                    s = 0.0
                    for i in range(n):
                        s += np.exp(logK[i, j] + lu[i] - mx)
                    new = f2 * (lb[j] - (mx + np.log(s)))
                else:
                    new = 0.0
                d = abs(new - lv[j])
                if d > d_v:
                    d_v = d
                lv[j] = new

            sweeps += 1
            delta = d_u if d_u > d_v else d_v
            if delta < tol:
                break
        return lu, lv, sweeps, delta

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _sweeps_numba = None
    _HAVE_NUMBA = False


def _pick_backend():
    flag = os.environ.get("RGW_NUMBA", "").strip()
    if flag == "0":
        return "numpy"
    if flag == "1":
        if not _HAVE_NUMBA:
            raise InvalidParams("RGW_NUMBA=1 but numba is not importable")
        return "numba"
    return "numba" if _HAVE_NUMBA else "numpy"


_BACKEND = _pick_backend()


def backend_name():
    """Active backend, 'numba' or 'numpy'."""
    return _BACKEND


def scaling_sweeps(logK, la, lb, f1, f2, lu0, lv0, tol, maxit):
    """Alternate the two log-scaling updates until the sup-norm change of
    (log u, log v) falls below tol or maxit sweeps elapse.

    Exponents f1=f2=1 give the balanced projection; f = tau*t/(tau*t + 1)
    gives the marginal-penalized update.

    Returns
    -------
    (lu, lv, sweeps, delta)
    """
    args = (
        np.ascontiguousarray(logK, dtype=np.float64),
        np.ascontiguousarray(la, dtype=np.float64),
        np.ascontiguousarray(lb, dtype=np.float64),
        float(f1),
        float(f2),
        np.ascontiguousarray(lu0, dtype=np.float64),
        np.ascontiguousarray(lv0, dtype=np.float64),
        float(tol),
        int(maxit),
    )
    if _BACKEND == "numba":
        return _sweeps_numba(*args)
    return _sweeps_numpy(*args)
