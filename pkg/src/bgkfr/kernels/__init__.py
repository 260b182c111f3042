"""Hot kernels with a compiled (Cython/OpenMP) core and a NumPy fallback.

The compiled module is used when it imports; set ``BGKFR_BACKEND=python``
to force the fallback. ``use_backend`` switches at runtime (the benchmark
and the cross-backend tests rely on it).
"""
import os

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    _BACKENDS["cython"] = _ckernels

_active = None


def available():
    return sorted(_BACKENDS)


def use_backend(name):
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown or unavailable kernel backend {name!r}; have {available()}")
    _active = _BACKENDS[name]
    return _active


def backend():
    return _active


def set_num_threads(n):
    if _ckernels is not None:
        _ckernels.set_num_threads(int(n) if n else (os.cpu_count() or 1))


def squeeze_limit(f, mean_w, neg_tol=1e-12):
    return _active.squeeze_limit(f, mean_w, neg_tol)


def transport_rhs(f, D, gl, gr, rdx, u, ghost_l, ghost_r, out):
    return _active.transport_rhs(f, D, gl, gr, rdx, u, ghost_l, ghost_r, out)


def phase_moments(f, wu, u1, wz, z, n_v, n_z):
    return _active.phase_moments(f, wu, u1, wz, z, n_v, n_z)


def add_relaxation(f, gu, gz, inv_tau, out):
    return _active.add_relaxation(f, gu, gz, inv_tau, out)


def dvm_project(Q, u, wu, z, wz, delta, n_iters, floor, alpha, gu, gz, res, status):
    return _active.dvm_project(Q, u, wu, z, wz, delta, n_iters, floor,
                               alpha, gu, gz, res, status)


def rk_stage(f, k, stage, acc, a, b, first):
    return _active.rk_stage(f, k, stage, acc, a, b, first)


def rk_finish(f, acc, k, b):
    return _active.rk_finish(f, acc, k, b)


_requested = os.environ.get("BGKFR_BACKEND", "").strip().lower()
if _requested:
    use_backend(_requested)
else:
    use_backend("cython" if _ckernels is not None else "python")
