"""NumPy implementations of the hot kernels.

Array conventions shared with the compiled backend:

* ``f``: (N_e, N_s, N_q) C-contiguous, ``N_q = N_v * N_zeta`` (zeta fastest)
* ``u``: (N_q,) advection speed of every phase node
* per-spatial-node quantities are flattened to ``N_e * N_s`` rows
"""
import numpy as np

NAME = "python"


def squeeze_limit(f, mean_w, neg_tol=1e-12):
    """In-place positivity squeeze per (element, phase node).

    Returns the number of element means below ``-neg_tol`` times the
    element's largest ``|f|`` over all nodes, so far-tail phase nodes at
    underflow level do not trip the check.
    """
    mean = np.einsum("i,eiq->eq", mean_w, f)
    fmin = f.min(axis=1)
    scale = np.abs(f).max(axis=(1, 2))[:, None]
    n_bad = int(np.count_nonzero(mean < -neg_tol * scale))
    mask = fmin < 0.0
    if np.any(mask):
        denom = mean - fmin
        safe = np.where(np.abs(denom) < 1e-300, 1.0, denom)
        beta = np.where(np.abs(denom) < 1e-300, 1.0,
                        np.minimum(np.abs(mean / safe), 1.0))
        beta = np.where(mask, beta, 1.0)
        ee, qq = np.nonzero(mask)
        b = beta[ee, qq][:, None]
        mu = mean[ee, qq][:, None]
        # clamp the round-off residue at the minimum so a second pass is a no-op
        f[ee, :, qq] = np.maximum(mu + b * (f[ee, :, qq] - mu), 0.0)
    return n_bad


def transport_rhs(f, D, gl, gr, rdx, u, ghost_l, ghost_r, out):
    """``out = -d/dx (u f)`` via flux reconstruction with upwind interfaces."""
    n_e = f.shape[0]
    fl = f[:, 0, :]
    fr = f[:, -1, :]
    # traces either side of each of the N_e + 1 vertices
    left_side = np.empty((n_e + 1, f.shape[2]))
    right_side = np.empty_like(left_side)
    left_side[0] = ghost_l
    left_side[1:] = fr
    right_side[:-1] = fl
    right_side[-1] = ghost_r
    flux = np.where(u > 0.0, u * left_side, u * right_side)
    jump_l = flux[:-1] - u * fl
    jump_r = flux[1:] - u * fr
    np.matmul(D, f, out=out)
    out *= u
    out += gl[None, :, None] * jump_l[:, None, :]
    out += gr[None, :, None] * jump_r[:, None, :]
    out *= -rdx[:, None, None]
    return out


def phase_moments(f, wu, u1, wz, z, n_v, n_z):
    """``[rho, rho U, E]`` at every spatial node for m = 1 grids."""
    g = f.reshape(-1, n_v, n_z)
    a = g @ wz
    b = g @ (wz * z)
    out = np.empty((g.shape[0], 3))
    out[:, 0] = a @ wu
    out[:, 1] = a @ (wu * u1)
    out[:, 2] = a @ (0.5 * wu * u1 * u1) + b @ wu
    return out


def add_relaxation(f, gu, gz, inv_tau, out):
    """``out += (gu (x) gz - f) * inv_tau`` per spatial node."""
    n = gu.shape[0]
    fv = f.reshape(n, gu.shape[1], gz.shape[1])
    ov = out.reshape(fv.shape)
    ov += (gu[:, :, None] * gz[:, None, :] - fv) * inv_tau[:, None, None]
    return out


def rk_stage(f, k, stage, acc, a, b, first):
    """``stage = f + a k`` and ``acc (+)= b k`` on flat arrays."""
    np.multiply(k, a, out=stage)
    stage += f
    if first:
        np.multiply(k, b, out=acc)
    else:
        acc += b * k


def rk_finish(f, acc, k, b):
    """``f += acc + b k``."""
    f += acc + b * k


def dvm_project(Q, u, wu, z, wz, delta, n_iters, floor, alpha, gu, gz, res, status):
    """Batched Newton projection for m = d = 1; delegates to the NumPy DVM.

    Only the first failing node is flagged in ``status`` (see the compiled
    kernel for the codes).
    """
    from types import SimpleNamespace

    from .. import dvm
    from ..phase_grid import InvalidState

    vgrid = SimpleNamespace(m=1, nodes=u[:, None], weights=wu, offset=np.zeros(1))
    egrid = SimpleNamespace(delta=float(delta), nodes=z, weights=wz)
    op = SimpleNamespace(vgrid=vgrid, egrid=egrid, d=1)
    status[:] = 0
    Q = np.asarray(Q)
    bad = ~(Q[:, 0] > 0.0)
    if not np.any(bad):
        rho = Q[:, 0]
        theta = (Q[:, 2] - 0.5 * Q[:, 1] ** 2 / rho) / (0.5 * (1.0 + delta) * rho)
        bad = ~(theta > 0.0)
    if np.any(bad):
        status[int(np.flatnonzero(bad)[0])] = 4
        return status
    try:
        a, r = dvm.newton_project(Q, op, n_iters)
    except dvm.DVMConvergenceError as exc:
        msg = str(exc)
        code = 1 if "singular" in msg else 2 if "admissible" in msg else 3
        status[0 if exc.index is None else exc.index] = code
        return status
    except InvalidState:
        status[0] = 4
        return status
    alpha[:] = a
    res[:] = r
    g_u, g_z = dvm.equilibrium_factors(a, op)
    gu[:] = g_u
    gz[:] = g_z
    return status
