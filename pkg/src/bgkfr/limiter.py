"""Zhang-Shu squeeze limiter on element-wise nodal values."""
import numpy as np

from . import kernels


class MeanNegativityError(RuntimeError):
    """An element mean went negative: the time step broke the positivity bound."""


def element_mean(nodal_values, basis) -> float:
    return float(np.dot(basis.mean_weights, np.asarray(nodal_values, dtype=float)))


def squeeze(nodal_values, basis, neg_tol: float = 1e-12) -> np.ndarray:
    """Contract one element's values toward their mean until the minimum is >= 0."""
    v = np.array(nodal_values, dtype=float).reshape(1, -1, 1)
    if v.shape[1] != basis.n_s:
        raise ValueError(f"expected {basis.n_s} nodal values, got {v.shape[1]}")
    if kernels.squeeze_limit(v, basis.mean_weights, neg_tol):
        raise MeanNegativityError("negative element mean")
    return v[0, :, 0]


def squeeze_field(f, basis, neg_tol: float = 1e-12) -> None:
    """In-place squeeze of every (element, phase node) column of ``f`` (N_e, N_s, N_q)."""
    n_bad = kernels.squeeze_limit(f, basis.mean_weights, neg_tol)
    if n_bad:
        raise MeanNegativityError(
            f"{n_bad} element means below zero; reduce the time step")
