"""Gradient of the empirical L2 risk.

Three routes are provided:

* ``grad_risk``            reverse accumulation through the network (production path)
* ``grad_formula_direct``  literal evaluation of the closed-form partial
                           derivative as a sum over neuron paths; exponential
                           in depth, kept as an independent oracle
* ``fd_grad``              central finite differences on the risk

The three agree on every tractable instance; the test suite pins the
tolerances.
"""

from __future__ import annotations

import itertools

import numpy as np

from .network import (
    Architecture,
    Dataset,
    GradientVector,
    WeightVector,
    _chunk_size,
    _forward_chunk,
    empirical_risk,
    hidden_outputs,
)

__all__ = ["grad_risk", "risk_and_grad", "grad_formula_direct", "fd_grad", "fd_gradient"]

# Path-sum evaluation is exponential in depth; refuse beyond this many paths.
_MAX_PATHS = 10**6


def _backward_chunk(
    arch: Architecture,
    w: WeightVector,
    x: np.ndarray,
    resid: np.ndarray,
    acts: list[np.ndarray],
    a_top: np.ndarray,
    g: GradientVector,
) -> None:
    """Accumulate d(resid . f)/dw into ``g`` for one chunk.

    ``resid`` is the derivative of the loss with respect to the network
    output per sample (for the empirical risk: 2 (f - y) / n).
    """
    L = arch.depth
    g.outer += a_top.T @ resid
    # delta at the top activation
    dz = (resid[:, None] * w.outer[None, :]) * (a_top * (1.0 - a_top))
    g.top[:, 0] += dz.sum(axis=0)
    g.top[:, 1:] += np.einsum("nk,nkj->kj", dz, acts[L - 2])
    da = dz[:, :, None] * w.top[None, :, 1:]
    for m in range(L - 3, -1, -1):
        a = acts[m + 1]
        dz = da * (a * (1.0 - a))
        g.hidden[:, m, :, 0] += dz.sum(axis=0)
        g.hidden[:, m, :, 1:] += np.einsum("nki,nkj->kij", dz, acts[m])
        da = np.einsum("nki,kij->nkj", dz, w.hidden[:, m, :, 1:])
    a = acts[0]
    dz = da * (a * (1.0 - a))
    g.layer0[:, :, 0] += dz.sum(axis=0)
    n, K = dz.shape[0], arch.n_subnets
    g.layer0[:, :, 1:] += (dz.reshape(n, K * arch.width).T @ x).reshape(
        K, arch.width, arch.input_dim
    )


def risk_and_grad(
    arch: Architecture, w: WeightVector, data: Dataset
) -> tuple[float, GradientVector]:
    """Empirical risk and its exact gradient in one pass over the sample."""
    g = WeightVector.zeros(arch)
    step = _chunk_size(arch)
    n = data.n
    resid_all = np.empty(n)
    for lo in range(0, n, step):
        xc = data.x[lo : lo + step]
        f, acts, a_top, _ = _forward_chunk(arch, w, xc, True)
        resid = f - data.y[lo : lo + step]
        resid_all[lo : lo + step] = resid
        _backward_chunk(arch, w, xc, 2.0 * resid / n, acts, a_top, g)
    # one global reduction, same grouping as empirical_risk
    return float(np.dot(resid_all, resid_all) / n), g


def grad_risk(arch: Architecture, w: WeightVector, data: Dataset) -> GradientVector:
    """Exact gradient of the empirical risk by reverse accumulation, O(W) per sample."""
    return risk_and_grad(arch, w, data)[1]


def _sigma_prime_from_act(a: float) -> float:
    return a * (1.0 - a)


def grad_formula_direct(
    arch: Architecture,
    w: WeightVector,
    x,
    target_index: tuple[int, int, int, int],
) -> float:
    """Partial derivative of the network output with respect to one weight.

    ``target_index`` is (k, i, j, layer) with layer as in ``flat_index``:
    0-based row i, column j (0 = bias), weight layer 0..depth-1 inside the
    subnetwork, and layer == depth addressing the outer coefficient of
    subnetwork k.  Evaluates the explicit sum over all neuron paths from the
    target weight to the output, one product per path.
    """
    k, i, j, layer = target_index
    d, L, r = arch.input_dim, arch.depth, arch.width
    acts = hidden_outputs(arch, w, x)
    a_top = float(acts[-1][k])
    if layer == L:
        # outer coefficient: the subnetwork output itself
        return a_top
    if layer > L or layer < 0:
        raise IndexError("layer index out of range")

    x = np.asarray(x, dtype=float).ravel()

    def source_value(lv: int, idx: int) -> float:
        # value feeding weight-layer lv at source index idx (0 = bias input 1)
        if idx == 0:
            return 1.0
        if lv == 0:
            return float(x[idx - 1])
        return float(acts[lv - 1][k][idx - 1])

    def act_prime(lv: int, neuron: int) -> float:
        # derivative of the activation produced by weight-layer lv at `neuron`
        if lv == L - 1:
            return _sigma_prime_from_act(a_top)
        return _sigma_prime_from_act(float(acts[lv][k][neuron]))

    def weight(lv: int, row: int, col: int) -> float:
        # weight-layer lv entry (row, col) with col counting the source neuron (1-based)
        if lv == 0:
            return float(w.layer0[k, row, col])
        if lv <= L - 2:
            return float(w.hidden[k, lv - 1, row, col])
        return float(w.top[k, col])

    if layer == L - 1:
        if i != 0:
            raise IndexError("top layer has a single output neuron")
        return source_value(L - 1, j) * act_prime(L - 1, 0) * float(w.outer[k])

    # layers 0 .. depth-2: sum over the neuron path through layers above
    n_path = L - 2 - layer
    if r**n_path > _MAX_PATHS:
        raise ValueError("path sum too large; instance not tractable")
    base = source_value(layer, j) * act_prime(layer, i)
    total = 0.0
    for path in itertools.product(range(r), repeat=n_path):
        term = base
        prev = i
        for step, s in enumerate(path):
            lv = layer + 1 + step
            term *= weight(lv, s, prev + 1) * act_prime(lv, s)
            prev = s
        term *= weight(L - 1, 0, prev + 1) * act_prime(L - 1, 0)
        total += term * float(w.outer[k])
    return total


def fd_gradient(func, w0: np.ndarray, h: float | None = None) -> np.ndarray:
    """Central-difference gradient of a scalar function of a flat vector.

    With ``h`` unset, the step for coordinate i is max(1e-6, 1e-8 * |w_i|).
    """
    w0 = np.asarray(w0, dtype=float)
    grad = np.empty_like(w0)
    for idx in range(w0.size):
        hi = h if h is not None else max(1e-6, 1e-8 * abs(w0[idx]))
        wp = w0.copy()
        wp[idx] = w0[idx] + hi
        fp = func(wp)
        wp[idx] = w0[idx] - hi
        fm = func(wp)
        grad[idx] = (fp - fm) / (2.0 * hi)
    return grad


def fd_grad(
    arch: Architecture, w: WeightVector, data: Dataset, h: float | None = None
) -> GradientVector:
    """Finite-difference gradient of the empirical risk (verification oracle)."""
    if h is not None and not h > 0:
        raise ValueError("h must be positive")

    def risk_of_flat(flat):
        return empirical_risk(arch, WeightVector.from_flat(arch, flat), data)

    flat = fd_gradient(risk_of_flat, w.to_flat(), h)
    return WeightVector.from_flat(arch, flat)
