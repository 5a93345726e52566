"""Convolution and batch-norm compute kernels.

Activations are channels-last (N, H, W, C) and conv weights (K, K, C_in,
C_out). The convolutions decompose into jitted patch packing / column
scattering (strided memory movement numpy is slow at) around a single BLAS
matrix product (where the FLOPs belong):

    forward        pack(x) @ w                      -> output rows
    input grad     g @ w.T, then scatter-add        -> input image
    weight grad    pack(x).T @ g                    -> kernel block

A transposed convolution is the same triple with the roles of forward and
input-grad exchanged; its backward shares one packing of the output
gradient between both gemms. Batch norm gets fused two-pass statistics,
normalization, and backward kernels operating on a flattened (rows,
channels) view.

Loop and reduction orders are fixed, so results are deterministic for
identical inputs. BLAS should be pinned to one thread while these kernels
run (see ``single_thread_blas``); the jitted parts parallelize themselves.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange
from threadpoolctl import threadpool_limits


def single_thread_blas():
    """Context manager serializing BLAS while numba owns the cores."""
    return threadpool_limits(limits=1, user_api="blas")


# -- patch packing / column scattering ---------------------------------------


def _pack_patches_impl(x, k, stride, padding, oh, ow):
    n_, h, wd, c_ = x.shape
    cols = np.empty((n_, oh, ow, k * k * c_), dtype=x.dtype)
    for n in prange(n_):
        for oi in range(oh):
            for oj in range(ow):
                row = cols[n, oi, oj]
                for ki in range(k):
                    xi = stride * oi + ki - padding
                    for kj in range(k):
                        xj = stride * oj + kj - padding
                        base = (ki * k + kj) * c_
                        if 0 <= xi < h and 0 <= xj < wd:
                            xrow = x[n, xi, xj]
                            for c in range(c_):
                                row[base + c] = xrow[c]
                        else:
                            for c in range(c_):
                                row[base + c] = 0.0
    return cols


def _scatter_cols_impl(gcols, k, stride, padding, oh, ow, c_):
    n_, gh, gw, _ = gcols.shape
    out = np.zeros((n_, oh, ow, c_), dtype=gcols.dtype)
    for n in prange(n_):
        for qi in range(gh):
            for qj in range(gw):
                row = gcols[n, qi, qj]
                for ki in range(k):
                    y = stride * qi + ki - padding
                    if y < 0 or y >= oh:
                        continue
                    for kj in range(k):
                        z = stride * qj + kj - padding
                        if z < 0 or z >= ow:
                            continue
                        orow = out[n, y, z]
                        base = (ki * k + kj) * c_
                        for c in range(c_):
                            orow[c] += row[base + c]
    return out


def conv_forward(x, w, stride, padding, cols=None):
    """x (N,H,W,Ci), w (K,K,Ci,Co) -> (out (N,OH,OW,Co), cols).

    ``cols`` is the packed-patch matrix; callers keep it to reuse in the
    weight gradient.
    """
    k = w.shape[0]
    ci, co = w.shape[2], w.shape[3]
    n, h, wd, _ = x.shape
    oh = (h + 2 * padding - k) // stride + 1
    ow = (wd + 2 * padding - k) // stride + 1
    if cols is None:
        cols = _pack_patches(x, k, stride, padding, oh, ow)
    out = cols.reshape(n * oh * ow, k * k * ci) @ w.reshape(k * k * ci, co)
    return out.reshape(n, oh, ow, co), cols


def conv_input_grad(g, w, stride, padding, in_hw):
    """Adjoint of conv_forward w.r.t. its input (also the convT forward).

    g (N,GH,GW,Co), w (K,K,Ci,Co) -> (N, in_h, in_w, Ci).
    """
    k = w.shape[0]
    ci, co = w.shape[2], w.shape[3]
    n, gh, gw, _ = g.shape
    oh, ow = in_hw
    wmat = w.reshape(k * k * ci, co)
    gcols = g.reshape(n * gh * gw, co) @ wmat.T
    return _scatter_cols(gcols.reshape(n, gh, gw, k * k * ci),
                         k, stride, padding, oh, ow, ci)


def conv_weight_grad(cols, g, k, ci):
    """cols from conv_forward, g (N,OH,OW,Co) -> (K,K,Ci,Co)."""
    n, oh, ow, co = g.shape
    gw = cols.reshape(n * oh * ow, k * k * ci).T @ g.reshape(n * oh * ow, co)
    return gw.reshape(k, k, ci, co)


# -- batch norm ---------------------------------------------------------------


def _bn_stats_impl(x2, nchunks):
    m, c_ = x2.shape
    psum = np.zeros((nchunks, c_), dtype=np.float64)
    step = (m + nchunks - 1) // nchunks
    for t in prange(nchunks):
        lo = t * step
        hi = min(m, lo + step)
        for r in range(lo, hi):
            row = x2[r]
            prow = psum[t]
            for c in range(c_):
                prow[c] += row[c]
    mean = psum.sum(axis=0) / m
    pvar = np.zeros((nchunks, c_), dtype=np.float64)
    for t in prange(nchunks):
        lo = t * step
        hi = min(m, lo + step)
        for r in range(lo, hi):
            row = x2[r]
            prow = pvar[t]
            for c in range(c_):
                d = row[c] - mean[c]
                prow[c] += d * d
    var = pvar.sum(axis=0) / m
    return mean, var


def _bn_normalize_impl(x2, mean, inv_gamma, beta):
    m, c_ = x2.shape
    out = np.empty_like(x2)
    for r in prange(m):
        row = x2[r]
        orow = out[r]
        for c in range(c_):
            orow[c] = (row[c] - mean[c]) * inv_gamma[c] + beta[c]
    return out


def _bn_bwd_reduce_impl(g2, x2, mean, inv_std, nchunks):
    m, c_ = g2.shape
    pg = np.zeros((nchunks, c_), dtype=np.float64)
    pgx = np.zeros((nchunks, c_), dtype=np.float64)
    step = (m + nchunks - 1) // nchunks
    for t in prange(nchunks):
        lo = t * step
        hi = min(m, lo + step)
        for r in range(lo, hi):
            grow = g2[r]
            xrow = x2[r]
            a = pg[t]
            b = pgx[t]
            for c in range(c_):
                gv = grow[c]
                a[c] += gv
                b[c] += gv * (xrow[c] - mean[c]) * inv_std[c]
    return pg.sum(axis=0), pgx.sum(axis=0)


def _bn_bwd_dx_impl(g2, x2, mean, inv_std, gamma, mean_g, mean_gx):
    m, c_ = g2.shape
    dx = np.empty_like(g2)
    for r in prange(m):
        grow = g2[r]
        xrow = x2[r]
        drow = dx[r]
        for c in range(c_):
            xhat = (xrow[c] - mean[c]) * inv_std[c]
            drow[c] = (grow[c] - mean_g[c] - xhat * mean_gx[c]) * inv_std[c] * gamma[c]
    return dx


def _dual(impl):
    return (njit(parallel=False, fastmath=True, cache=True)(impl),
            njit(parallel=True, fastmath=True, cache=True)(impl))


_pack_ser, _pack_par = _dual(_pack_patches_impl)
_scatter_ser, _scatter_par = _dual(_scatter_cols_impl)
_bn_stats_ser, _bn_stats_par = _dual(_bn_stats_impl)
_bn_norm_ser, _bn_norm_par = _dual(_bn_normalize_impl)
_bn_red_ser, _bn_red_par = _dual(_bn_bwd_reduce_impl)
_bn_dx_ser, _bn_dx_par = _dual(_bn_bwd_dx_impl)

# below this, the parallel-region overhead outweighs the second core
_PARALLEL_CUTOVER = 100_000


def _pack_patches(x, k, stride, padding, oh, ow):
    work = x.shape[0] * oh * ow * k * k * x.shape[3]
    f = _pack_par if work >= _PARALLEL_CUTOVER else _pack_ser
    return f(x, k, stride, padding, oh, ow)


def _scatter_cols(gcols, k, stride, padding, oh, ow, c_):
    f = _scatter_par if gcols.size >= _PARALLEL_CUTOVER else _scatter_ser
    return f(gcols, k, stride, padding, oh, ow, c_)


_BN_CHUNKS = 8



def bn_batch_stats(x2):
    """Per-channel mean and biased variance of a (rows, channels) view."""
    f = _bn_stats_par if x2.size >= _PARALLEL_CUTOVER else _bn_stats_ser
    mean, var = f(x2, _BN_CHUNKS)
    return mean.astype(x2.dtype), var.astype(x2.dtype)


def bn_normalize(x2, mean, inv_std, gamma, beta):
    f = _bn_norm_par if x2.size >= _PARALLEL_CUTOVER else _bn_norm_ser
    return f(x2, mean, inv_std * gamma, beta)


def bn_backward(g2, x2, mean, inv_std, gamma):
    """Returns (dx, dgamma, dbeta) for training-mode normalization."""
    m = g2.shape[0]
    red = _bn_red_par if g2.size >= _PARALLEL_CUTOVER else _bn_red_ser
    sum_g, sum_gx = red(g2, x2, mean, inv_std, _BN_CHUNKS)
    dgamma = sum_gx.astype(g2.dtype)
    dbeta = sum_g.astype(g2.dtype)
    mean_g = (sum_g / m).astype(g2.dtype)
    mean_gx = (sum_gx / m).astype(g2.dtype)
    dxk = _bn_dx_par if g2.size >= _PARALLEL_CUTOVER else _bn_dx_ser
    dx = dxk(g2, x2, mean, inv_std, gamma, mean_g, mean_gx)
    return dx, dgamma, dbeta
