"""Loop kernels compiled with ``numba.njit``.

Same signatures and results as :mod:`critgrad.kernels.numpy_impl`; the thin
Python wrappers only dispatch on dimension.
"""
import math

import numpy as np
from numba import njit

name = "numba"

_opts = {"cache": True, "nogil": True}


@njit(**_opts)
def _neg_lap_1d(u, hx):
    out = np.zeros_like(u)
    ih2 = 1.0 / (hx * hx)
    for i in range(1, u.shape[0] - 1):
        out[i] = (2.0 * u[i] - u[i - 1] - u[i + 1]) * ih2
    return out


@njit(**_opts)
def _neg_lap_2d(u, hx, hy):
    out = np.zeros_like(u)
    ihx2 = 1.0 / (hx * hx)
    ihy2 = 1.0 / (hy * hy)
    for i in range(1, u.shape[0] - 1):
        for j in range(1, u.shape[1] - 1):
            c = 2.0 * u[i, j]
            out[i, j] = ((c - u[i - 1, j] - u[i + 1, j]) * ihx2
                         + (c - u[i, j - 1] - u[i, j + 1]) * ihy2)
    return out


@njit(**_opts)
def _grad_1d(u, hx):
    gx = np.zeros_like(u)
    for i in range(1, u.shape[0] - 1):
        gx[i] = (u[i + 1] - u[i - 1]) / (2.0 * hx)
    return gx


@njit(**_opts)
def _grad_2d(u, hx, hy):
    gx = np.zeros_like(u)
    gy = np.zeros_like(u)
    for i in range(1, u.shape[0] - 1):
        for j in range(1, u.shape[1] - 1):
            gx[i, j] = (u[i + 1, j] - u[i - 1, j]) / (2.0 * hx)
            gy[i, j] = (u[i, j + 1] - u[i, j - 1]) / (2.0 * hy)
    return gx, gy


@njit(**_opts)
def _res_direct_1d(u, m, mu, h, hx):
    n = u.shape[0]
    r = np.empty_like(u)
    ih2 = 1.0 / (hx * hx)
    for i in range(1, n - 1):
        g = (u[i + 1] - u[i - 1]) / (2.0 * hx)
        r[i] = ((2.0 * u[i] - u[i - 1] - u[i + 1]) * ih2
                - m[i] * u[i] - mu[i] * g * g - h[i])
    r[0] = u[0]
    r[n - 1] = u[n - 1]
    return r


@njit(**_opts)
def _res_direct_2d(u, m, mu, h, hx, hy):
    nx, ny = u.shape
    r = u.copy()
    ihx2 = 1.0 / (hx * hx)
    ihy2 = 1.0 / (hy * hy)
    for i in range(1, nx - 1):
        for j in range(1, ny - 1):
            c = 2.0 * u[i, j]
            lap = (c - u[i - 1, j] - u[i + 1, j]) * ihx2 + (c - u[i, j - 1] - u[i, j + 1]) * ihy2
            gx = (u[i + 1, j] - u[i - 1, j]) / (2.0 * hx)
            gy = (u[i, j + 1] - u[i, j - 1]) / (2.0 * hy)
            r[i, j] = lap - m[i, j] * u[i, j] - mu[i, j] * (gx * gx + gy * gy) - h[i, j]
    return r


@njit(**_opts)
def _res_ch_1d(w, m, mu, h, mu2, hx):
    n = w.shape[0]
    r = np.empty_like(w)
    ih2 = 1.0 / (hx * hx)
    for i in range(1, n - 1):
        e = 1.0 + mu2 * w[i]
        if e <= 0.0:
            r[i] = np.nan
            continue
        g = (w[i + 1] - w[i - 1]) / (2.0 * hx)
        r[i] = ((2.0 * w[i] - w[i - 1] - w[i + 1]) * ih2
                - e * (m[i] * math.log(e) / mu2 + h[i]) - (mu[i] - mu2) * g * g / e)
    r[0] = w[0]
    r[n - 1] = w[n - 1]
    return r


@njit(**_opts)
def _res_ch_2d(w, m, mu, h, mu2, hx, hy):
    nx, ny = w.shape
    r = w.copy()
    ihx2 = 1.0 / (hx * hx)
    ihy2 = 1.0 / (hy * hy)
    for i in range(1, nx - 1):
        for j in range(1, ny - 1):
            e = 1.0 + mu2 * w[i, j]
            if e <= 0.0:
                r[i, j] = np.nan
                continue
            c = 2.0 * w[i, j]
            lap = (c - w[i - 1, j] - w[i + 1, j]) * ihx2 + (c - w[i, j - 1] - w[i, j + 1]) * ihy2
            gx = (w[i + 1, j] - w[i - 1, j]) / (2.0 * hx)
            gy = (w[i, j + 1] - w[i, j - 1]) / (2.0 * hy)
            r[i, j] = (lap - e * (m[i, j] * math.log(e) / mu2 + h[i, j])
                       - (mu[i, j] - mu2) * (gx * gx + gy * gy) / e)
    return r


@njit(**_opts)
def _spow(s, q):
    if s == 0.0:
        return 0.0
    if s > 0.0:
        return s**q
    return -((-s) ** q)


@njit(**_opts)
def _wflux(g2, gx, p):
    if g2 <= 0.0:
        return 0.0
    return g2 ** ((p - 2.0) / 2.0) * gx


@njit(**_opts)
def _plap_1d(u, p, a, f, hx):
    n = u.shape[0]
    out = np.zeros_like(u)
    left = _wflux(((u[1] - u[0]) / hx) ** 2, (u[1] - u[0]) / hx, p)
    for i in range(1, n - 1):
        d = (u[i + 1] - u[i]) / hx
        right = _wflux(d * d, d, p)
        out[i] = -(right - left) / hx + a[i] * _spow(u[i], p - 1.0) - f[i]
        left = right
    return out


@njit(**_opts)
def _plap_2d(u, p, a, f, hx, hy):
    nx, ny = u.shape
    out = np.zeros_like(u)
    for i in range(1, nx - 1):
        for j in range(1, ny - 1):
            div = 0.0
            for s in (-1, 1):
                # x-face between i and i+s
                k = i + s
                gxx = (u[max(i, k), j] - u[min(i, k), j]) / hx
                gxy = (u[i, j + 1] - u[i, j - 1] + u[k, j + 1] - u[k, j - 1]) / (4.0 * hy)
                div += s * _wflux(gxx * gxx + gxy * gxy, gxx, p) / hx
                # y-face between j and j+s
                k = j + s
                gyy = (u[i, max(j, k)] - u[i, min(j, k)]) / hy
                gyx = (u[i + 1, j] - u[i - 1, j] + u[i + 1, k] - u[i - 1, k]) / (4.0 * hx)
                div += s * _wflux(gyy * gyy + gyx * gyx, gyy, p) / hy
            out[i, j] = -div + a[i, j] * _spow(u[i, j], p - 1.0) - f[i, j]
    return out


@njit(**_opts)
def _block_sums_1d(cells, level):
    k = 2**level
    b = cells.shape[0] // k
    out = np.zeros(k, dtype=np.int64)
    for i in range(cells.shape[0]):
        if cells[i]:
            out[i // b] += 1
    return out


@njit(**_opts)
def _block_sums_2d(cells, level):
    k = 2**level
    b = cells.shape[0] // k
    out = np.zeros((k, k), dtype=np.int64)
    for i in range(cells.shape[0]):
        for j in range(cells.shape[1]):
            if cells[i, j]:
                out[i // b, j // b] += 1
    return out


def neg_laplacian(u, hs):
    return _neg_lap_1d(u, hs[0]) if u.ndim == 1 else _neg_lap_2d(u, hs[0], hs[1])


def centered_gradient(u, hs):
    if u.ndim == 1:
        return (_grad_1d(u, hs[0]),)
    return _grad_2d(u, hs[0], hs[1])


def grad_sq(u, hs):
    return sum(g * g for g in centered_gradient(u, hs))


def residual_direct(u, m, mu, h, hs):
    if u.ndim == 1:
        return _res_direct_1d(u, m, mu, h, hs[0])
    return _res_direct_2d(u, m, mu, h, hs[0], hs[1])


def residual_colehopf(w, m, mu, h, mu2, hs):
    if w.ndim == 1:
        return _res_ch_1d(w, m, mu, h, float(mu2), hs[0])
    return _res_ch_2d(w, m, mu, h, float(mu2), hs[0], hs[1])


def p_laplacian_residual(u, p, a, f, hs):
    if u.ndim == 1:
        return _plap_1d(u, float(p), a, f, hs[0])
    return _plap_2d(u, float(p), a, f, hs[0], hs[1])


def dyadic_block_sums(cells, level):
    c = np.ascontiguousarray(cells, dtype=np.bool_)
    return _block_sums_1d(c, level) if c.ndim == 1 else _block_sums_2d(c, level)
