"""Vectorised numpy kernels (reference path, always available)."""
import numpy as np

name = "numpy"


def _interior(u):
    return (slice(1, -1),) * u.ndim


def neg_laplacian(u, hs):
    out = np.zeros_like(u)
    c = _interior(u)
    if u.ndim == 1:
        (hx,) = hs
        out[c] = (2.0 * u[1:-1] - u[:-2] - u[2:]) / hx**2
    else:
        hx, hy = hs
        uc = u[1:-1, 1:-1]
        out[c] = ((2.0 * uc - u[:-2, 1:-1] - u[2:, 1:-1]) / hx**2
                  + (2.0 * uc - u[1:-1, :-2] - u[1:-1, 2:]) / hy**2)
    return out


def centered_gradient(u, hs):
    if u.ndim == 1:
        gx = np.zeros_like(u)
        gx[1:-1] = (u[2:] - u[:-2]) / (2.0 * hs[0])
        return (gx,)
    hx, hy = hs
    gx = np.zeros_like(u)
    gy = np.zeros_like(u)
    gx[1:-1, 1:-1] = (u[2:, 1:-1] - u[:-2, 1:-1]) / (2.0 * hx)
    gy[1:-1, 1:-1] = (u[1:-1, 2:] - u[1:-1, :-2]) / (2.0 * hy)
    return gx, gy


def grad_sq(u, hs):
    return sum(g * g for g in centered_gradient(u, hs))


def residual_direct(u, m, mu, h, hs):
    r = neg_laplacian(u, hs) - m * u - mu * grad_sq(u, hs) - h
    bnd = np.ones(u.shape, bool)
    bnd[_interior(u)] = False
    r[bnd] = u[bnd]
    return r


def residual_colehopf(w, m, mu, h, mu2, hs):
    with np.errstate(invalid="ignore", divide="ignore"):
        e = 1.0 + mu2 * w
        g = np.log(e) / mu2
        r = neg_laplacian(w, hs) - e * (m * g + h) - (mu - mu2) * grad_sq(w, hs) / e
    bnd = np.ones(w.shape, bool)
    bnd[_interior(w)] = False
    r[bnd] = w[bnd]
    return r


def _signed_power(s, q):
    """``|s|^q * sign(s)`` with the value 0 at ``s = 0`` for any ``q``."""
    out = np.zeros_like(s)
    nz = s != 0
    out[nz] = np.abs(s[nz]) ** q * np.sign(s[nz])
    return out


def _weighted(g2, gx, p):
    """``|g|^(p-2) * gx`` with value 0 where ``|g| = 0``."""
    out = np.zeros_like(gx)
    nz = g2 > 0
    out[nz] = g2[nz] ** ((p - 2.0) / 2.0) * gx[nz]
    return out


def p_laplacian_residual(u, p, a, f, hs):
    out = np.zeros_like(u)
    zero_order = a * _signed_power(u, p - 1.0) - f
    if u.ndim == 1:
        (hx,) = hs
        d = (u[1:] - u[:-1]) / hx
        flux = _weighted(d * d, d, p)
        out[1:-1] = -(flux[1:] - flux[:-1]) / hx + zero_order[1:-1]
        return out
    hx, hy = hs
    # x-faces (i+1/2, j) for j interior
    gxx = (u[1:, 1:-1] - u[:-1, 1:-1]) / hx
    cy = u[:, 2:] - u[:, :-2]
    gxy = (cy[1:, :] + cy[:-1, :]) / (4.0 * hy)
    fx = _weighted(gxx**2 + gxy**2, gxx, p)
    # y-faces (i, j+1/2) for i interior
    gyy = (u[1:-1, 1:] - u[1:-1, :-1]) / hy
    cx = u[2:, :] - u[:-2, :]
    gyx = (cx[:, 1:] + cx[:, :-1]) / (4.0 * hx)
    fy = _weighted(gyy**2 + gyx**2, gyy, p)
    div = (fx[1:, :] - fx[:-1, :]) / hx + (fy[:, 1:] - fy[:, :-1]) / hy
    out[1:-1, 1:-1] = -div + zero_order[1:-1, 1:-1]
    return out


def dyadic_block_sums(cells, level):
    """Number of marked cells in every dyadic block at ``level``.

    ``cells`` is a boolean array with ``2**depth`` cells per axis; level 0 is
    the whole cube and level ``depth`` the individual cells.
    """
    n = cells.shape[0]
    k = 2**level
    b = n // k
    c = cells.astype(np.int64)
    if cells.ndim == 1:
        return c.reshape(k, b).sum(axis=1)
    return c.reshape(k, b, k, b).sum(axis=(1, 3))
