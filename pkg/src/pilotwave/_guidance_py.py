"""Pure numpy guidance kernel: interpolated velocity field and RK4 transport.

Mirrors ``_guidance.pyx`` operation for operation; the compiled module is
preferred when it imports.

Field layout (shared with the Cython kernel)::

    psi    complex (K, C, Nx, Ny)     snapshots x components x grid (Ny = 1 in 1D)
    grad   complex (K, C, D, Nx, Ny)  spectral gradient along each of D axes
    amp    float   (K,)               max total amplitude per snapshot
    drift  float   (C, D)             constant velocity carried by each component
    inv_mass float (D,)
    origin, spacing  float (2,)       unused y entries are 0 and 1
"""
import numpy as np


def _interp(arr, k, w, i0, i1, wx, j0, j1, wy, single):
    # arr: (K, ..., Nx, Ny); returns arr interpolated at (t, x, y) for each point
    def at(kk):
        s0 = (1.0 - wx) * arr[kk, ..., i0, j0].T + wx * arr[kk, ..., i1, j0].T
        s1 = (1.0 - wx) * arr[kk, ..., i0, j1].T + wx * arr[kk, ..., i1, j1].T
        return (1.0 - wy) * s0 + wy * s1

    if single:
        return at(k)
    return (1.0 - w) * at(k) + w * at(k + 1)


def locate(field, X, t):
    """Interpolation indices and weights for points ``X`` (m, D) at time ``t``."""
    psi = field["psi"]
    K, _, nx, ny = psi.shape
    m = X.shape[0]
    t = np.broadcast_to(np.asarray(t, dtype=float), (m,))
    if K == 1:
        k = np.zeros(m, dtype=np.int64)
        w = np.zeros(m)
    else:
        s = (t - field["t0"]) / field["snap_dt"]
        k = np.clip(np.floor(s), 0, K - 2).astype(np.int64)
        w = np.clip(s - k, 0.0, 1.0)
    ox, oy = field["origin"]
    hx, hy = field["spacing"]
    fx = (X[:, 0] - ox) / hx
    fi = np.floor(fx)
    wx = fx - fi
    i0 = np.mod(fi.astype(np.int64), nx)
    i1 = np.where(i0 + 1 == nx, 0, i0 + 1)
    if X.shape[1] == 2:
        fy = (X[:, 1] - oy) / hy
        fj = np.floor(fy)
        wy = fy - fj
        j0 = np.mod(fj.astype(np.int64), ny)
        j1 = np.where(j0 + 1 == ny, 0, j0 + 1)
    else:
        j0 = j1 = np.zeros(m, dtype=np.int64)
        wy = np.zeros(m)
    return k, w, i0, i1, wx, j0, j1, wy, K == 1


def velocity(field, X, t):
    """Guidance velocity at points ``X`` (m, D) and time ``t``.

    Returns ``(V, ok)``; ``ok`` is False where the amplitude is below the
    node threshold (V is then zero).
    """
    X = np.asarray(X, dtype=float)
    loc = locate(field, X, t)
    k, w, single = loc[0], loc[1], loc[-1]
    p = _interp(field["psi"], *loc)            # (C, m)
    g = _interp(field["grad"], *loc)           # (D, C, m)
    p = np.atleast_2d(p)
    dens = p.real * p.real + p.imag * p.imag   # (C, m)
    rho = dens.sum(axis=0)
    D = X.shape[1]
    num = np.zeros((D, X.shape[0]))
    inv_mass = field["inv_mass"]
    drift = field["drift"]
    for c in range(p.shape[0]):
        for d in range(D):
            gd = g[d, c] if g.ndim == 3 else g[d]
            cur = p[c].real * gd.imag - p[c].imag * gd.real
            num[d] += inv_mass[d] * cur + drift[c, d] * dens[c]
    amp = field["amp"]
    if single:
        thr = field["node_rel"] * amp[0]
    else:
        thr = field["node_rel"] * ((1.0 - w) * amp[k] + w * amp[k + 1])
    ok = (rho >= thr * thr) & (rho > 0)
    safe = np.where(ok, rho, 1.0)
    V = np.where(ok, num / safe, 0.0).T
    return V, ok


def rk4(field, X, t, h):
    k1, ok1 = velocity(field, X, t)
    k2, ok2 = velocity(field, X + (0.5 * h) * k1, t + 0.5 * h)
    k3, ok3 = velocity(field, X + (0.5 * h) * k2, t + 0.5 * h)
    k4, ok4 = velocity(field, X + h * k3, t + h)
    new = X + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return new, ok1 & ok2 & ok3 & ok4


def _advance(field, x, t, h, depth, max_halvings):
    new, ok = rk4(field, x[None, :], t, h)
    if ok[0]:
        return new[0]
    if depth >= max_halvings:
        return None
    mid = _advance(field, x, t, 0.5 * h, depth + 1, max_halvings)
    if mid is None:
        return None
    return _advance(field, mid, t + 0.5 * h, 0.5 * h, depth + 1, max_halvings)


def transport(field, x0, t_start, dt, n_steps, record_every, max_halvings=20):
    """Advance every trajectory ``n_steps`` RK4 steps.

    Returns positions ``(n, n_steps // record_every + 1, D)`` and a uint8
    flag per trajectory (1 = node encounter; the trajectory is frozen at
    its last good position).
    """
    X = np.array(x0, dtype=float)
    n, D = X.shape
    n_rec = n_steps // record_every + 1
    rec = np.empty((n, n_rec, D))
    rec[:, 0] = X
    flags = np.zeros(n, dtype=np.uint8)
    active = np.ones(n, dtype=bool)
    for step in range(n_steps):
        t = t_start + step * dt
        idx = np.flatnonzero(active)
        if idx.size:
            new, ok = rk4(field, X[idx], t, dt)
            X[idx[ok]] = new[ok]
            for j in idx[~ok]:
                res = _advance(field, X[j], t, 0.5 * dt, 1, max_halvings)
                if res is not None:
                    res = _advance(field, res, t + 0.5 * dt, 0.5 * dt, 1, max_halvings)
                if res is None:
                    flags[j] = 1
                    active[j] = False
                else:
                    X[j] = res
        if (step + 1) % record_every == 0:
            rec[:, (step + 1) // record_every] = X
    return rec, flags
