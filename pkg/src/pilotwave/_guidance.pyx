# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled guidance kernel; same layout and arithmetic as ``_guidance_py``."""
import numpy as np

from libc.math cimport floor

ctypedef double complex cplx


cdef class _Field:
    cdef const cplx[:, :, :, ::1] psi
    cdef const cplx[:, :, :, :, ::1] grad
    cdef const double[::1] amp
    cdef const double[:, ::1] drift
    cdef double inv_mass[2]
    cdef double ox, oy, hx, hy, t0, snap_dt, node_rel
    cdef Py_ssize_t K, C, D, nx, ny

    def __init__(self, field):
        psi = np.ascontiguousarray(field["psi"], dtype=np.complex128)
        grad = np.ascontiguousarray(field["grad"], dtype=np.complex128)
        self.psi = psi
        self.grad = grad
        self.amp = np.ascontiguousarray(field["amp"], dtype=np.float64)
        self.drift = np.ascontiguousarray(field["drift"], dtype=np.float64)
        self.K = psi.shape[0]
        self.C = psi.shape[1]
        self.nx = psi.shape[2]
        self.ny = psi.shape[3]
        self.D = grad.shape[2]
        inv_mass = np.asarray(field["inv_mass"], dtype=np.float64)
        self.inv_mass[0] = inv_mass[0]
        self.inv_mass[1] = inv_mass[1] if self.D == 2 else 0.0
        self.ox, self.oy = field["origin"]
        self.hx, self.hy = field["spacing"]
        self.t0 = field["t0"]
        self.snap_dt = field["snap_dt"]
        self.node_rel = field["node_rel"]

    cdef int velocity(self, double x, double y, double t,
                      double* vx, double* vy) noexcept nogil:
        cdef Py_ssize_t k, kk, nt, i0, i1, j0, j1, c, d
        cdef double s, w, fx, fi, wx, fy, fj, wy, rho, dens, thr, tw
        cdef double num[2]
        cdef cplx p, g, s0, s1
        cdef cplx pv
        cdef cplx gv[2]

        if self.K == 1:
            k = 0
            w = 0.0
            nt = 1
        else:
            s = (t - self.t0) / self.snap_dt
            k = <Py_ssize_t>floor(s)
            if k < 0:
                k = 0
            elif k > self.K - 2:
                k = self.K - 2
            w = s - k
            if w < 0.0:
                w = 0.0
            elif w > 1.0:
                w = 1.0
            nt = 2

        fx = (x - self.ox) / self.hx
        fi = floor(fx)
        wx = fx - fi
        i0 = (<Py_ssize_t>fi) % self.nx
        if i0 < 0:
            i0 += self.nx
        i1 = i0 + 1
        if i1 == self.nx:
            i1 = 0
        if self.D == 2:
            fy = (y - self.oy) / self.hy
            fj = floor(fy)
            wy = fy - fj
            j0 = (<Py_ssize_t>fj) % self.ny
            if j0 < 0:
                j0 += self.ny
            j1 = j0 + 1
            if j1 == self.ny:
                j1 = 0
        else:
            j0 = 0
            j1 = 0
            wy = 0.0

        rho = 0.0
        num[0] = 0.0
        num[1] = 0.0
        for c in range(self.C):
            pv = 0.0
            gv[0] = 0.0
            gv[1] = 0.0
            for kk in range(nt):
                if nt == 1:
                    tw = 1.0
                elif kk == 0:
                    tw = 1.0 - w
                else:
                    tw = w
                s0 = (1.0 - wx) * self.psi[k + kk, c, i0, j0] + wx * self.psi[k + kk, c, i1, j0]
                s1 = (1.0 - wx) * self.psi[k + kk, c, i0, j1] + wx * self.psi[k + kk, c, i1, j1]
                p = (1.0 - wy) * s0 + wy * s1
                if nt == 1:
                    pv = p
                else:
                    pv = pv + tw * p
                for d in range(self.D):
                    s0 = (1.0 - wx) * self.grad[k + kk, c, d, i0, j0] + wx * self.grad[k + kk, c, d, i1, j0]
                    s1 = (1.0 - wx) * self.grad[k + kk, c, d, i0, j1] + wx * self.grad[k + kk, c, d, i1, j1]
                    g = (1.0 - wy) * s0 + wy * s1
                    if nt == 1:
                        gv[d] = g
                    else:
                        gv[d] = gv[d] + tw * g
            dens = pv.real * pv.real + pv.imag * pv.imag
            rho = rho + dens
            for d in range(self.D):
                num[d] = num[d] + (self.inv_mass[d] * (pv.real * gv[d].imag - pv.imag * gv[d].real)
                                   + self.drift[c, d] * dens)

        if nt == 1:
            thr = self.node_rel * self.amp[0]
        else:
            thr = self.node_rel * ((1.0 - w) * self.amp[k] + w * self.amp[k + 1])
        if not (rho >= thr * thr and rho > 0.0):
            vx[0] = 0.0
            vy[0] = 0.0
            return 0
        vx[0] = num[0] / rho
        vy[0] = num[1] / rho if self.D == 2 else 0.0
        return 1

    cdef int rk4(self, double x, double y, double t, double h,
                 double* nx_, double* ny_) noexcept nogil:
        cdef double k1x, k1y, k2x, k2y, k3x, k3y, k4x, k4y
        cdef int ok = 1
        ok &= self.velocity(x, y, t, &k1x, &k1y)
        ok &= self.velocity(x + (0.5 * h) * k1x, y + (0.5 * h) * k1y, t + 0.5 * h, &k2x, &k2y)
        ok &= self.velocity(x + (0.5 * h) * k2x, y + (0.5 * h) * k2y, t + 0.5 * h, &k3x, &k3y)
        ok &= self.velocity(x + h * k3x, y + h * k3y, t + h, &k4x, &k4y)
        nx_[0] = x + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        ny_[0] = y + (h / 6.0) * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        return ok

    cdef int advance(self, double* x, double* y, double t, double h,
                     int depth, int max_halvings) noexcept nogil:
        cdef double nx_, ny_
        if self.rk4(x[0], y[0], t, h, &nx_, &ny_):
            x[0] = nx_
            y[0] = ny_
            return 1
        if depth >= max_halvings:
            return 0
        if not self.advance(x, y, t, 0.5 * h, depth + 1, max_halvings):
            return 0
        return self.advance(x, y, t + 0.5 * h, 0.5 * h, depth + 1, max_halvings)


def velocity(field, X, t):
    cdef _Field f = _Field(field)
    cdef const double[:, ::1] pts = np.ascontiguousarray(X, dtype=np.float64)
    cdef Py_ssize_t m = pts.shape[0], j
    cdef Py_ssize_t D = pts.shape[1]
    tt = np.broadcast_to(np.asarray(t, dtype=np.float64), (m,)).copy()
    cdef const double[::1] ts = tt
    V = np.zeros((m, D))
    ok = np.zeros(m, dtype=bool)
    cdef double[:, ::1] Vv = V
    cdef double vx, vy
    for j in range(m):
        ok[j] = f.velocity(pts[j, 0], pts[j, 1] if D == 2 else 0.0, ts[j], &vx, &vy)
        Vv[j, 0] = vx
        if D == 2:
            Vv[j, 1] = vy
    return V, ok


def transport(field, x0, double t_start, double dt, int n_steps, int record_every,
              int max_halvings=20):
    cdef _Field f = _Field(field)
    cdef const double[:, ::1] X0 = np.ascontiguousarray(x0, dtype=np.float64)
    cdef Py_ssize_t n = X0.shape[0], D = X0.shape[1]
    cdef Py_ssize_t n_rec = n_steps // record_every + 1
    rec = np.empty((n, n_rec, D))
    flags = np.zeros(n, dtype=np.uint8)
    cdef double[:, :, ::1] R = rec
    cdef unsigned char[::1] F = flags
    cdef Py_ssize_t j, step
    cdef double x, y, xx, yy, t
    cdef int alive
    with nogil:
        for j in range(n):
            x = X0[j, 0]
            y = X0[j, 1] if D == 2 else 0.0
            R[j, 0, 0] = x
            if D == 2:
                R[j, 0, 1] = y
            alive = 1
            for step in range(n_steps):
                if alive:
                    t = t_start + step * dt
                    xx = x
                    yy = y
                    if f.advance(&xx, &yy, t, dt, 0, max_halvings):
                        x = xx
                        y = yy
                    else:
                        alive = 0
                        F[j] = 1
                if (step + 1) % record_every == 0:
                    R[j, (step + 1) // record_every, 0] = x
                    if D == 2:
                        R[j, (step + 1) // record_every, 1] = y
    return rec, flags
