# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Scalar closed-loop step, compiled.

Same API and arithmetic order as ``_kernel_py.py``; see there for the
description of one step and of the log row.
"""

from libc.math cimport cos, sin, tanh, sqrt, fabs, fmod, isfinite, INFINITY, NAN, M_PI

from ._kernel_py import COLUMNS, NCOLS

cdef double TWO_PI = 2.0 * M_PI


cdef inline double wrap(double a) nogil:
    a = fmod(a + M_PI, TWO_PI)
    if a <= 0.0:
        a += TWO_PI
    return a - M_PI


cdef class LoopKernel:
    cdef double m[9]
    cdef double minv[9]
    cdef double dl[9]
    cdef double dq[9]
    cdef double g[3]
    cdef double g1[3]
    cdef double g2[3]
    cdef double a1[3]
    cdef double a2[3]
    cdef double eps[3]
    cdef double kappa
    cdef double tconf[12]
    cdef double cx, cy
    cdef bint force_mode
    cdef double f_max, dt, c1
    cdef double eta[3]
    cdef double nu[3]
    cdef double eta_d[3]
    cdef double eta_d_dot[3]
    cdef double eta_d_ddot[3]
    cdef double alloc[12]
    cdef double kw[4]
    cdef double w[4]
    cdef double w_hat[4]
    cdef double d_hat[3]
    cdef double cap[3]
    cdef bint freeze
    cdef bint analytic
    cdef double tau_f
    cdef double alpha_prev[3]
    cdef double alpha_dot_f[3]
    cdef bint has_prev
    cdef double tau_c[3]
    cdef double[:, ::1] d
    cdef double[:, ::1] log

    def __init__(self, mass, mass_inv, lin_damp, quad_damp, gravity, gamma1, gamma2,
                 a1, a2, eps, kappa, tconf, current_x, current_y, force_mode, f_max, dt, c1):
        cdef int i
        for i in range(9):
            self.m[i] = mass[i]
            self.minv[i] = mass_inv[i]
            self.dl[i] = lin_damp[i]
            self.dq[i] = quad_damp[i]
        for i in range(3):
            self.g[i] = gravity[i]
            self.g1[i] = gamma1[i]
            self.g2[i] = gamma2[i]
            self.a1[i] = a1[i]
            self.a2[i] = a2[i]
            self.eps[i] = eps[i]
            self.eta[i] = 0.0
            self.nu[i] = 0.0
            self.eta_d[i] = 0.0
            self.eta_d_dot[i] = 0.0
            self.eta_d_ddot[i] = 0.0
            self.d_hat[i] = 0.0
            self.alpha_prev[i] = 0.0
            self.alpha_dot_f[i] = 0.0
            self.tau_c[i] = 0.0
            self.cap[i] = INFINITY
        for i in range(12):
            self.tconf[i] = tconf[i]
            self.alloc[i] = 0.0
        for i in range(4):
            self.kw[i] = 0.0
            self.w[i] = 1.0
            self.w_hat[i] = 1.0
        self.kappa = kappa
        self.cx = current_x
        self.cy = current_y
        self.force_mode = force_mode
        self.f_max = f_max
        self.dt = dt
        self.c1 = c1
        self.freeze = False
        self.analytic = True
        self.tau_f = 0.1
        self.has_prev = False

    # -- configuration -----------------------------------------------------

    def set_state(self, eta, nu):
        cdef int i
        for i in range(3):
            self.eta[i] = eta[i]
            self.nu[i] = nu[i]

    def get_state(self):
        return [self.eta[0], self.eta[1], self.eta[2]], [self.nu[0], self.nu[1], self.nu[2]]

    def set_reference(self, eta_d, eta_d_dot, eta_d_ddot):
        cdef int i
        for i in range(3):
            self.eta_d[i] = eta_d[i]
            self.eta_d_dot[i] = eta_d_dot[i]
            self.eta_d_ddot[i] = eta_d_ddot[i]

    def set_allocation(self, p):
        cdef int i
        for i in range(12):
            self.alloc[i] = p[i]

    def set_thrusters(self, kw, w, w_hat):
        cdef int i
        for i in range(4):
            self.kw[i] = kw[i]
            self.w[i] = w[i]
            self.w_hat[i] = w_hat[i]

    def set_adaptation(self, d_hat, cap, freeze):
        cdef int i
        for i in range(3):
            self.d_hat[i] = d_hat[i]
            self.cap[i] = cap[i]
        self.freeze = freeze

    def get_d_hat(self):
        return [self.d_hat[0], self.d_hat[1], self.d_hat[2]]

    def get_tau_c(self):
        return [self.tau_c[0], self.tau_c[1], self.tau_c[2]]

    def set_alpha_mode(self, analytic, tau_f):
        if tau_f <= 0.0:
            raise ValueError("filter time constant must be positive")
        self.analytic = analytic
        self.tau_f = tau_f
        self.has_prev = False

    def bind(self, double[:, ::1] d, double[:, ::1] log):
        if d.shape[1] != 3 or log.shape[1] != NCOLS:
            raise ValueError("bind expects (n, 3) disturbances and (n, NCOLS) log")
        self.d = d
        self.log = log

    # -- plant ---------------------------------------------------------------

    cdef void _rhs(self, double *x, double *tau, double *dd, double *out) nogil:
        cdef double psi = x[2]
        cdef double c = cos(psi)
        cdef double s = sin(psi)
        cdef double u = x[3], v = x[4], r = x[5]
        cdef double fx = tau[0] - self.g[0] + dd[0]
        cdef double fy = tau[1] - self.g[1] + dd[1]
        cdef double fn = tau[2] - self.g[2] + dd[2]
        cdef double ucb = c * self.cx + s * self.cy
        cdef double vcb = -s * self.cx + c * self.cy
        cdef double ur, vr, rr, au, av, ar, mu0, mu1, dc, mv0, mv1, h0, h1, h2, b0, b1, b2
        cdef double *m = self.m
        cdef double *dl = self.dl
        cdef double *dq = self.dq
        cdef double *mi = self.minv
        cdef int i
        if self.force_mode:
            au = fabs(ucb)
            av = fabs(vcb)
            mu0 = m[0] * ucb + m[1] * vcb
            mu1 = m[3] * ucb + m[4] * vcb
            for i in range(3):
                dc = (dl[3 * i] + dq[3 * i] * au) * ucb + (dl[3 * i + 1] + dq[3 * i + 1] * av) * vcb
                if i == 0:
                    fx += dc
                elif i == 1:
                    fy += dc
                else:
                    fn += dc - (mu1 * ucb - mu0 * vcb)
            ur = u
            vr = v
            rr = r
        else:
            ur = u - ucb
            vr = v - vcb
            rr = r
        mv0 = m[0] * ur + m[1] * vr + m[2] * rr
        mv1 = m[3] * ur + m[4] * vr + m[5] * rr
        au = fabs(ur)
        av = fabs(vr)
        ar = fabs(rr)
        h0 = -mv1 * rr + (dl[0] + dq[0] * au) * ur + (dl[1] + dq[1] * av) * vr + (dl[2] + dq[2] * ar) * rr
        h1 = mv0 * rr + (dl[3] + dq[3] * au) * ur + (dl[4] + dq[4] * av) * vr + (dl[5] + dq[5] * ar) * rr
        h2 = (mv1 * ur - mv0 * vr + (dl[6] + dq[6] * au) * ur + (dl[7] + dq[7] * av) * vr
              + (dl[8] + dq[8] * ar) * rr)
        b0 = fx - h0
        b1 = fy - h1
        b2 = fn - h2
        out[0] = c * u - s * v
        out[1] = s * u + c * v
        out[2] = r
        out[3] = mi[0] * b0 + mi[1] * b1 + mi[2] * b2
        out[4] = mi[3] * b0 + mi[4] * b1 + mi[5] * b2
        out[5] = mi[6] * b0 + mi[7] * b1 + mi[8] * b2

    cdef bint _rk4(self, double *tau, double *dd) nogil:
        cdef double dt = self.dt
        cdef double x0[6]
        cdef double xs[6]
        cdef double x1[6]
        cdef double k1[6]
        cdef double k2[6]
        cdef double k3[6]
        cdef double k4[6]
        cdef int i
        for i in range(3):
            x0[i] = self.eta[i]
            x0[3 + i] = self.nu[i]
        self._rhs(x0, tau, dd, k1)
        for i in range(6):
            xs[i] = x0[i] + 0.5 * dt * k1[i]
        self._rhs(xs, tau, dd, k2)
        for i in range(6):
            xs[i] = x0[i] + 0.5 * dt * k2[i]
        self._rhs(xs, tau, dd, k3)
        for i in range(6):
            xs[i] = x0[i] + dt * k3[i]
        self._rhs(xs, tau, dd, k4)
        for i in range(6):
            x1[i] = x0[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            if not isfinite(x1[i]):
                return False
        self.eta[0] = x1[0]
        self.eta[1] = x1[1]
        self.eta[2] = wrap(x1[2])
        for i in range(3):
            self.nu[i] = x1[3 + i]
        return True

    # -- control -------------------------------------------------------------

    cpdef double step(self, Py_ssize_t k, double t):
        """Advance one control step; returns the residual, NaN on blow-up."""
        cdef double[::1] row = self.log[k]
        cdef double dd[3]
        cdef double tau[3]
        cdef double *eta = self.eta
        cdef double *nu = self.nu
        cdef double *m = self.m
        cdef double *dl = self.dl
        cdef double *dq = self.dq
        cdef double *dh = self.d_hat
        cdef double *p = self.alloc
        cdef double *tc = self.tconf
        cdef double *f = self.alpha_dot_f
        cdef double psi, c, s, e0, e1, e2, w0, w1, w2, al0, al1, al2, en0, en1, en2, r
        cdef double ed0, ed1, ed2, q0, q1, q2, ad0, ad1, ad2, gain
        cdef double ge0, ge1, ge2, mv0, mv1, au, av, ar, cd0, cd1, cd2, kap
        cdef double tc0, tc1, tc2, res, dh0, dh1, dh2, fmax, tau0, tau1, tau2, ui, fi
        cdef int i
        dd[0] = self.d[k, 0]
        dd[1] = self.d[k, 1]
        dd[2] = self.d[k, 2]
        psi = eta[2]
        c = cos(psi)
        s = sin(psi)
        e0 = self.eta_d[0] - eta[0]
        e1 = self.eta_d[1] - eta[1]
        e2 = wrap(self.eta_d[2] - psi)
        w0 = self.eta_d_dot[0] + self.a1[0] / self.g1[0] * e0
        w1 = self.eta_d_dot[1] + self.a1[1] / self.g1[1] * e1
        w2 = self.eta_d_dot[2] + self.a1[2] / self.g1[2] * e2
        al0 = c * w0 + s * w1
        al1 = -s * w0 + c * w1
        al2 = w2
        en0 = al0 - nu[0]
        en1 = al1 - nu[1]
        en2 = al2 - nu[2]
        r = nu[2]
        if self.analytic:
            ed0 = self.eta_d_dot[0] - (c * nu[0] - s * nu[1])
            ed1 = self.eta_d_dot[1] - (s * nu[0] + c * nu[1])
            ed2 = self.eta_d_dot[2] - r
            q0 = self.eta_d_ddot[0] + self.a1[0] / self.g1[0] * ed0
            q1 = self.eta_d_ddot[1] + self.a1[1] / self.g1[1] * ed1
            q2 = self.eta_d_ddot[2] + self.a1[2] / self.g1[2] * ed2
            ad0 = c * q0 + s * q1 + r * al1
            ad1 = -s * q0 + c * q1 - r * al0
            ad2 = q2
        else:
            if self.has_prev:
                gain = self.dt / (self.tau_f + self.dt)
                f[0] += gain * ((al0 - self.alpha_prev[0]) / self.dt - f[0])
                f[1] += gain * ((al1 - self.alpha_prev[1]) / self.dt - f[1])
                f[2] += gain * ((al2 - self.alpha_prev[2]) / self.dt - f[2])
            self.alpha_prev[0] = al0
            self.alpha_prev[1] = al1
            self.alpha_prev[2] = al2
            self.has_prev = True
            ad0 = f[0]
            ad1 = f[1]
            ad2 = f[2]
        ge0 = self.g1[0] * e0
        ge1 = self.g1[1] * e1
        ge2 = self.g1[2] * e2
        mv0 = m[0] * nu[0] + m[1] * nu[1] + m[2] * nu[2]
        mv1 = m[3] * nu[0] + m[4] * nu[1] + m[5] * nu[2]
        au = fabs(nu[0])
        av = fabs(nu[1])
        ar = fabs(nu[2])
        cd0 = (-mv1 * al2 + (dl[0] + dq[0] * au) * al0 + (dl[1] + dq[1] * av) * al1
               + (dl[2] + dq[2] * ar) * al2)
        cd1 = (mv0 * al2 + (dl[3] + dq[3] * au) * al0 + (dl[4] + dq[4] * av) * al1
               + (dl[5] + dq[5] * ar) * al2)
        cd2 = (mv1 * al0 - mv0 * al1 + (dl[6] + dq[6] * au) * al0 + (dl[7] + dq[7] * av) * al1
               + (dl[8] + dq[8] * ar) * al2)
        kap = self.kappa
        tc0 = (self.a2[0] * en0 + c * ge0 + s * ge1 + m[0] * ad0 + m[1] * ad1 + m[2] * ad2 + cd0
               + self.g[0] + dh[0] * tanh(kap * dh[0] * en0 / self.eps[0]))
        tc1 = (self.a2[1] * en1 - s * ge0 + c * ge1 + m[3] * ad0 + m[4] * ad1 + m[5] * ad2 + cd1
               + self.g[1] + dh[1] * tanh(kap * dh[1] * en1 / self.eps[1]))
        tc2 = (self.a2[2] * en2 + ge2 + m[6] * ad0 + m[7] * ad1 + m[8] * ad2 + cd2
               + self.g[2] + dh[2] * tanh(kap * dh[2] * en2 / self.eps[2]))
        if not (isfinite(tc0) and isfinite(tc1) and isfinite(tc2)):
            return NAN
        self.tau_c[0] = tc0
        self.tau_c[1] = tc1
        self.tau_c[2] = tc2
        res = sqrt(e0 * e0 + e1 * e1 + self.c1 * e2 * e2)

        row[0] = t
        row[1] = eta[0]
        row[2] = eta[1]
        row[3] = eta[2]
        row[4] = nu[0]
        row[5] = nu[1]
        row[6] = nu[2]
        row[7] = e0
        row[8] = e1
        row[9] = e2
        row[10] = en0
        row[11] = en1
        row[12] = en2
        row[13] = res
        row[14] = tc0
        row[15] = tc1
        row[16] = tc2
        row[36] = dh[0]
        row[37] = dh[1]
        row[38] = dh[2]

        if not self.freeze:
            dh0 = dh[0] + en0 / self.g2[0] * self.dt
            dh1 = dh[1] + en1 / self.g2[1] * self.dt
            dh2 = dh[2] + en2 / self.g2[2] * self.dt
            dh0 = min(max(dh0, -self.cap[0]), self.cap[0])
            dh1 = min(max(dh1, -self.cap[1]), self.cap[1])
            dh2 = min(max(dh2, -self.cap[2]), self.cap[2])
            dh[0] = dh0
            dh[1] = dh1
            dh[2] = dh2

        fmax = self.f_max
        tau0 = 0.0
        tau1 = 0.0
        tau2 = 0.0
        for i in range(4):
            ui = p[3 * i] * tc0 + p[3 * i + 1] * tc1 + p[3 * i + 2] * tc2
            fi = self.kw[i] * ui
            if fi > fmax:
                fi = fmax
            elif fi < -fmax:
                fi = -fmax
            tau0 += tc[i] * fi
            tau1 += tc[4 + i] * fi
            tau2 += tc[8 + i] * fi
            row[20 + i] = ui
            row[24 + i] = fi
            row[28 + i] = self.w[i]
            row[32 + i] = self.w_hat[i]
        row[17] = tau0
        row[18] = tau1
        row[19] = tau2
        tau[0] = tau0
        tau[1] = tau1
        tau[2] = tau2

        if not self._rk4(tau, dd):
            return NAN
        return res
