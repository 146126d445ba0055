"""Scalar closed-loop step, pure Python.

Mirrors ``_kernel.pyx`` line for line so that either backend can drive the
runner. One call to :meth:`LoopKernel.step` performs: tracking errors and
designed wrench, adaptation, allocation, saturated actuation with the true
weights, and one RK4 plant step. The pre-step state, the residual of the
pre-step pose error and everything applied over the step go into one log
row.
"""

import math

NCOLS = 39
COLUMNS = (
    "t", "x", "y", "psi", "u", "v", "r",
    "e_x", "e_y", "e_psi", "e_u", "e_v", "e_r", "R",
    "tc_x", "tc_y", "tc_n", "tau_x", "tau_y", "tau_n",
    "u1", "u2", "u3", "u4", "F1", "F2", "F3", "F4",
    "W1", "W2", "W3", "W4", "What1", "What2", "What3", "What4",
    "Dm1", "Dm2", "Dm3",
)
PI = math.pi
TWO_PI = 2.0 * math.pi


def wrap(a):
    a = math.fmod(a + PI, TWO_PI)
    if a <= 0.0:
        a += TWO_PI
    return a - PI


class LoopKernel:
    """Closed-loop state and one-step update.

    Parameters
    ----------
    mass, mass_inv, lin_damp, quad_damp : sequence of 9 floats
        Row-major 3x3 matrices.
    gravity, gamma1, gamma2, a1, a2, eps : sequence of 3 floats
    kappa : float
    tconf : sequence of 12 floats
        Row-major 3x4 mixing matrix.
    current_x, current_y : float
        Sea current velocity in the navigation frame.
    force_mode : bool
        Apply the current as a quasi-static load instead of through the
        relative velocity.
    f_max, dt, c1 : float
    """

    def __init__(self, mass, mass_inv, lin_damp, quad_damp, gravity, gamma1, gamma2,
                 a1, a2, eps, kappa, tconf, current_x, current_y, force_mode, f_max, dt, c1):
        self.m = [float(x) for x in mass]
        self.minv = [float(x) for x in mass_inv]
        self.dl = [float(x) for x in lin_damp]
        self.dq = [float(x) for x in quad_damp]
        self.g = [float(x) for x in gravity]
        self.g1 = [float(x) for x in gamma1]
        self.g2 = [float(x) for x in gamma2]
        self.a1 = [float(x) for x in a1]
        self.a2 = [float(x) for x in a2]
        self.eps = [float(x) for x in eps]
        self.kappa = float(kappa)
        self.tconf = [float(x) for x in tconf]
        self.cx = float(current_x)
        self.cy = float(current_y)
        self.force_mode = bool(force_mode)
        self.f_max = float(f_max)
        self.dt = float(dt)
        self.c1 = float(c1)
        self.eta = [0.0, 0.0, 0.0]
        self.nu = [0.0, 0.0, 0.0]
        self.eta_d = [0.0, 0.0, 0.0]
        self.eta_d_dot = [0.0, 0.0, 0.0]
        self.eta_d_ddot = [0.0, 0.0, 0.0]
        self.alloc = [0.0] * 12
        self.kw = [0.0] * 4
        self.w = [1.0] * 4
        self.w_hat = [1.0] * 4
        self.d_hat = [0.0, 0.0, 0.0]
        self.cap = [math.inf, math.inf, math.inf]
        self.freeze = False
        self.analytic = True
        self.tau_f = 0.1
        self.alpha_prev = [0.0, 0.0, 0.0]
        self.alpha_dot_f = [0.0, 0.0, 0.0]
        self.has_prev = False
        self.tau_c = [0.0, 0.0, 0.0]
        self.d = None
        self.log = None

    # -- configuration -----------------------------------------------------

    def set_state(self, eta, nu):
        self.eta = [float(x) for x in eta]
        self.nu = [float(x) for x in nu]

    def get_state(self):
        return list(self.eta), list(self.nu)

    def set_reference(self, eta_d, eta_d_dot, eta_d_ddot):
        self.eta_d = [float(x) for x in eta_d]
        self.eta_d_dot = [float(x) for x in eta_d_dot]
        self.eta_d_ddot = [float(x) for x in eta_d_ddot]

    def set_allocation(self, p):
        """Row-major 4x3 allocation matrix (``u = P tau_c``)."""
        self.alloc = [float(x) for x in p]

    def set_thrusters(self, kw, w, w_hat):
        self.kw = [float(x) for x in kw]
        self.w = [float(x) for x in w]
        self.w_hat = [float(x) for x in w_hat]

    def set_adaptation(self, d_hat, cap, freeze):
        self.d_hat = [float(x) for x in d_hat]
        self.cap = [float(x) for x in cap]
        self.freeze = bool(freeze)

    def get_d_hat(self):
        return list(self.d_hat)

    def get_tau_c(self):
        return list(self.tau_c)

    def set_alpha_mode(self, analytic, tau_f):
        if tau_f <= 0.0:
            raise ValueError("filter time constant must be positive")
        self.analytic = bool(analytic)
        self.tau_f = float(tau_f)
        self.has_prev = False

    def bind(self, d, log):
        """Attach the (n, 3) disturbance array and the (n, NCOLS) log array."""
        self.d = d
        self.log = log

    # -- plant ---------------------------------------------------------------

    def _rhs(self, x, tau, dd, out):
        m = self.m
        dl = self.dl
        dq = self.dq
        psi = x[2]
        c = math.cos(psi)
        s = math.sin(psi)
        u, v, r = x[3], x[4], x[5]
        fx = tau[0] - self.g[0] + dd[0]
        fy = tau[1] - self.g[1] + dd[1]
        fn = tau[2] - self.g[2] + dd[2]
        ucb = c * self.cx + s * self.cy
        vcb = -s * self.cx + c * self.cy
        if self.force_mode:
            # D(nu_c) nu_c - C(nu_c) nu_c with nu_c = [ucb, vcb, 0]
            au, av = abs(ucb), abs(vcb)
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
            ur, vr, rr = u, v, r
        else:
            ur, vr, rr = u - ucb, v - vcb, r
        mv0 = m[0] * ur + m[1] * vr + m[2] * rr
        mv1 = m[3] * ur + m[4] * vr + m[5] * rr
        au, av, ar = abs(ur), abs(vr), abs(rr)
        h0 = -mv1 * rr + (dl[0] + dq[0] * au) * ur + (dl[1] + dq[1] * av) * vr + (dl[2] + dq[2] * ar) * rr
        h1 = mv0 * rr + (dl[3] + dq[3] * au) * ur + (dl[4] + dq[4] * av) * vr + (dl[5] + dq[5] * ar) * rr
        h2 = (mv1 * ur - mv0 * vr + (dl[6] + dq[6] * au) * ur + (dl[7] + dq[7] * av) * vr
              + (dl[8] + dq[8] * ar) * rr)
        b0, b1, b2 = fx - h0, fy - h1, fn - h2
        mi = self.minv
        out[0] = c * u - s * v
        out[1] = s * u + c * v
        out[2] = r
        out[3] = mi[0] * b0 + mi[1] * b1 + mi[2] * b2
        out[4] = mi[3] * b0 + mi[4] * b1 + mi[5] * b2
        out[5] = mi[6] * b0 + mi[7] * b1 + mi[8] * b2

    def _rk4(self, tau, dd):
        dt = self.dt
        x0 = self.eta + self.nu
        k1 = [0.0] * 6
        k2 = [0.0] * 6
        k3 = [0.0] * 6
        k4 = [0.0] * 6
        self._rhs(x0, tau, dd, k1)
        self._rhs([x0[i] + 0.5 * dt * k1[i] for i in range(6)], tau, dd, k2)
        self._rhs([x0[i] + 0.5 * dt * k2[i] for i in range(6)], tau, dd, k3)
        self._rhs([x0[i] + dt * k3[i] for i in range(6)], tau, dd, k4)
        x1 = [x0[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) for i in range(6)]
        for i in range(6):
            if not math.isfinite(x1[i]):
                return False
        self.eta = [x1[0], x1[1], wrap(x1[2])]
        self.nu = [x1[3], x1[4], x1[5]]
        return True

    # -- control -------------------------------------------------------------

    def step(self, k, t):
        """Advance one control step; returns the residual, NaN on blow-up."""
        dd = self.d[k].tolist()
        row = self.log[k]
        eta, nu = self.eta, self.nu
        m = self.m
        psi = eta[2]
        c = math.cos(psi)
        s = math.sin(psi)
        e0 = self.eta_d[0] - eta[0]
        e1 = self.eta_d[1] - eta[1]
        e2 = wrap(self.eta_d[2] - psi)
        w0 = self.eta_d_dot[0] + self.a1[0] / self.g1[0] * e0
        w1 = self.eta_d_dot[1] + self.a1[1] / self.g1[1] * e1
        w2 = self.eta_d_dot[2] + self.a1[2] / self.g1[2] * e2
        al0 = c * w0 + s * w1
        al1 = -s * w0 + c * w1
        al2 = w2
        en0, en1, en2 = al0 - nu[0], al1 - nu[1], al2 - nu[2]
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
            f = self.alpha_dot_f
            if self.has_prev:
                gain = self.dt / (self.tau_f + self.dt)
                f[0] += gain * ((al0 - self.alpha_prev[0]) / self.dt - f[0])
                f[1] += gain * ((al1 - self.alpha_prev[1]) / self.dt - f[1])
                f[2] += gain * ((al2 - self.alpha_prev[2]) / self.dt - f[2])
            self.alpha_prev = [al0, al1, al2]
            self.has_prev = True
            ad0, ad1, ad2 = f[0], f[1], f[2]
        # tau_c = A2 e_nu + J^T Gamma1 e_eta + M alpha_dot + (C(nu) + D(nu)) alpha + g + d_hat
        ge0, ge1, ge2 = self.g1[0] * e0, self.g1[1] * e1, self.g1[2] * e2
        mv0 = m[0] * nu[0] + m[1] * nu[1] + m[2] * nu[2]
        mv1 = m[3] * nu[0] + m[4] * nu[1] + m[5] * nu[2]
        dl, dq = self.dl, self.dq
        au, av, ar = abs(nu[0]), abs(nu[1]), abs(nu[2])
        cd0 = (-mv1 * al2 + (dl[0] + dq[0] * au) * al0 + (dl[1] + dq[1] * av) * al1
               + (dl[2] + dq[2] * ar) * al2)
        cd1 = (mv0 * al2 + (dl[3] + dq[3] * au) * al0 + (dl[4] + dq[4] * av) * al1
               + (dl[5] + dq[5] * ar) * al2)
        cd2 = (mv1 * al0 - mv0 * al1 + (dl[6] + dq[6] * au) * al0 + (dl[7] + dq[7] * av) * al1
               + (dl[8] + dq[8] * ar) * al2)
        dh = self.d_hat
        kap = self.kappa
        tc0 = (self.a2[0] * en0 + c * ge0 + s * ge1 + m[0] * ad0 + m[1] * ad1 + m[2] * ad2 + cd0
               + self.g[0] + dh[0] * math.tanh(kap * dh[0] * en0 / self.eps[0]))
        tc1 = (self.a2[1] * en1 - s * ge0 + c * ge1 + m[3] * ad0 + m[4] * ad1 + m[5] * ad2 + cd1
               + self.g[1] + dh[1] * math.tanh(kap * dh[1] * en1 / self.eps[1]))
        tc2 = (self.a2[2] * en2 + ge2 + m[6] * ad0 + m[7] * ad1 + m[8] * ad2 + cd2
               + self.g[2] + dh[2] * math.tanh(kap * dh[2] * en2 / self.eps[2]))
        if not (math.isfinite(tc0) and math.isfinite(tc1) and math.isfinite(tc2)):
            return math.nan
        self.tau_c = [tc0, tc1, tc2]
        res = math.sqrt(e0 * e0 + e1 * e1 + self.c1 * e2 * e2)

        row[0] = t
        row[1], row[2], row[3] = eta[0], eta[1], eta[2]
        row[4], row[5], row[6] = nu[0], nu[1], nu[2]
        row[7], row[8], row[9] = e0, e1, e2
        row[10], row[11], row[12] = en0, en1, en2
        row[13] = res
        row[14], row[15], row[16] = tc0, tc1, tc2
        row[36], row[37], row[38] = dh[0], dh[1], dh[2]

        if not self.freeze:
            dh0 = dh[0] + en0 / self.g2[0] * self.dt
            dh1 = dh[1] + en1 / self.g2[1] * self.dt
            dh2 = dh[2] + en2 / self.g2[2] * self.dt
            cap = self.cap
            dh0 = min(max(dh0, -cap[0]), cap[0])
            dh1 = min(max(dh1, -cap[1]), cap[1])
            dh2 = min(max(dh2, -cap[2]), cap[2])
            self.d_hat = [dh0, dh1, dh2]

        p = self.alloc
        tc = self.tconf
        fmax = self.f_max
        tau0 = tau1 = tau2 = 0.0
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
        row[17], row[18], row[19] = tau0, tau1, tau2

        if not self._rk4((tau0, tau1, tau2), (dd[0], dd[1], dd[2])):
            return math.nan
        return res
