"""High-precision reference values for the kernel, value and CE tests.

Formulas are evaluated directly with mpmath (no exp-scaling tricks). The
resolvent is obtained a second way, by integrating the Volterra equation as a
linear ODE, so the frozen k values do not rely on the exponential formula.
Run: python3 tests/oracles/kernels_oracle.py > tests/oracles/frozen_values.json
"""
import json

import mpmath as mp

mp.mp.dps = 40


def model(s0=0.0, mu=0.1, sigma=0.3, lam=0.01, alpha=0.03, T=10.0, delta=1.0, phi0=0.0):
    return dict(s0=mp.mpf(s0), mu=mp.mpf(mu), sigma=mp.mpf(sigma), lam=mp.mpf(lam),
                alpha=mp.mpf(alpha), T=mp.mpf(T), delta=mp.mpf(delta), phi0=mp.mpf(phi0))


class Kernels:
    def __init__(self, rho, T, delta, lam):
        self.rho, self.T, self.delta, self.lam = mp.mpf(rho), mp.mpf(T), mp.mpf(delta), mp.mpf(lam)
        self.sr = mp.sqrt(self.rho)

    def m(self, s):
        return min(mp.mpf(s), self.delta)

    def upsilon(self, tau):
        th = mp.tanh(self.sr * max(mp.mpf(tau) - self.delta, 0))
        y = self.delta * self.sr * th
        return y / (1 + y)

    def urgency(self, tau):
        th = mp.tanh(self.sr * max(mp.mpf(tau) - self.delta, 0))
        return self.sr * th / (1 + self.delta * self.sr * th)

    def a_hat(self, t, alpha):
        return alpha * mp.cosh(self.sr * (self.T - t)) / mp.cosh(self.sr * self.T)

    def A_hat(self):
        return self.lam * self.sr * mp.tanh(self.sr * self.T) / 2

    def l_hat(self, t, s):
        m = self.m(s)
        return self.rho * m * mp.cosh(self.sr * (self.T - t)) / (
            mp.cosh(self.sr * (self.T - s)) + self.sr * m * mp.sinh(self.sr * (self.T - s)))

    def L_hat(self, s):
        m = self.m(s)
        return m / (1 + m * self.sr * mp.tanh(self.sr * (self.T - s))) / (2 * self.lam)

    def k_formula(self, t, s):
        pts = sorted({mp.mpf(s), mp.mpf(t)} | ({self.delta} if s < self.delta < t else set()))
        e = mp.quad(lambda u: self.l_hat(u, u), pts)
        return -mp.exp(e) * self.l_hat(t, s)

    def k_volterra(self, t, s):
        # l(t, u) = c(t) d(u); y(t) = int_s^t d k, k = -l(t, s) + c(t) y.
        c = lambda x: mp.cosh(self.sr * (self.T - x))
        d = lambda u: self.l_hat(self.T, u) / c(self.T)
        rhs = lambda x, y: d(x) * (-self.l_hat(x, s) + c(x) * y)
        # The Taylor integrator needs a smooth right-hand side: restart at the kink.
        x0, y0 = mp.mpf(s), mp.mpf(0)
        if s < self.delta < t:
            y0 = mp.odefun(rhs, x0, y0)(self.delta)
            x0 = self.delta
        y = mp.odefun(rhs, x0, y0)(mp.mpf(t))
        return -self.l_hat(t, s) + c(t) * y

    def f_T(self, s):
        th = mp.tanh(self.sr * max(self.T - self.delta, 0))
        return s * self.sr * th / (1 + self.delta * self.sr * th)

    def info_integral(self):
        f = lambda s: self.rho * self.m(s) / (1 + self.m(s) * self.sr * mp.tanh(self.sr * (self.T - s)))
        pts = [0, self.delta, self.T] if self.delta < self.T else [0, self.T]
        return mp.quad(f, pts)


def rho(p):
    return p["alpha"] * p["sigma"] ** 2 / p["lam"]


def primal(p):
    k = Kernels(rho(p), p["T"], p["delta"], p["lam"])
    gap = p["phi0"] - p["mu"] / (p["alpha"] * p["sigma"] ** 2)
    unwind = p["alpha"] * p["lam"] * k.sr / (2 / mp.tanh(k.sr * p["T"])) * gap ** 2
    premium = p["mu"] ** 2 * p["T"] / (2 * p["sigma"] ** 2)
    return -mp.exp(unwind - premium) * mp.exp(-k.info_integral() / 2)


def ce(p):
    k = Kernels(rho(p), p["T"], p["delta"], p["lam"])
    return k.info_integral() / (2 * p["alpha"])


def f(x):
    return float(x)


def main():
    out = {}
    ref = model()
    orig = Kernels(rho(ref), ref["T"], ref["delta"], ref["lam"])
    red_lam = ref["lam"] / ref["sigma"]
    red = Kernels(rho(ref), ref["T"], ref["delta"], red_lam)
    alpha_r = ref["alpha"] * ref["sigma"]

    out["rho"] = f(rho(ref))
    out["upsilon"] = {str(t): f(orig.upsilon(t)) for t in (10, 5, 1.5, 1, 0.5)}
    out["urgency"] = {str(t): f(orig.urgency(t)) for t in (10, 3, 1.2)}
    out["a_hat_reduced"] = {str(t): f(red.a_hat(t, alpha_r)) for t in (0, 2.5, 10)}
    out["A_hat_reduced"] = f(red.A_hat())
    pairs = [(2, 0.5), (5, 3), (9.5, 1), (10, 10), (7, 7)]
    out["l_hat_reduced"] = [[t, s, f(red.l_hat(t, s))] for t, s in pairs]
    out["L_hat_reduced"] = {str(s): f(red.L_hat(s)) for s in (0, 0.5, 3, 9.5, 10)}
    kv = []
    for t, s in [(2, 0.5), (5, 3), (9.5, 0.25), (6, 1.5)]:
        a, b = red.k_formula(t, s), red.k_volterra(t, s)
        assert abs(a - b) < mp.mpf("1e-25") * (1 + abs(a)), (t, s, a, b)
        kv.append([t, s, f(b)])
    out["k_hat_reduced"] = kv
    out["f_T"] = {str(s): f(orig.f_T(s)) for s in (0.5, 1.0)}
    out["primal_ref"] = f(primal(ref))
    out["ce_ref"] = f(ce(ref))
    out["ce_by_delta"] = {str(d): f(ce(model(delta=d))) for d in (0, 0.25, 0.5, 1, 2, 10, 15)}
    phi = model(phi0=5.0, mu=0.05)
    out["primal_phi0_5_mu_005"] = f(primal(phi))
    out["primal_delta0_merton"] = f(primal(model(delta=0, phi0=0.1 / (0.03 * 0.09))))
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
