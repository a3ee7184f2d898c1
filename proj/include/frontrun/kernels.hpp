#pragma once

#include "frontrun/params.hpp"

namespace frontrun {

/// Test hooks for mutation testing of the verification suite.
struct KernelFaults {
    bool flip_k_hat_sign = false;
};

/// Closed-form deterministic functions of the driftless problem: the Merton
/// tracking weight, the minimizers of the deterministic dual problems and the
/// resolvent of the Volterra kernel.
///
/// All cosh/sinh quotients go through exponentially scaled forms so that
/// sqrt(rho) T up to ~700 stays finite. Kernels with a (s ^ Delta) factor
/// have a kink at s = Delta; integrals over them are split there.
class KernelSet {
public:
    KernelSet(double rho, double horizon, double delta, double lambda_impact,
              KernelFaults faults = {});

    /// Kernels of the reduced problem (Lambda' = Lambda / sigma).
    static KernelSet reduced(const ModelParams& p, KernelFaults faults = {});
    /// Kernels with the original Lambda (alpha = rho Lambda is then alpha sigma^2).
    static KernelSet original(const ModelParams& p, KernelFaults faults = {});

    double rho() const { return rho_; }
    double sqrt_rho() const { return sqrt_rho_; }
    double horizon() const { return horizon_; }
    double delta() const { return delta_; }
    double lambda() const { return lambda_; }
    double alpha() const { return rho_ * lambda_; }

    /// Weight on the window average, in [0, 1). Zero iff tau <= Delta or Delta = 0.
    double upsilon(double tau) const;
    /// Upsilon(tau) / Delta, with the Delta -> 0 limit sqrt(rho) tanh(sqrt(rho) tau).
    double urgency_remaining(double tau) const;

    double a_hat(double t) const { return a_hat(t, alpha()); }
    double a_hat(double t, double alpha) const;
    /// int_s^T a_hat(u) / Lambda du.
    double a_hat_tail_integral(double s) const;
    /// Minimum value of the a-problem per Phi0^2 (with a minus sign).
    double A_hat() const;

    double l_hat(double t, double s) const;
    double L_hat(double s) const;

    /// l_hat(t, s) = time_factor(t) * source_factor(s).
    double l_hat_time_factor(double t) const;
    double l_hat_source_factor(double s) const;

    /// int_s^t l_hat(u, u) du by adaptive quadrature.
    double l_hat_diag_integral(double s, double t) const;
    double k_hat(double t, double s) const;
    /// k + l - int_s^t l(t,u) k(u,s) du; vanishes for the true resolvent.
    double resolvent_residual(double t, double s) const;

    /// Solution of g'' = rho g with g(s) = Theta, g(T) = 0. Throws InputError
    /// when s >= T.
    double euler_lagrange_extremal(double theta, double s, double t) const;

    /// Boundary weight of the initial-rate formula, 0 <= s <= Delta ^ T.
    double f_T(double s) const;
    /// Same quantity via the exponential-integral form (quadrature inside).
    double f_T_unsimplified(double s) const;

private:
    double rho_;
    double sqrt_rho_;
    double horizon_;
    double delta_;
    double lambda_;
    KernelFaults faults_;
};

namespace scaled {

// Quotients of hyperbolic functions for nonnegative arguments.
double cosh_ratio(double a, double b);     // cosh(a) / cosh(b)
double sinh_over_cosh(double a, double b);  // sinh(a) / cosh(b)
double sinh_ratio(double a, double b);     // sinh(a) / sinh(b), b > 0

}  // namespace scaled

}  // namespace frontrun
