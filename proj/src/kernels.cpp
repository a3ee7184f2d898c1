#include "frontrun/kernels.hpp"

#include "frontrun/errors.hpp"
#include "frontrun/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace frontrun {

namespace scaled {

double cosh_ratio(double a, double b) {
    return std::exp(a - b) * (1.0 + std::exp(-2.0 * a)) / (1.0 + std::exp(-2.0 * b));
}

double sinh_over_cosh(double a, double b) {
    return std::exp(a - b) * (-std::expm1(-2.0 * a)) / (1.0 + std::exp(-2.0 * b));
}

double sinh_ratio(double a, double b) {
    return std::exp(a - b) * std::expm1(-2.0 * a) / std::expm1(-2.0 * b);
}

}  // namespace scaled

KernelSet::KernelSet(double rho, double horizon, double delta, double lambda_impact,
                     KernelFaults faults)
    : rho_(rho),
      sqrt_rho_(std::sqrt(rho)),
      horizon_(horizon),
      delta_(delta),
      lambda_(lambda_impact),
      faults_(faults) {
    if (!(rho > 0.0) || !(horizon > 0.0) || !(delta >= 0.0) || !(lambda_impact > 0.0)) {
        throw ConfigError("KernelSet requires rho, T, Lambda > 0 and Delta >= 0");
    }
}

KernelSet KernelSet::reduced(const ModelParams& p, KernelFaults faults) {
    const ReducedParams r = reduce(p);
    return KernelSet(r.rho(), p.horizon(), p.lookahead(), r.lambda_r, faults);
}

KernelSet KernelSet::original(const ModelParams& p, KernelFaults faults) {
    return KernelSet(frontrun::rho(p), p.horizon(), p.lookahead(), p.lambda_impact(), faults);
}

double KernelSet::upsilon(double tau) const {
    const double y = delta_ * sqrt_rho_ * std::tanh(sqrt_rho_ * std::max(tau - delta_, 0.0));
    return y / (1.0 + y);
}

double KernelSet::urgency_remaining(double tau) const {
    const double th = std::tanh(sqrt_rho_ * std::max(tau - delta_, 0.0));
    return sqrt_rho_ * th / (1.0 + delta_ * sqrt_rho_ * th);
}

double KernelSet::a_hat(double t, double alpha) const {
    return alpha * scaled::cosh_ratio(sqrt_rho_ * (horizon_ - t), sqrt_rho_ * horizon_);
}

double KernelSet::a_hat_tail_integral(double s) const {
    return sqrt_rho_ * scaled::sinh_over_cosh(sqrt_rho_ * (horizon_ - s), sqrt_rho_ * horizon_);
}

double KernelSet::A_hat() const {
    return lambda_ * sqrt_rho_ * std::tanh(sqrt_rho_ * horizon_) / 2.0;
}

double KernelSet::l_hat(double t, double s) const {
    const double m = std::min(s, delta_);
    const double x_s = sqrt_rho_ * (horizon_ - s);
    return rho_ * m * scaled::cosh_ratio(sqrt_rho_ * (horizon_ - t), x_s) /
           (1.0 + sqrt_rho_ * m * std::tanh(x_s));
}

double KernelSet::L_hat(double s) const {
    const double m = std::min(s, delta_);
    return m / (1.0 + m * sqrt_rho_ * std::tanh(sqrt_rho_ * (horizon_ - s))) / (2.0 * lambda_);
}

double KernelSet::l_hat_time_factor(double t) const {
    return scaled::cosh_ratio(sqrt_rho_ * (horizon_ - t), sqrt_rho_ * horizon_);
}

double KernelSet::l_hat_source_factor(double s) const {
    const double m = std::min(s, delta_);
    const double x_s = sqrt_rho_ * (horizon_ - s);
    return rho_ * m /
           (scaled::cosh_ratio(x_s, sqrt_rho_ * horizon_) * (1.0 + sqrt_rho_ * m * std::tanh(x_s)));
}

double KernelSet::l_hat_diag_integral(double s, double t) const {
    return quad::adaptive_split([this](double u) { return l_hat(u, u); }, s, t, {delta_});
}

double KernelSet::k_hat(double t, double s) const {
    const double l = l_hat(t, s);
    if (l == 0.0) return 0.0;
    const double k = -std::exp(l_hat_diag_integral(s, t)) * l;
    return faults_.flip_k_hat_sign ? -k : k;
}

double KernelSet::resolvent_residual(double t, double s) const {
    const double conv = quad::adaptive_split(
        [this, t, s](double u) { return l_hat(t, u) * k_hat(u, s); }, s, t, {delta_});
    return k_hat(t, s) + l_hat(t, s) - conv;
}

double KernelSet::euler_lagrange_extremal(double theta, double s, double t) const {
    if (!(s < horizon_)) throw InputError("euler_lagrange_extremal: requires s < T");
    if (t < s || t > horizon_) throw InputError("euler_lagrange_extremal: requires s <= t <= T");
    return theta * scaled::sinh_ratio(sqrt_rho_ * (horizon_ - t), sqrt_rho_ * (horizon_ - s));
}

double KernelSet::f_T(double s) const {
    const double th = std::tanh(sqrt_rho_ * std::max(horizon_ - delta_, 0.0));
    return s * sqrt_rho_ * th / (1.0 + delta_ * sqrt_rho_ * th);
}

double KernelSet::f_T_unsimplified(double s) const {
    const double upper = std::min(delta_, horizon_);
    const double growth = quad::adaptive(
        [this](double u) {
            return u * rho_ / (1.0 + u * sqrt_rho_ * std::tanh(sqrt_rho_ * (horizon_ - u)));
        },
        s, upper);
    const double x_s = sqrt_rho_ * (horizon_ - s);
    const double x_d = sqrt_rho_ * std::max(horizon_ - delta_, 0.0);
    return std::exp(growth) * s * sqrt_rho_ * scaled::sinh_over_cosh(x_d, x_s) /
           (1.0 + s * sqrt_rho_ * std::tanh(x_s));
}

}  // namespace frontrun
