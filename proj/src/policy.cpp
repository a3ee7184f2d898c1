#include "frontrun/policy.hpp"

#include "frontrun/errors.hpp"
#include "frontrun/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace frontrun {

namespace {

constexpr int kCellNodes = 12;

double trapezoid(std::span<const double> y, double dt) {
    if (y.size() < 2) return 0.0;
    double acc = 0.5 * (y.front() + y.back());
    for (std::size_t i = 1; i + 1 < y.size(); ++i) acc += y[i];
    return acc * dt;
}

std::size_t grid_count(double span, double dt, const char* what) {
    const double r = span / dt;
    const double n = std::round(r);
    if (std::abs(r - n) > 1e-6) {
        throw InputError(std::string(what) + ": interval is not a whole number of grid steps");
    }
    return static_cast<std::size_t>(n);
}

class InformedPolicy final : public Policy {
public:
    InformedPolicy(const ModelParams& p, const TimeGrid& g)
        : Policy(g.lookahead_steps),
          kernels_(KernelSet::original(p)),
          lambda_(p.lambda_impact()),
          merton_ratio_(p.merton_ratio()) {}

    std::unique_ptr<Policy> clone() const override { return std::make_unique<InformedPolicy>(*this); }

    void begin_path(const TimeGrid& g) override {
        horizon_ = g.horizon;
        integrator_.reset(g);
    }

    RateTerms rate(const StepContext& ctx) override {
        const double tau = horizon_ - ctx.t;
        RateTerms r;
        r.upsilon = kernels_.upsilon(tau);
        const double s_t = ctx.view.front();
        const double s_end = ctx.view.back();
        double integral = 0.0;
        if (lookahead_steps() > 0) integral = integrator_.window_integral(ctx.view, lookahead_steps());
        r.s_bar = r.upsilon == 0.0 ? s_end
                                   : (1.0 - r.upsilon) * s_end + r.upsilon * integral / kernels_.delta();
        r.frontrun = (r.s_bar - s_t) / lambda_;
        r.merton = kernels_.urgency_remaining(tau) * (merton_ratio_ - ctx.position);
        return r;
    }

private:
    KernelSet kernels_;
    double lambda_;
    double merton_ratio_;
    double horizon_ = 0.0;
    WindowIntegrator integrator_;
};

class UninformedPolicy final : public Policy {
public:
    explicit UninformedPolicy(const ModelParams& p)
        : Policy(0),
          kernels_(rho(p), p.horizon(), 0.0, p.lambda_impact()),
          merton_ratio_(p.merton_ratio()) {}

    std::unique_ptr<Policy> clone() const override { return std::make_unique<UninformedPolicy>(*this); }

    RateTerms rate(const StepContext& ctx) override {
        RateTerms r;
        r.s_bar = ctx.view.front();
        r.merton = kernels_.urgency_remaining(kernels_.horizon() - ctx.t) * (merton_ratio_ - ctx.position);
        return r;
    }

private:
    KernelSet kernels_;
    double merton_ratio_;
};

// Benchmark only: chases the plain window mean and ignores inventory risk.
class NaiveFrontrunPolicy final : public Policy {
public:
    NaiveFrontrunPolicy(const ModelParams& p, const TimeGrid& g)
        : Policy(g.lookahead_steps), lambda_(p.lambda_impact()), delta_(p.lookahead()) {}

    std::unique_ptr<Policy> clone() const override {
        return std::make_unique<NaiveFrontrunPolicy>(*this);
    }

    void begin_path(const TimeGrid& g) override { integrator_.reset(g); }

    RateTerms rate(const StepContext& ctx) override {
        RateTerms r;
        r.upsilon = 1.0;
        const double s_t = ctx.view.front();
        r.s_bar = lookahead_steps() > 0 ? integrator_.window_integral(ctx.view, lookahead_steps()) / delta_
                                        : s_t;
        r.frontrun = (r.s_bar - s_t) / lambda_;
        return r;
    }

private:
    double lambda_;
    double delta_;
    WindowIntegrator integrator_;
};

class CustomPolicy final : public Policy {
public:
    CustomPolicy(CustomRate fn, std::size_t lookahead_steps)
        : Policy(lookahead_steps), fn_(std::move(fn)) {}

    std::unique_ptr<Policy> clone() const override { return std::make_unique<CustomPolicy>(*this); }

    RateTerms rate(const StepContext& ctx) override {
        RateTerms r;
        r.s_bar = ctx.view.front();
        r.frontrun = fn_(ctx);
        return r;
    }

private:
    CustomRate fn_;
};

template <class Sink>
double rollout(std::span<const double> path, const ModelParams& p, const TimeGrid& g,
               Policy& policy, AccessAudit* audit, Sink&& sink) {
    if (path.size() != g.steps + 1) throw InputError("rollout: path length must be N + 1");
    policy.begin_path(g);
    const std::size_t M = policy.lookahead_steps();
    const double dt = g.dt();
    const double s_T = path[g.steps];
    double position = p.phi0();
    double trade = 0.0;
    double cost = 0.0;
    for (std::size_t k = 0; k < g.steps; ++k) {
        const LookaheadView view = lookahead_view(path, k, M, audit);
        const StepContext ctx{k, g.time(k), view, position};
        const RateTerms terms = policy.rate(ctx);
        const double phi = terms.rate();
        sink(k, terms, position);
        trade += phi * (s_T - path[k]);
        cost += phi * phi;
        position += phi * dt;
    }
    sink(g.steps, RateTerms{}, position);
    return p.phi0() * (s_T - path[0]) + trade * dt - 0.5 * p.lambda_impact() * cost * dt;
}

}  // namespace

double s_bar(const PolicyInputs& in, const KernelSet& kernels) {
    if (in.price_window.empty() || !(in.dt > 0.0)) throw InputError("s_bar: empty window or bad dt");
    const double T = kernels.horizon();
    const double delta = kernels.delta();
    const double end = std::min(in.t + delta, T);
    const std::size_t cells = grid_count(end - in.t, in.dt, "s_bar");
    if (in.price_window.size() != cells + 1) {
        throw InputError("s_bar: window must cover [t, (t+Delta) ^ T] on the grid");
    }
    const double ups = kernels.upsilon(T - in.t);
    const double s_end = in.price_window.back();
    if (ups == 0.0) return s_end;
    const double integral = trapezoid(in.price_window, in.dt) + (in.t + delta - end) * s_end;
    return (1.0 - ups) * s_end + ups * integral / delta;
}

RateTerms feedback_terms(const PolicyInputs& in, const ModelParams& p) {
    const KernelSet kernels = KernelSet::original(p);
    RateTerms r;
    r.upsilon = kernels.upsilon(p.horizon() - in.t);
    r.s_bar = s_bar(in, kernels);
    r.frontrun = (r.s_bar - in.price_window.front()) / p.lambda_impact();
    r.merton = kernels.urgency_remaining(p.horizon() - in.t) * (p.merton_ratio() - in.position);
    return r;
}

double feedback_rate(const PolicyInputs& in, const ModelParams& p) {
    return feedback_terms(in, p).rate();
}

double urgency(double t, const ModelParams& p) {
    return KernelSet::original(p).urgency_remaining(p.horizon() - t);
}

double initial_rate_closed_form(std::span<const double> prefix, double dt, const ModelParams& p) {
    const double T = p.horizon();
    const double delta = p.lookahead();
    const std::size_t cells = grid_count(std::min(delta, T), dt, "initial_rate_closed_form");
    if (prefix.size() != cells + 1) throw InputError("initial_rate_closed_form: prefix must cover [0, Delta ^ T]");
    const double sr = std::sqrt(rho(p));
    const double th = std::tanh(sr * std::max(T - delta, 0.0));
    // sqrt(rho) / (coth x + Delta sqrt(rho)) written via tanh so that x = 0 is finite.
    const double window_weight = sr * th / (1.0 + delta * sr * th);
    const double end_weight = 1.0 / (1.0 + delta * sr * th);
    const double lam = p.lambda_impact();
    return end_weight * prefix.back() / lam + window_weight * trapezoid(prefix, dt) / lam -
           prefix.front() / lam + window_weight * (p.merton_ratio() - p.phi0());
}

std::string to_string(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::informed: return "informed";
        case PolicyKind::uninformed: return "uninformed";
        case PolicyKind::naive_frontrun: return "naive_frontrun";
        case PolicyKind::custom: return "custom";
    }
    return "unknown";
}

PolicyKind policy_kind_from_string(const std::string& name) {
    if (name == "informed") return PolicyKind::informed;
    if (name == "uninformed") return PolicyKind::uninformed;
    if (name == "naive_frontrun") return PolicyKind::naive_frontrun;
    if (name == "custom") return PolicyKind::custom;
    throw ConfigError("unknown policy '" + name + "'");
}

void WindowIntegrator::reset(const TimeGrid& grid) {
    steps_ = grid.steps;
    dt_ = grid.dt();
    cumulative_.assign(steps_ + 1, 0.0);
    known_ = 0;
    have_first_ = false;
}

double WindowIntegrator::window_integral(const LookaheadView& view, std::size_t lookahead_steps) {
    const std::size_t first = view.first_index();
    const std::size_t last = view.last_index();
    if (!have_first_) {
        if (first != 0) throw InputError("WindowIntegrator: first call must be at k = 0");
        last_value_ = view[0];
        have_first_ = true;
    }
    if (first > known_) throw InputError("WindowIntegrator: steps were skipped");
    while (known_ < last) {
        const double next = view[known_ + 1 - first];
        cumulative_[known_ + 1] = cumulative_[known_] + 0.5 * dt_ * (last_value_ + next);
        last_value_ = next;
        ++known_;
    }
    const double overhang = static_cast<double>(first + lookahead_steps - last) * dt_;
    return cumulative_[last] - cumulative_[first] + overhang * view.back();
}

std::unique_ptr<Policy> make_policy(PolicyKind kind, const ModelParams& p, const TimeGrid& g) {
    switch (kind) {
        case PolicyKind::informed: return std::make_unique<InformedPolicy>(p, g);
        case PolicyKind::uninformed: return std::make_unique<UninformedPolicy>(p);
        case PolicyKind::naive_frontrun: return std::make_unique<NaiveFrontrunPolicy>(p, g);
        case PolicyKind::custom: break;
    }
    throw ConfigError("custom policies are built with make_custom_policy");
}

std::unique_ptr<Policy> make_custom_policy(CustomRate rate, std::size_t lookahead_steps) {
    return std::make_unique<CustomPolicy>(std::move(rate), lookahead_steps);
}

StrategyTrace run_policy(std::span<const double> path, const ModelParams& p, const TimeGrid& g,
                         Policy& policy, AccessAudit* audit) {
    StrategyTrace tr;
    const std::size_t n = g.steps;
    tr.phi.resize(n);
    tr.Phi.resize(n + 1);
    tr.s_bar.resize(n);
    tr.upsilon.resize(n);
    tr.frontrun.resize(n);
    tr.merton.resize(n);
    rollout(path, p, g, policy, audit, [&](std::size_t k, const RateTerms& r, double position) {
        tr.Phi[k] = position;
        if (k == n) return;
        tr.phi[k] = r.rate();
        tr.s_bar[k] = r.s_bar;
        tr.upsilon[k] = r.upsilon;
        tr.frontrun[k] = r.frontrun;
        tr.merton[k] = r.merton;
    });
    tr.V_T = pnl(tr.phi, path, p, g, &tr.gain, &tr.impact_cost);
    return tr;
}

double rollout_pnl(std::span<const double> path, const ModelParams& p, const TimeGrid& g,
                   Policy& policy) {
    return rollout(path, p, g, policy, nullptr, [](std::size_t, const RateTerms&, double) {});
}

PiecewiseLinearPath::PiecewiseLinearPath(std::span<const double> samples, double dt)
    : samples_(samples.begin(), samples.end()), cumulative_(samples.size(), 0.0), dt_(dt) {
    if (samples_.size() < 2) throw InputError("PiecewiseLinearPath: need two samples");
    for (std::size_t j = 1; j < samples_.size(); ++j) {
        cumulative_[j] = cumulative_[j - 1] + 0.5 * dt_ * (samples_[j - 1] + samples_[j]);
    }
}

double PiecewiseLinearPath::value(double t) const {
    const std::size_t last = samples_.size() - 1;
    const double x = std::clamp(t / dt_, 0.0, static_cast<double>(last));
    const std::size_t j = std::min(static_cast<std::size_t>(x), last - 1);
    const double frac = x - static_cast<double>(j);
    return samples_[j] + frac * (samples_[j + 1] - samples_[j]);
}

double PiecewiseLinearPath::primitive(double t) const {
    const std::size_t last = samples_.size() - 1;
    const double x = std::clamp(t / dt_, 0.0, static_cast<double>(last));
    const std::size_t j = std::min(static_cast<std::size_t>(x), last - 1);
    const double u = (x - static_cast<double>(j)) * dt_;
    const double slope = (samples_[j + 1] - samples_[j]) / dt_;
    return cumulative_[j] + samples_[j] * u + 0.5 * slope * u * u;
}

double PiecewiseLinearPath::integral(double a, double b) const { return primitive(b) - primitive(a); }

std::vector<double> continuous_feedback_positions(std::span<const double> path,
                                                  const ModelParams& p, const TimeGrid& g,
                                                  int substeps) {
    if (path.size() != g.steps + 1) throw InputError("continuous_feedback_positions: path length");
    const PiecewiseLinearPath s(path, g.dt());
    const KernelSet kernels = KernelSet::original(p);
    const double T = p.horizon();
    const double delta = p.lookahead();
    const double s_T = path.back();
    const double lam = p.lambda_impact();
    const double target = p.merton_ratio();

    auto rate = [&](double t, double position) {
        const double tau = T - t;
        const double ups = kernels.upsilon(tau);
        const double end = std::min(t + delta, T);
        const double s_end = s.value(end);
        double sb = s_end;
        if (ups != 0.0) sb = (1.0 - ups) * s_end + ups * (s.integral(t, end) + (t + delta - end) * s_T) / delta;
        return (sb - s.value(t)) / lam + kernels.urgency_remaining(tau) * (target - position);
    };

    std::vector<double> positions(g.steps + 1);
    positions[0] = p.phi0();
    const double h = g.dt() / substeps;
    double phi_pos = p.phi0();
    for (std::size_t j = 0; j < g.steps; ++j) {
        double t = g.time(j);
        for (int i = 0; i < substeps; ++i) {
            const double k1 = rate(t, phi_pos);
            const double k2 = rate(t + 0.5 * h, phi_pos + 0.5 * h * k1);
            const double k3 = rate(t + 0.5 * h, phi_pos + 0.5 * h * k2);
            const double k4 = rate(t + h, phi_pos + h * k3);
            phi_pos += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
            t += h;
        }
        positions[j + 1] = phi_pos;
    }
    return positions;
}

OpenLoopOperator::OpenLoopOperator(const ModelParams& p, const TimeGrid& g)
    : kernels_(KernelSet::reduced(p)),
      grid_(g),
      s0_(p.s0()),
      sigma_(p.sigma()),
      phi0_r_(reduce(p).phi0_r) {
    const std::size_t n = g.steps;
    const double h = g.dt();
    const double T = kernels_.horizon();
    const KernelSet& ks = kernels_;

    // Resolvent factorization k(s, r) = -p(s) q(r) with
    // p(s) = exp(E(s)) l_time(s), q(r) = exp(-E(r)) l_source(r), E(s) = int_0^s l(u, u) du.
    std::vector<double> e_node(n + 1, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        e_node[j + 1] = e_node[j] + quad::adaptive([&](double u) { return ks.l_hat(u, u); }, g.time(j), g.time(j + 1));
    }
    auto exponent = [&](double s, std::size_t j) {
        return e_node[j] + quad::adaptive([&](double u) { return ks.l_hat(u, u); }, g.time(j), s);
    };
    auto weight_G = [&](double s) {
        return 1.0 - quad::adaptive([&](double u) { return ks.l_hat(u, s); }, s, T);
    };
    auto p_fac = [&](double s, std::size_t j) { return std::exp(exponent(s, j)) * ks.l_hat_time_factor(s); };
    auto q_fac = [&](double r, std::size_t j) { return std::exp(-exponent(r, j)) * ks.l_hat_source_factor(r); };

    w_dx_.resize(n);
    w_q_.resize(n);
    w_gp_.resize(n);
    std::vector<double> drift_cell(n);
    double q_drift = 0.0;  // int_0^{t_j} q(r) a_hat(r) dr
    for (std::size_t j = 0; j < n; ++j) {
        const double a = g.time(j);
        const double b = g.time(j + 1);
        double wg = 0.0, wgp = 0.0, wgpq = 0.0, wq = 0.0, drift = 0.0, drift_inner = 0.0, q_drift_cell = 0.0;
        for (const auto& nd : quad::gauss_legendre_nodes(a, b, kCellNodes)) {
            const double G = weight_G(nd.x);
            const double gp = G * p_fac(nd.x, j);
            double q_part = 0.0;
            double qa_part = 0.0;
            for (const auto& in : quad::gauss_legendre_nodes(a, nd.x, kCellNodes)) {
                const double q = q_fac(in.x, j);
                q_part += in.w * q;
                qa_part += in.w * q * ks.a_hat(in.x);
            }
            wg += nd.w * G;
            wgp += nd.w * gp;
            wgpq += nd.w * gp * q_part;
            drift += nd.w * G * ks.a_hat(nd.x);
            drift_inner += nd.w * gp * (q_drift + qa_part);
            const double q = q_fac(nd.x, j);
            wq += nd.w * q;
            q_drift_cell += nd.w * q * ks.a_hat(nd.x);
        }
        w_dx_[j] = (wg + wgpq) / h;
        w_q_[j] = wq / h;
        w_gp_[j] = wgp;
        drift_cell[j] = drift + drift_inner;
        q_drift += q_drift_cell;
    }

    const double a_total = quad::adaptive([&](double u) { return ks.a_hat(u); }, 0.0, T);
    drift_term_.resize(n + 1);
    double acc = 0.0;
    std::size_t done = 0;
    for (std::size_t k = 0; k <= n; ++k) {
        const std::size_t end = g.window_end(k);
        while (done < end) acc += drift_cell[done++];
        drift_term_[k] = acc - a_total;
    }
}

double OpenLoopOperator::operator_on_path(std::size_t k, std::span<const double> w) const {
    const std::size_t end = grid_.window_end(k);
    if (w.size() < end + 1) throw InputError("OpenLoopOperator: path shorter than the information window");
    double acc = 0.0;
    double q = 0.0;
    for (std::size_t j = 0; j < end; ++j) {
        const double dw = w[j + 1] - w[j];
        acc += dw * w_dx_[j] + q * w_gp_[j];
        q += dw * w_q_[j];
    }
    return acc;
}

double OpenLoopOperator::rate(std::size_t k, std::span<const double> prices) const {
    if (k >= grid_.steps) throw InputError("OpenLoopOperator: k must be < N");
    const std::size_t end = grid_.window_end(k);
    if (prices.size() < end + 1) throw InputError("OpenLoopOperator: path shorter than the information window");
    std::vector<double> w(end + 1);
    for (std::size_t j = 0; j <= end; ++j) w[j] = (prices[j] - s0_) / sigma_;
    return (operator_on_path(k, w) - w[k] + phi0_r_ * drift_term_[k]) / kernels_.lambda();
}

double open_loop_rate(double t, std::span<const double> prices, const ModelParams& p,
                      const TimeGrid& g) {
    const double x = t / g.dt();
    const double k = std::round(x);
    if (std::abs(x - k) > 1e-9 * std::max(1.0, x)) throw InputError("open_loop_rate: t must be a grid time");
    return OpenLoopOperator(p, g).rate(static_cast<std::size_t>(k), prices);
}

}  // namespace frontrun
