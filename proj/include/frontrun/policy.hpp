#pragma once

#include "frontrun/kernels.hpp"
#include "frontrun/market_sim.hpp"
#include "frontrun/params.hpp"

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace frontrun {

/// What the informed trader sees at time t: S on [t, (t+Delta) ^ T] sampled
/// on the grid (first sample is S_t) and the current position.
struct PolicyInputs {
    double t = 0.0;
    std::span<const double> price_window;
    double dt = 0.0;
    double position = 0.0;
};

/// The two addends of the feedback rate plus the price average and its weight.
struct RateTerms {
    double s_bar = 0.0;
    double upsilon = 0.0;
    double frontrun = 0.0;  // (S_bar - S_t) / Lambda
    double merton = 0.0;    // urgency * (mu / (alpha sigma^2) - Phi_t)
    double rate() const { return frontrun + merton; }
};

/// Weighted price average; the window integral uses the trapezoidal rule and
/// S_u := S_T beyond the horizon. Throws InputError if the window length does
/// not match [t, (t+Delta) ^ T] on the grid.
double s_bar(const PolicyInputs& in, const KernelSet& kernels);
RateTerms feedback_terms(const PolicyInputs& in, const ModelParams& p);
double feedback_rate(const PolicyInputs& in, const ModelParams& p);

/// Speed at which the position is pulled toward the Merton ratio.
double urgency(double t, const ModelParams& p);

/// Optimal rate at t = 0 written directly in terms of S on [0, Delta ^ T].
double initial_rate_closed_form(std::span<const double> prefix, double dt, const ModelParams& p);

enum class PolicyKind { informed, uninformed, naive_frontrun, custom };

std::string to_string(PolicyKind kind);
/// Throws ConfigError for unknown names.
PolicyKind policy_kind_from_string(const std::string& name);

struct StepContext {
    std::size_t k = 0;
    double t = 0.0;
    const LookaheadView& view;
    double position = 0.0;
};

/// Stateful per-path rate rule. begin_path() is called before every rollout;
/// clone() gives an independent copy for another worker.
class Policy {
public:
    explicit Policy(std::size_t lookahead_steps) : lookahead_steps_(lookahead_steps) {}
    virtual ~Policy() = default;

    virtual std::unique_ptr<Policy> clone() const = 0;
    virtual void begin_path(const TimeGrid& /*grid*/) {}
    virtual RateTerms rate(const StepContext& ctx) = 0;

    std::size_t lookahead_steps() const { return lookahead_steps_; }

private:
    std::size_t lookahead_steps_;
};

/// Tracks the running trapezoid integral of the path over every sample that
/// has been revealed so far, so window averages cost O(1) per step.
class WindowIntegrator {
public:
    void reset(const TimeGrid& grid);
    /// int_{t_k}^{t_k + Delta} S_u du with S_u := S_T for u > T.
    double window_integral(const LookaheadView& view, std::size_t lookahead_steps);

private:
    std::vector<double> cumulative_;
    std::size_t known_ = 0;
    double last_value_ = 0.0;
    bool have_first_ = false;
    double dt_ = 0.0;
    std::size_t steps_ = 0;
};

std::unique_ptr<Policy> make_policy(PolicyKind kind, const ModelParams& p, const TimeGrid& g);

using CustomRate = std::function<double(const StepContext&)>;
std::unique_ptr<Policy> make_custom_policy(CustomRate rate, std::size_t lookahead_steps);

/// Forward-Euler rollout Phi_{k+1} = Phi_k + phi_k dt with the full trace and
/// the left-endpoint P&L. When `audit` is given, every read of the lookahead
/// view is recorded.
StrategyTrace run_policy(std::span<const double> path, const ModelParams& p, const TimeGrid& g,
                         Policy& policy, AccessAudit* audit = nullptr);

/// Same rollout, only the terminal P&L.
double rollout_pnl(std::span<const double> path, const ModelParams& p, const TimeGrid& g,
                   Policy& policy);

/// Continuous-time path reconstructed by linear interpolation of grid samples.
class PiecewiseLinearPath {
public:
    PiecewiseLinearPath(std::span<const double> samples, double dt);
    double value(double t) const;
    /// Exact integral of the interpolant over [a, b] within [0, T].
    double integral(double a, double b) const;
    double horizon() const { return dt_ * static_cast<double>(samples_.size() - 1); }

private:
    double primitive(double t) const;
    std::vector<double> samples_;
    std::vector<double> cumulative_;
    double dt_;
};

/// Positions at grid nodes from integrating the feedback equation along the
/// interpolated path with RK4 (`substeps` per cell). Unlike run_policy this
/// resolves the continuous-time strategy, which is what the open-loop form
/// describes.
std::vector<double> continuous_feedback_positions(std::span<const double> path,
                                                  const ModelParams& p, const TimeGrid& g,
                                                  int substeps = 8);

/// Optimal rate written as a functional of the realized driving path: the
/// Volterra-resolvent operator applied to W = (S - s0) / sigma and to the
/// integrated a_hat. Cell weights depend only on the grid and parameters and
/// are built once; rate() is then linear in the path.
class OpenLoopOperator {
public:
    OpenLoopOperator(const ModelParams& p, const TimeGrid& g);

    /// Rate at t_k from prices S (only samples up to (t_k + Delta) ^ T are read).
    double rate(std::size_t k, std::span<const double> prices) const;

    /// I_t(W) for the driving path in reduced units.
    double operator_on_path(std::size_t k, std::span<const double> w) const;
    /// I_t(int a_hat) - int_0^T a_hat.
    double drift_term(std::size_t k) const { return drift_term_[k]; }

private:
    KernelSet kernels_;
    TimeGrid grid_;
    double s0_;
    double sigma_;
    double phi0_r_;
    std::vector<double> w_dx_;   // int_cell G / h + int_cell G p int_{t_j}^s q / h
    std::vector<double> w_q_;    // int_cell q / h
    std::vector<double> w_gp_;   // int_cell G p
    std::vector<double> drift_term_;
};

/// Convenience wrapper; t must lie on the grid.
double open_loop_rate(double t, std::span<const double> prices, const ModelParams& p,
                      const TimeGrid& g);

}  // namespace frontrun
