#pragma once

#include "frontrun/params.hpp"

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace frontrun {

/// Uniform grid t_k = k T / N with the lookahead an exact multiple M of dt.
struct TimeGrid {
    std::size_t steps = 0;            // N
    double horizon = 0.0;             // T
    std::size_t lookahead_steps = 0;  // M

    double dt() const { return horizon / static_cast<double>(steps); }
    double time(std::size_t k) const { return horizon * static_cast<double>(k) / static_cast<double>(steps); }
    /// Index of (t_k + Delta) ^ T.
    std::size_t window_end(std::size_t k) const { return std::min(k + lookahead_steps, steps); }
};

/// Throws ConfigError unless N >= 1 and Delta N / T is an integer (to 1e-9).
TimeGrid make_grid(const ModelParams& p, std::size_t steps);

/// Per-path stream seed; a bijective mix of (seed, index), so streams do not
/// depend on how paths are scheduled.
std::uint64_t path_seed(std::uint64_t seed, std::uint64_t path_index);

/// Fills out[0..N] with S_{t_k}; increments are N(mu dt, sigma^2 dt).
void generate_path(const ModelParams& p, const TimeGrid& g, std::uint64_t seed,
                   std::uint64_t path_index, std::span<double> out);

struct PathEnsemble {
    ModelParams params;
    TimeGrid grid;
    std::uint64_t seed = 0;
    std::size_t n_paths = 0;
    std::vector<double> prices;  // row-major, n_paths x (N + 1)

    std::span<const double> path(std::size_t p) const {
        return {prices.data() + p * (grid.steps + 1), grid.steps + 1};
    }
};

PathEnsemble simulate(const ModelParams& p, std::size_t n_paths, std::size_t steps,
                      std::uint64_t seed, unsigned workers = 1);

/// Doubles the resolution of a path by Brownian-bridge midpoint insertion;
/// the coarse samples are kept, so refinements share one limiting path.
std::vector<double> refine_path(std::span<const double> coarse, double sigma, double dt_coarse,
                                std::mt19937_64& rng);

/// Records reads through LookaheadView: max_lead is the largest offset read
/// ahead of the view's first index (the current time step).
struct AccessAudit {
    std::size_t reads = 0;
    std::size_t max_lead = 0;
};

/// Read-only slice prices[k .. (k+M) ^ N]; there is no way to reach past the
/// end of the slice through a view.
class LookaheadView {
public:
    LookaheadView(std::span<const double> window, std::size_t first_index,
                  AccessAudit* audit = nullptr)
        : window_(window), first_(first_index), audit_(audit) {}

    std::size_t size() const { return window_.size(); }
    std::size_t first_index() const { return first_; }
    std::size_t last_index() const { return first_ + window_.size() - 1; }

    /// Throws InputError when i >= size().
    double operator[](std::size_t i) const;
    double front() const { return (*this)[0]; }
    double back() const { return (*this)[size() - 1]; }

private:
    std::span<const double> window_;
    std::size_t first_;
    AccessAudit* audit_;
};

LookaheadView lookahead_view(std::span<const double> path, std::size_t k, std::size_t M,
                             AccessAudit* audit = nullptr);

/// Per-path rollout record. phi[k] is held on [t_k, t_{k+1}).
struct StrategyTrace {
    std::vector<double> phi;       // N
    std::vector<double> Phi;       // N + 1
    std::vector<double> s_bar;     // N
    std::vector<double> upsilon;   // N
    std::vector<double> frontrun;  // N
    std::vector<double> merton;    // N
    double gain = 0.0;             // Phi0 (S_T - S_0) + sum phi_k (S_T - S_k) dt
    double impact_cost = 0.0;      // (Lambda / 2) sum phi_k^2 dt
    double V_T = 0.0;
};

/// Left-endpoint discretization of the trading P&L. Throws InputError when
/// the trace and path lengths disagree.
double pnl(std::span<const double> phi, std::span<const double> path, const ModelParams& p,
           const TimeGrid& g, double* gain = nullptr, double* impact_cost = nullptr);
double pnl(const StrategyTrace& trace, std::span<const double> path, const ModelParams& p,
           const TimeGrid& g);

}  // namespace frontrun
