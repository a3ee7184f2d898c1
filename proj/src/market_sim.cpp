#include "frontrun/market_sim.hpp"

#include "frontrun/errors.hpp"
#include "frontrun/parallel.hpp"

#include <cmath>
#include <string>

namespace frontrun {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

TimeGrid make_grid(const ModelParams& p, std::size_t steps) {
    if (steps < 1) throw ConfigError("grid needs at least one step");
    const double ratio = p.lookahead() * static_cast<double>(steps) / p.horizon();
    const double m = std::round(ratio);
    if (std::abs(ratio - m) > 1e-9 * std::max(1.0, ratio)) {
        throw ConfigError("lookahead " + std::to_string(p.lookahead()) +
                          " is not an integer multiple of dt = " +
                          std::to_string(p.horizon() / static_cast<double>(steps)));
    }
    return TimeGrid{steps, p.horizon(), static_cast<std::size_t>(m)};
}

std::uint64_t path_seed(std::uint64_t seed, std::uint64_t path_index) {
    return splitmix64(seed ^ splitmix64(path_index + 0x632be59bd9b4e019ULL));
}

void generate_path(const ModelParams& p, const TimeGrid& g, std::uint64_t seed,
                   std::uint64_t path_index, std::span<double> out) {
    if (out.size() != g.steps + 1) throw InputError("generate_path: output size must be N + 1");
    std::mt19937_64 rng(path_seed(seed, path_index));
    std::normal_distribution<double> normal(0.0, 1.0);
    const double dt = g.dt();
    const double drift = p.mu() * dt;
    const double vol = p.sigma() * std::sqrt(dt);
    out[0] = p.s0();
    for (std::size_t k = 0; k < g.steps; ++k) out[k + 1] = out[k] + drift + vol * normal(rng);
}

PathEnsemble simulate(const ModelParams& p, std::size_t n_paths, std::size_t steps,
                      std::uint64_t seed, unsigned workers) {
    PathEnsemble e{p, make_grid(p, steps), seed, n_paths, {}};
    const std::size_t width = steps + 1;
    e.prices.resize(n_paths * width);
    parallel_for(n_paths, workers, [&](std::size_t begin, std::size_t end, unsigned) {
        for (std::size_t i = begin; i < end; ++i) {
            generate_path(p, e.grid, seed, i, std::span<double>(e.prices.data() + i * width, width));
        }
    });
    return e;
}

std::vector<double> refine_path(std::span<const double> coarse, double sigma, double dt_coarse,
                                std::mt19937_64& rng) {
    if (coarse.size() < 2) throw InputError("refine_path: need at least two samples");
    std::normal_distribution<double> normal(0.0, 1.0);
    // Conditional on both endpoints the midpoint is Gaussian with variance
    // sigma^2 dt / 4 around the average; drift drops out.
    const double sd = 0.5 * sigma * std::sqrt(dt_coarse);
    std::vector<double> fine(2 * coarse.size() - 1);
    for (std::size_t k = 0; k + 1 < coarse.size(); ++k) {
        fine[2 * k] = coarse[k];
        fine[2 * k + 1] = 0.5 * (coarse[k] + coarse[k + 1]) + sd * normal(rng);
    }
    fine.back() = coarse.back();
    return fine;
}

double LookaheadView::operator[](std::size_t i) const {
    if (i >= window_.size()) {
        throw InputError("lookahead view: index " + std::to_string(first_ + i) +
                         " is beyond the information horizon " + std::to_string(last_index()));
    }
    if (audit_ != nullptr) {
        ++audit_->reads;
        audit_->max_lead = std::max(audit_->max_lead, i);
    }
    return window_[i];
}

LookaheadView lookahead_view(std::span<const double> path, std::size_t k, std::size_t M,
                             AccessAudit* audit) {
    if (path.empty() || k >= path.size()) throw InputError("lookahead_view: k out of range");
    const std::size_t last = std::min(k + M, path.size() - 1);
    return LookaheadView(path.subspan(k, last - k + 1), k, audit);
}

double pnl(std::span<const double> phi, std::span<const double> path, const ModelParams& p,
           const TimeGrid& g, double* gain, double* impact_cost) {
    if (phi.size() != g.steps || path.size() != g.steps + 1) {
        throw InputError("pnl: trace/path/grid sizes disagree");
    }
    const double dt = g.dt();
    const double S_T = path[g.steps];
    double trade = 0.0;
    double cost = 0.0;
    for (std::size_t k = 0; k < g.steps; ++k) {
        trade += phi[k] * (S_T - path[k]);
        cost += phi[k] * phi[k];
    }
    const double g_total = p.phi0() * (S_T - path[0]) + trade * dt;
    const double c_total = 0.5 * p.lambda_impact() * cost * dt;
    if (gain != nullptr) *gain = g_total;
    if (impact_cost != nullptr) *impact_cost = c_total;
    return g_total - c_total;
}

double pnl(const StrategyTrace& trace, std::span<const double> path, const ModelParams& p,
           const TimeGrid& g) {
    return pnl(trace.phi, path, p, g);
}

}  // namespace frontrun
