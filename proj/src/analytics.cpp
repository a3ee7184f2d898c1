#include "frontrun/analytics.hpp"

#include "frontrun/errors.hpp"
#include "frontrun/parallel.hpp"
#include "frontrun/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace frontrun {

namespace {

constexpr double kMaxExponent = 700.0;

}  // namespace

double information_integral(const KernelSet& k) {
    const double sr = k.sqrt_rho();
    const double T = k.horizon();
    const double delta = k.delta();
    return quad::adaptive_split(
        [&](double s) {
            const double m = std::min(s, delta);
            return k.rho() * m / (1.0 + m * sr * std::tanh(sr * (T - s)));
        },
        0.0, T, {delta});
}

double primal_value(const ModelParams& p) {
    const KernelSet k = KernelSet::original(p);
    const double sr = k.sqrt_rho();
    const double gap = p.phi0() - p.merton_ratio();
    const double unwind = p.alpha() * p.lambda_impact() * sr * std::tanh(sr * p.horizon()) / 2.0 * gap * gap;
    const double premium = 0.5 * p.mu() * p.mu() / (p.sigma() * p.sigma()) * p.horizon();
    return -std::exp(unwind - premium - 0.5 * information_integral(k));
}

double dual_value_reduced(const ModelParams& p) {
    const ReducedParams r = reduce(p);
    const KernelSet k = KernelSet::reduced(p);
    const double sr = k.sqrt_rho();
    const double unwind = -r.lambda_r * r.phi0_r * r.phi0_r * sr * std::tanh(sr * p.horizon()) / 2.0;
    const double info = quad::adaptive_split([&](double s) { return k.L_hat(s); }, 0.0, p.horizon(),
                                             {p.lookahead()});
    return unwind + info;
}

double dual_value(const ModelParams& p) {
    const ReducedParams r = reduce(p);
    return p.sigma() * dual_value_reduced(p) + r.entropy_shift / p.alpha();
}

double certainty_equivalent(const ModelParams& p) {
    return information_integral(KernelSet::original(p)) / (2.0 * p.alpha());
}

MCEstimate estimate(std::span<const double> samples, std::uint64_t seed, std::size_t clamped) {
    MCEstimate e;
    e.n_samples = samples.size();
    e.seed = seed;
    e.clamped = clamped;
    if (samples.empty()) return e;
    const double n = static_cast<double>(samples.size());
    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : samples) ss += (x - mean) * (x - mean);
    e.mean = mean;
    e.std_error = samples.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
    return e;
}

double utility(double V, double alpha, bool* clamped) {
    double x = -alpha * V;
    if (x > kMaxExponent) {
        x = kMaxExponent;
        if (clamped != nullptr) *clamped = true;
    }
    return -std::exp(x);
}

UtilityMatrix per_path_utilities(std::span<const Policy* const> policies, const ModelParams& p,
                                 std::size_t n_paths, std::size_t steps, std::uint64_t seed,
                                 unsigned workers) {
    const TimeGrid g = make_grid(p, steps);
    UtilityMatrix out;
    out.utility.assign(policies.size(), std::vector<double>(n_paths));
    std::vector<std::vector<unsigned char>> hit(policies.size(), std::vector<unsigned char>(n_paths, 0));
    parallel_for(n_paths, workers, [&](std::size_t begin, std::size_t end, unsigned) {
        std::vector<std::unique_ptr<Policy>> local;
        for (const Policy* pol : policies) local.push_back(pol->clone());
        std::vector<double> path(steps + 1);
        for (std::size_t i = begin; i < end; ++i) {
            generate_path(p, g, seed, i, path);
            for (std::size_t j = 0; j < local.size(); ++j) {
                bool c = false;
                out.utility[j][i] = utility(rollout_pnl(path, p, g, *local[j]), p.alpha(), &c);
                hit[j][i] = c ? 1 : 0;
            }
        }
    });
    for (const auto& h : hit) out.clamped.push_back(static_cast<std::size_t>(std::count(h.begin(), h.end(), 1)));
    return out;
}

MCEstimate mc_expected_utility(const Policy& policy, const ModelParams& p, std::size_t n_paths,
                               std::size_t steps, std::uint64_t seed, unsigned workers) {
    const Policy* ptr = &policy;
    const UtilityMatrix m = per_path_utilities(std::span<const Policy* const>(&ptr, 1), p, n_paths, steps, seed, workers);
    return estimate(m.utility[0], seed, m.clamped[0]);
}

MCEstimate mc_expected_utility(PolicyKind kind, const ModelParams& p, std::size_t n_paths,
                               std::size_t steps, std::uint64_t seed, unsigned workers) {
    const auto policy = make_policy(kind, p, make_grid(p, steps));
    return mc_expected_utility(*policy, p, n_paths, steps, seed, workers);
}

MCEstimate paired_difference(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw InputError("paired_difference: sample sizes differ");
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    return estimate(d);
}

LadderResult mc_refinement_ladder(PolicyKind kind, const ModelParams& p, std::size_t n_paths,
                                  std::vector<std::size_t> steps, std::uint64_t seed,
                                  unsigned workers) {
    if (steps.size() < 2) throw ConfigError("refinement ladder needs at least two grid sizes");
    std::sort(steps.begin(), steps.end());
    const std::size_t finest = steps.back();
    for (std::size_t n : steps) {
        if (finest % n != 0) throw ConfigError("ladder grid sizes must divide the finest one");
    }
    const TimeGrid fine_grid = make_grid(p, finest);
    std::vector<TimeGrid> grids;
    std::vector<std::unique_ptr<Policy>> prototypes;
    for (std::size_t n : steps) {
        grids.push_back(make_grid(p, n));
        prototypes.push_back(make_policy(kind, p, grids.back()));
    }

    // Least-squares line through (dt_l, u_l); intercept and slope are linear
    // in the per-path utilities, so their standard errors come per path.
    const std::size_t L = steps.size();
    std::vector<double> x(L);
    for (std::size_t l = 0; l < L; ++l) x[l] = grids[l].dt();
    const double xbar = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(L);
    double sxx = 0.0;
    for (double v : x) sxx += (v - xbar) * (v - xbar);
    std::vector<double> w_int(L), w_slope(L);
    for (std::size_t l = 0; l < L; ++l) {
        w_slope[l] = (x[l] - xbar) / sxx;
        w_int[l] = 1.0 / static_cast<double>(L) - xbar * w_slope[l];
    }

    std::vector<std::vector<double>> u(L, std::vector<double>(n_paths));
    std::vector<double> extrap(n_paths), slope(n_paths);
    std::vector<std::size_t> clamped(L, 0);
    std::vector<std::vector<unsigned char>> hit(L, std::vector<unsigned char>(n_paths, 0));
    parallel_for(n_paths, workers, [&](std::size_t begin, std::size_t end, unsigned) {
        std::vector<std::unique_ptr<Policy>> local;
        for (const auto& pr : prototypes) local.push_back(pr->clone());
        std::vector<double> fine(finest + 1);
        std::vector<double> coarse;
        for (std::size_t i = begin; i < end; ++i) {
            generate_path(p, fine_grid, seed, i, fine);
            double e = 0.0, s = 0.0;
            for (std::size_t l = 0; l < L; ++l) {
                const std::size_t stride = finest / steps[l];
                coarse.resize(steps[l] + 1);
                for (std::size_t k = 0; k <= steps[l]; ++k) coarse[k] = fine[k * stride];
                bool c = false;
                const double val = utility(rollout_pnl(coarse, p, grids[l], *local[l]), p.alpha(), &c);
                hit[l][i] = c ? 1 : 0;
                u[l][i] = val;
                e += w_int[l] * val;
                s += w_slope[l] * val;
            }
            extrap[i] = e;
            slope[i] = s;
        }
    });

    LadderResult r;
    r.steps = steps;
    for (std::size_t l = 0; l < L; ++l) {
        clamped[l] = static_cast<std::size_t>(std::count(hit[l].begin(), hit[l].end(), 1));
        r.levels.push_back(estimate(u[l], seed, clamped[l]));
    }
    r.extrapolated = estimate(extrap, seed, *std::max_element(clamped.begin(), clamped.end()));
    r.slope = estimate(slope).mean;
    return r;
}

std::string to_string(Direction d) {
    switch (d) {
        case Direction::constant: return "constant";
        case Direction::signal_sign: return "signal_sign";
        case Direction::bump: return "bump";
        case Direction::lookahead_increment: return "lookahead_increment";
        case Direction::sine: return "sine";
        case Direction::ramp: return "ramp";
    }
    return "unknown";
}

std::vector<Direction> all_directions() {
    return {Direction::constant, Direction::signal_sign, Direction::bump,
            Direction::lookahead_increment, Direction::sine, Direction::ramp};
}

namespace {

class PerturbedPolicy final : public Policy {
public:
    PerturbedPolicy(const ModelParams& p, const TimeGrid& g, Direction d, double eps)
        : Policy(g.lookahead_steps),
          base_(make_policy(PolicyKind::informed, p, g)),
          direction_(d),
          eps_(eps),
          horizon_(p.horizon()),
          increment_scale_(p.sigma() * std::sqrt(std::max(p.lookahead(), g.dt()))) {}

    PerturbedPolicy(const PerturbedPolicy& o)
        : Policy(o.lookahead_steps()),
          base_(o.base_->clone()),
          direction_(o.direction_),
          eps_(o.eps_),
          horizon_(o.horizon_),
          increment_scale_(o.increment_scale_) {}

    std::unique_ptr<Policy> clone() const override { return std::make_unique<PerturbedPolicy>(*this); }
    void begin_path(const TimeGrid& g) override { base_->begin_path(g); }

    RateTerms rate(const StepContext& ctx) override {
        RateTerms r = base_->rate(ctx);
        r.frontrun += eps_ * eta(ctx, r);
        return r;
    }

private:
    double eta(const StepContext& ctx, const RateTerms& r) const {
        const double t = ctx.t;
        switch (direction_) {
            case Direction::constant: return 1.0;
            case Direction::signal_sign: {
                const double d = r.s_bar - ctx.view.front();
                return d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
            }
            case Direction::bump: return (t >= 0.25 * horizon_ && t < 0.5 * horizon_) ? 1.0 : 0.0;
            case Direction::lookahead_increment:
                return std::tanh((ctx.view.back() - ctx.view.front()) / increment_scale_);
            case Direction::sine: return std::sin(2.0 * M_PI * t / horizon_);
            case Direction::ramp: return 1.0 - 2.0 * t / horizon_;
        }
        return 0.0;
    }

    std::unique_ptr<Policy> base_;
    Direction direction_;
    double eps_;
    double horizon_;
    double increment_scale_;
};

}  // namespace

std::unique_ptr<Policy> make_perturbed_policy(const ModelParams& p, const TimeGrid& g, Direction d,
                                              double eps) {
    return std::make_unique<PerturbedPolicy>(p, g, d, eps);
}

bool PerturbationReport::all_passed() const {
    return std::all_of(results.begin(), results.end(), [](const auto& r) { return r.passed; }) &&
           std::all_of(concavity.begin(), concavity.end(), [](const auto& c) { return c.passed; });
}

PerturbationReport perturbation_test(const ModelParams& p, std::size_t n_paths, std::size_t steps,
                                     std::uint64_t seed, std::span<const Direction> directions,
                                     std::span<const double> eps_fractions, unsigned workers) {
    const TimeGrid g = make_grid(p, steps);
    PerturbationReport rep;

    // Scale from a pilot on the leading paths of the same stream.
    {
        auto pilot = make_policy(PolicyKind::informed, p, g);
        const std::size_t n_pilot = std::min<std::size_t>(n_paths, 200);
        std::vector<double> path(steps + 1);
        double ss = 0.0;
        for (std::size_t i = 0; i < n_pilot; ++i) {
            generate_path(p, g, seed, i, path);
            const StrategyTrace tr = run_policy(path, p, g, *pilot);
            for (double f : tr.phi) ss += f * f;
        }
        rep.scale = std::sqrt(ss / static_cast<double>(n_pilot * steps));
    }

    std::vector<std::unique_ptr<Policy>> owned;
    owned.push_back(make_policy(PolicyKind::informed, p, g));
    struct Slot {
        Direction d;
        double eps;
    };
    std::vector<Slot> slots;
    for (Direction d : directions) {
        for (double f : eps_fractions) {
            for (double sign : {1.0, -1.0}) {
                slots.push_back({d, sign * f * rep.scale});
                owned.push_back(make_perturbed_policy(p, g, d, sign * f * rep.scale));
            }
        }
    }
    std::vector<const Policy*> ptrs;
    for (const auto& o : owned) ptrs.push_back(o.get());
    const UtilityMatrix m = per_path_utilities(ptrs, p, n_paths, steps, seed, workers);

    const auto& u0 = m.utility[0];
    rep.optimal = estimate(u0, seed, m.clamped[0]);
    for (std::size_t s = 0; s < slots.size(); ++s) {
        PerturbationResult r;
        r.direction = slots[s].d;
        r.eps = slots[s].eps;
        r.utility = estimate(m.utility[s + 1], seed, m.clamped[s + 1]);
        r.gain_vs_optimal = paired_difference(m.utility[s + 1], u0);
        r.passed = r.gain_vs_optimal.mean <= 3.0 * r.gain_vs_optimal.std_error;
        rep.results.push_back(r);
    }
    for (std::size_t s = 0; s + 1 < slots.size(); s += 2) {
        const auto& up = m.utility[s + 1];
        const auto& dn = m.utility[s + 2];
        std::vector<double> excess(u0.size());
        for (std::size_t i = 0; i < u0.size(); ++i) excess[i] = 0.5 * (up[i] + dn[i]) - u0[i];
        ConcavityResult c;
        c.direction = slots[s].d;
        c.eps = std::abs(slots[s].eps);
        c.midpoint_excess = estimate(excess);
        c.passed = c.midpoint_excess.mean <= 3.0 * c.midpoint_excess.std_error;
        rep.concavity.push_back(c);
    }
    return rep;
}

ValueReport value_report(const ModelParams& p, const McOptions& mc) {
    ValueReport r{p, 0.0, 0.0, 0.0, 0.0, std::nullopt, 0.0};
    r.primal_closed_form = primal_value(p);
    r.dual_closed_form = dual_value(p);
    r.dual_reduced = dual_value_reduced(p);
    r.certainty_equivalent = certainty_equivalent(p);
    if (mc.n_paths > 0) {
        r.mc = mc_refinement_ladder(PolicyKind::informed, p, mc.n_paths, mc.steps, mc.seed, mc.workers);
        const auto& e = r.mc->extrapolated;
        r.mc_gap_in_sigmas = e.std_error > 0.0 ? (e.mean - r.primal_closed_form) / e.std_error : 0.0;
    }
    return r;
}

void to_json(nlohmann::json& j, const MCEstimate& e) {
    j = nlohmann::json{{"mean", e.mean},
                       {"std_error", e.std_error},
                       {"n_samples", e.n_samples},
                       {"seed", e.seed},
                       {"clamped", e.clamped}};
}

void to_json(nlohmann::json& j, const LadderResult& r) {
    j = nlohmann::json{{"steps", r.steps},
                       {"levels", r.levels},
                       {"extrapolated", r.extrapolated},
                       {"slope_per_dt", r.slope}};
}

void to_json(nlohmann::json& j, const ValueReport& r) {
    j = nlohmann::json{{"params", r.params},
                       {"primal_closed_form", r.primal_closed_form},
                       {"dual_closed_form", r.dual_closed_form},
                       {"dual_reduced", r.dual_reduced},
                       {"certainty_equivalent", r.certainty_equivalent},
                       {"mc_estimate", nullptr},
                       {"mc_gap_in_sigmas", nullptr}};
    if (r.mc) {
        j["mc_estimate"] = *r.mc;
        j["mc_gap_in_sigmas"] = r.mc_gap_in_sigmas;
    }
}

}  // namespace frontrun
