#pragma once

#include "frontrun/kernels.hpp"
#include "frontrun/market_sim.hpp"
#include "frontrun/params.hpp"
#include "frontrun/policy.hpp"

#include <json.hpp>

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace frontrun {

// ---------------------------------------------------------------------------
// Closed forms
// ---------------------------------------------------------------------------

/// int_0^T rho (s^Delta) / (1 + (s^Delta) sqrt(rho) tanh(sqrt(rho)(T-s))) ds,
/// split at s = Delta.
double information_integral(const KernelSet& k);

/// Maximal expected utility max E[-exp(-alpha V_T)] over Delta-informed rates.
double primal_value(const ModelParams& p);

/// Minimal value of the entropy-penalized dual in reduced units (S = W).
double dual_value_reduced(const ModelParams& p);

/// Dual value mapped back to currency: sigma * reduced value + shift / alpha.
/// Equals -(1/alpha) log(-primal_value(p)).
double dual_value(const ModelParams& p);

/// Cash value of seeing Delta ahead; depends on rho, T, Delta and alpha only.
double certainty_equivalent(const ModelParams& p);

// ---------------------------------------------------------------------------
// Monte Carlo
// ---------------------------------------------------------------------------

struct MCEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n_samples = 0;
    std::uint64_t seed = 0;
    std::size_t clamped = 0;  // samples whose utility exponent hit the clamp
};

MCEstimate estimate(std::span<const double> samples, std::uint64_t seed = 0, std::size_t clamped = 0);

/// -exp(-alpha V) with the exponent clamped to 700; sets *clamped when hit.
double utility(double V, double alpha, bool* clamped = nullptr);

/// Utilities of several policies on the same paths (common random numbers).
/// Result is [policy][path].
struct UtilityMatrix {
    std::vector<std::vector<double>> utility;
    std::vector<std::size_t> clamped;
};

UtilityMatrix per_path_utilities(std::span<const Policy* const> policies, const ModelParams& p,
                                 std::size_t n_paths, std::size_t steps, std::uint64_t seed,
                                 unsigned workers = 1);

MCEstimate mc_expected_utility(PolicyKind kind, const ModelParams& p, std::size_t n_paths,
                               std::size_t steps, std::uint64_t seed, unsigned workers = 1);
MCEstimate mc_expected_utility(const Policy& policy, const ModelParams& p, std::size_t n_paths,
                               std::size_t steps, std::uint64_t seed, unsigned workers = 1);

/// Mean and standard error of the per-path difference a - b.
MCEstimate paired_difference(std::span<const double> a, std::span<const double> b);

/// Runs one policy at several grid sizes on shared paths (coarse grids are
/// subsamples of the finest) and extrapolates the per-path utility linearly
/// in dt to dt = 0.
struct LadderResult {
    std::vector<std::size_t> steps;
    std::vector<MCEstimate> levels;
    MCEstimate extrapolated;
    double slope = 0.0;  // fitted d(mean)/d(dt)
};

LadderResult mc_refinement_ladder(PolicyKind kind, const ModelParams& p, std::size_t n_paths,
                                  std::vector<std::size_t> steps, std::uint64_t seed,
                                  unsigned workers = 1);

// ---------------------------------------------------------------------------
// Perturbation battery
// ---------------------------------------------------------------------------

/// Bounded perturbation directions that only use information available to
/// the informed trader at time t.
enum class Direction { constant, signal_sign, bump, lookahead_increment, sine, ramp };

std::string to_string(Direction d);
std::vector<Direction> all_directions();

/// Informed rate plus eps * eta(t, window).
std::unique_ptr<Policy> make_perturbed_policy(const ModelParams& p, const TimeGrid& g, Direction d,
                                              double eps);

struct PerturbationResult {
    Direction direction{};
    double eps = 0.0;
    MCEstimate utility;
    MCEstimate gain_vs_optimal;  // perturbed minus optimal, per path
    bool passed = false;         // gain <= 3 standard errors
};

struct ConcavityResult {
    Direction direction{};
    double eps = 0.0;            // |eps|
    MCEstimate midpoint_excess;  // (u(+eps) + u(-eps)) / 2 - u(0)
    bool passed = false;
};

struct PerturbationReport {
    MCEstimate optimal;
    double scale = 0.0;  // RMS optimal rate; eps values are fractions of it
    std::vector<PerturbationResult> results;
    std::vector<ConcavityResult> concavity;
    bool all_passed() const;
};

PerturbationReport perturbation_test(const ModelParams& p, std::size_t n_paths, std::size_t steps,
                                     std::uint64_t seed, std::span<const Direction> directions,
                                     std::span<const double> eps_fractions, unsigned workers = 1);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct ValueReport {
    ModelParams params;
    double primal_closed_form = 0.0;
    double dual_closed_form = 0.0;
    double dual_reduced = 0.0;
    double certainty_equivalent = 0.0;
    std::optional<LadderResult> mc;
    double mc_gap_in_sigmas = 0.0;
};

struct McOptions {
    std::size_t n_paths = 0;  // 0 disables the Monte Carlo cross-check
    std::vector<std::size_t> steps{500, 1000, 2000};
    std::uint64_t seed = 1;
    unsigned workers = 1;
};

ValueReport value_report(const ModelParams& p, const McOptions& mc = {});

void to_json(nlohmann::json& j, const MCEstimate& e);
void to_json(nlohmann::json& j, const LadderResult& r);
void to_json(nlohmann::json& j, const ValueReport& r);

}  // namespace frontrun
