#pragma once

#include "frontrun/params.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace frontrun {

// ---------------------------------------------------------------------------
// Deterministic dual controls on a uniform knot grid
// ---------------------------------------------------------------------------

/// Piecewise-constant controls on knots t_i = i*T/m. l[i][j] is the kernel
/// value at (t_i, s_j) and exists only for j <= i.
struct DualControl {
    std::size_t m = 0;
    double horizon = 0.0;
    std::vector<double> a;
    std::vector<std::vector<double>> l;

    static DualControl zeros(std::size_t m, double horizon);
    double step() const { return horizon / static_cast<double>(m); }
    double knot(std::size_t i) const { return step() * static_cast<double>(i); }
    void validate() const;
};

/// Left-endpoint discretization of the dual objective in reduced units.
double dual_functional(const DualControl& ctrl, const ReducedParams& r);

struct QuadraticMin {
    std::vector<double> x;
    double value = 0.0;
};

/// Minimizes the a-part over m knots on [0, T].
QuadraticMin minimize_a(const ReducedParams& r, std::size_t m);

/// Minimizes the l-part for source time s over m cells on [s, T]. At s = T
/// the problem is empty and the value is (T^Delta)/(2 Lambda).
QuadraticMin minimize_l(double s, const ReducedParams& r, std::size_t m);

/// Same problem on cells of width h starting at s.
QuadraticMin minimize_l_cells(double s, std::size_t cells, double h, const ReducedParams& r);

struct ThetaMin {
    double theta = 0.0;
    double value = 0.0;
};

/// Scalar reduction of the l-part: min over Theta of
/// coth(sqrt(rho)(T-s))/sqrt(rho) Theta^2/(2 Lambda) + (s^Delta)/(2 Lambda) (1-Theta)^2.
ThetaMin minimize_theta(double s, const ReducedParams& r);

/// a-part minimum plus the left-endpoint sum of l-part minima over the knots.
double dual_value_assembly(const ReducedParams& r, std::size_t m, unsigned workers = 1);

struct OracleRow {
    std::size_t m = 0;
    double value = 0.0;
    double closed_form = 0.0;
    double abs_err = 0.0;
    double observed_order = 0.0;  // log2 of the error ratio to the previous row; 0 on the first
};

std::vector<OracleRow> refinement_ladder(const std::function<double(std::size_t)>& value,
                                         std::span<const std::size_t> ms, double closed_form);

void to_json(nlohmann::json& j, const OracleRow& r);

// ---------------------------------------------------------------------------
// Finite scenario trees
// ---------------------------------------------------------------------------

struct Increments {
    std::vector<double> values;
    std::vector<double> probs;
};

/// Gauss-Hermite quantization of a N(drift dt, sigma^2 dt) increment with b points.
Increments gaussian_increments(std::size_t b, double sigma, double dt, double drift = 0.0);

struct TreeParams {
    double alpha = 1.0;
    double lambda_impact = 2.0;
    double phi0 = 0.0;
    double dt = 1.0;
    std::size_t lookahead_steps = 0;
};

/// Recombination-free tree with n steps and the same increment law per step.
/// Leaves are ordered so that the leaves under a node at depth d form a
/// contiguous block of size b^(n-d).
class ScenarioTree {
public:
    ScenarioTree(double s0, std::size_t steps, Increments inc, TreeParams tp);

    std::size_t steps() const { return steps_; }
    std::size_t branching() const { return branching_; }
    std::size_t leaves() const { return prob_.size(); }
    const TreeParams& params() const { return tp_; }
    double prob(std::size_t leaf) const { return prob_[leaf]; }
    double price(std::size_t k, std::size_t leaf) const { return price_[k * leaves() + leaf]; }
    std::size_t block(std::size_t depth) const;
    /// Depth of the information set the trader acts on at step k.
    std::size_t info_depth(std::size_t k) const;

private:
    std::size_t steps_;
    std::size_t branching_;
    TreeParams tp_;
    std::vector<double> prob_;
    std::vector<double> price_;
};

/// (1/alpha) KL(q|p) + Phi0 E_q[S_T - S_0]
///   + (1/(2 Lambda)) sum_k dt E_q[(E_q[S_T | info_k] - S_k)^2].
/// q are leaf probabilities.
double xi_functional(const ScenarioTree& tree, std::span<const double> q);

struct XiMin {
    std::vector<double> q;
    double value = 0.0;
    std::size_t iterations = 0;
    double residual = 0.0;
};

XiMin minimize_xi(const ScenarioTree& tree, double tol = 1e-13, std::size_t max_iter = 100000);

struct PrimalMax {
    double certainty_equivalent = 0.0;  // -(1/alpha) log E[exp(-alpha V)]
    double expected_utility = 0.0;      // E[-exp(-alpha V)]
    double spread = 0.0;                // max minus min over starts
    std::size_t sweeps = 0;
};

/// Coordinate Newton search over per-node trading rates with several starts.
PrimalMax maximize_primal(const ScenarioTree& tree, std::size_t starts = 3, std::uint64_t seed = 7,
                          double tol = 1e-12, std::size_t max_sweeps = 20000);

}  // namespace frontrun
