#include "frontrun/dual_oracle.hpp"

#include "frontrun/errors.hpp"
#include "frontrun/parallel.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>
#include <gsl/gsl_linalg.h>
#include <gsl/gsl_vector.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace frontrun {

namespace {

double info(double s, const ReducedParams& r) { return std::min(s, r.lookahead_delta); }

// Solves ((h/alpha) I + (h^3/Lambda) U'U) x = b with U the upper-triangular
// matrix of ones. Writing x = D y with D = U^{-1} turns the system into the
// symmetric tridiagonal one (h/alpha) D'D y + (h^3/Lambda) y = D' b.
std::vector<double> solve_tail_system(std::size_t n, double h, double alpha, double lambda,
                                      const std::vector<double>& b) {
    if (n == 0) return {};
    gsl_vector* diag = gsl_vector_alloc(n);
    gsl_vector* off = n > 1 ? gsl_vector_alloc(n - 1) : nullptr;
    gsl_vector* rhs = gsl_vector_alloc(n);
    gsl_vector* y = gsl_vector_alloc(n);
    const double c1 = h / alpha;
    const double c3 = h * h * h / lambda;
    for (std::size_t j = 0; j < n; ++j) {
        gsl_vector_set(diag, j, c1 * (j == 0 ? 1.0 : 2.0) + c3);
        if (j + 1 < n) gsl_vector_set(off, j, -c1);
        gsl_vector_set(rhs, j, b[j] - (j > 0 ? b[j - 1] : 0.0));
    }
    int status = GSL_SUCCESS;
    if (n == 1) {
        gsl_vector_set(y, 0, gsl_vector_get(rhs, 0) / gsl_vector_get(diag, 0));
    } else {
        status = gsl_linalg_solve_symm_tridiag(diag, off, rhs, y);
    }
    std::vector<double> x(n);
    for (std::size_t j = 0; j < n; ++j) {
        x[j] = gsl_vector_get(y, j) - (j + 1 < n ? gsl_vector_get(y, j + 1) : 0.0);
    }
    gsl_vector_free(diag);
    if (off != nullptr) gsl_vector_free(off);
    gsl_vector_free(rhs);
    gsl_vector_free(y);
    if (status != GSL_SUCCESS) throw NumericError(std::string("tridiagonal solve failed: ") + gsl_strerror(status));
    for (double v : x) {
        if (!std::isfinite(v)) throw NumericError("tridiagonal solve produced a non-finite value");
    }
    return x;
}

// h * sum_i (h * sum_{j >= i} x_j)^2
double tail_square_sum(std::span<const double> x, double h) {
    double tail = 0.0;
    double acc = 0.0;
    for (std::size_t i = x.size(); i-- > 0;) {
        tail += x[i];
        acc += (h * tail) * (h * tail);
    }
    return h * acc;
}

}  // namespace

DualControl DualControl::zeros(std::size_t m, double horizon) {
    DualControl c;
    c.m = m;
    c.horizon = horizon;
    c.a.assign(m, 0.0);
    c.l.resize(m);
    for (std::size_t i = 0; i < m; ++i) c.l[i].assign(i + 1, 0.0);
    return c;
}

void DualControl::validate() const {
    if (m == 0 || !(horizon > 0.0)) throw InputError("dual control needs m >= 1 and T > 0");
    if (a.size() != m || l.size() != m) throw InputError("dual control has inconsistent sizes");
    for (std::size_t i = 0; i < m; ++i) {
        if (l[i].size() != i + 1) throw InputError("dual control kernel row has the wrong length");
        if (!std::isfinite(a[i])) throw InputError("dual control has a non-finite entry");
        for (double v : l[i]) {
            if (!std::isfinite(v)) throw InputError("dual control has a non-finite entry");
        }
    }
}

double dual_functional(const DualControl& ctrl, const ReducedParams& r) {
    ctrl.validate();
    const double h = ctrl.step();
    const double alpha = r.alpha_r;
    const double lambda = r.lambda_r;

    double sum_a = 0.0, sq_a = 0.0;
    for (double v : ctrl.a) {
        sum_a += v;
        sq_a += v * v;
    }
    double value = -r.phi0_r * h * sum_a + h * sq_a / (2.0 * alpha) + tail_square_sum(ctrl.a, h) / (2.0 * lambda);

    std::vector<double> col;
    for (std::size_t j = 0; j < ctrl.m; ++j) {
        col.clear();
        for (std::size_t i = j; i < ctrl.m; ++i) col.push_back(ctrl.l[i][j]);
        double sum = 0.0, sq = 0.0;
        for (double v : col) {
            sum += v;
            sq += v * v;
        }
        const double ms = info(ctrl.knot(j), r);
        const double inner = h * sq / (2.0 * alpha) + tail_square_sum(col, h) / (2.0 * lambda) +
                             ms / (2.0 * lambda) * (1.0 - h * sum) * (1.0 - h * sum);
        value += h * inner;
    }
    return value;
}

QuadraticMin minimize_a(const ReducedParams& r, std::size_t m) {
    if (m < 4) throw ConfigError("minimize_a needs m >= 4");
    const double h = r.horizon_T / static_cast<double>(m);
    const std::vector<double> b(m, r.phi0_r * h);
    QuadraticMin out;
    out.x = solve_tail_system(m, h, r.alpha_r, r.lambda_r, b);
    out.value = -0.5 * std::inner_product(b.begin(), b.end(), out.x.begin(), 0.0);
    return out;
}

QuadraticMin minimize_l_cells(double s, std::size_t cells, double h, const ReducedParams& r) {
    const double ms = info(s, r);
    QuadraticMin out;
    if (cells == 0) {
        out.value = ms / (2.0 * r.lambda_r);
        return out;
    }
    // Rank-one term (ms h^2 / Lambda) 11' handled by Sherman-Morrison; the
    // right-hand side is a multiple of 1 so only H^{-1} 1 is needed.
    const std::vector<double> ones(cells, 1.0);
    const std::vector<double> u = solve_tail_system(cells, h, r.alpha_r, r.lambda_r, ones);
    const double beta = ms * h / r.lambda_r;
    const double c = ms * h * h / r.lambda_r;
    const double sum_u = std::accumulate(u.begin(), u.end(), 0.0);
    const double scale = beta / (1.0 + c * sum_u);
    out.x.resize(cells);
    for (std::size_t j = 0; j < cells; ++j) out.x[j] = scale * u[j];
    out.value = ms / (2.0 * r.lambda_r) - 0.5 * beta * scale * sum_u;
    return out;
}

QuadraticMin minimize_l(double s, const ReducedParams& r, std::size_t m) {
    if (!(s >= 0.0) || s > r.horizon_T) throw InputError("minimize_l: s must lie in [0, T]");
    if (s == r.horizon_T) return minimize_l_cells(s, 0, 0.0, r);
    if (m < 1) throw ConfigError("minimize_l needs m >= 1");
    return minimize_l_cells(s, m, (r.horizon_T - s) / static_cast<double>(m), r);
}

ThetaMin minimize_theta(double s, const ReducedParams& r) {
    if (!(s >= 0.0) || s > r.horizon_T) throw InputError("minimize_theta: s must lie in [0, T]");
    const double sr = std::sqrt(r.rho());
    const double ms = info(s, r);
    const double th = std::tanh(sr * (r.horizon_T - s));
    ThetaMin out;
    if (th == 0.0 || ms == 0.0) {
        out.value = ms / (2.0 * r.lambda_r);
        return out;
    }
    // q(Theta) = A Theta^2 + B Theta + C
    const double A = (1.0 / (sr * th) + ms) / (2.0 * r.lambda_r);
    const double B = -ms / r.lambda_r;
    const double C = ms / (2.0 * r.lambda_r);
    out.theta = -B / (2.0 * A);
    out.value = C - B * B / (4.0 * A);
    return out;
}

double dual_value_assembly(const ReducedParams& r, std::size_t m, unsigned workers) {
    if (m < 4) throw ConfigError("dual_value_assembly needs m >= 4");
    const double h = r.horizon_T / static_cast<double>(m);
    std::vector<double> per_knot(m);
    parallel_for(m, workers, [&](std::size_t begin, std::size_t end, unsigned) {
        for (std::size_t j = begin; j < end; ++j) {
            per_knot[j] = minimize_l_cells(h * static_cast<double>(j), m - j, h, r).value;
        }
    });
    double total = 0.0;
    for (double v : per_knot) total += h * v;
    return minimize_a(r, m).value + total;
}

std::vector<OracleRow> refinement_ladder(const std::function<double(std::size_t)>& value,
                                         std::span<const std::size_t> ms, double closed_form) {
    std::vector<OracleRow> rows;
    for (std::size_t m : ms) {
        OracleRow row;
        row.m = m;
        row.value = value(m);
        row.closed_form = closed_form;
        row.abs_err = std::abs(row.value - closed_form);
        if (!rows.empty() && rows.back().abs_err > 0.0 && row.abs_err > 0.0) {
            row.observed_order = std::log(rows.back().abs_err / row.abs_err) /
                                 std::log(static_cast<double>(m) / static_cast<double>(rows.back().m));
        }
        rows.push_back(row);
    }
    return rows;
}

void to_json(nlohmann::json& j, const OracleRow& r) {
    j = nlohmann::json{{"m", r.m},
                       {"value", r.value},
                       {"closed_form", r.closed_form},
                       {"abs_err", r.abs_err},
                       {"observed_order", r.observed_order}};
}

// ---------------------------------------------------------------------------

Increments gaussian_increments(std::size_t b, double sigma, double dt, double drift) {
    if (b < 1) throw ConfigError("need at least one quantization point");
    if (!(sigma > 0.0) || !(dt > 0.0)) throw ConfigError("sigma and dt must be positive");
    Increments inc;
    if (b == 1) {
        inc.values = {drift * dt};
        inc.probs = {1.0};
        return inc;
    }
    gsl_integration_fixed_workspace* w =
        gsl_integration_fixed_alloc(gsl_integration_fixed_hermite, b, 0.0, 1.0, 0.0, 0.0);
    if (w == nullptr) throw NumericError("Gauss-Hermite table allocation failed");
    const double* x = gsl_integration_fixed_nodes(w);
    const double* wt = gsl_integration_fixed_weights(w);
    const double scale = std::sqrt(2.0) * sigma * std::sqrt(dt);
    double total = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        inc.values.push_back(drift * dt + scale * x[i]);
        inc.probs.push_back(wt[i]);
        total += wt[i];
    }
    gsl_integration_fixed_free(w);
    for (double& p : inc.probs) p /= total;
    return inc;
}

ScenarioTree::ScenarioTree(double s0, std::size_t steps, Increments inc, TreeParams tp)
    : steps_(steps), branching_(inc.values.size()), tp_(tp) {
    if (steps == 0) throw ConfigError("scenario tree needs at least one step");
    if (branching_ == 0 || inc.probs.size() != branching_) throw ConfigError("increment law is malformed");
    if (!(tp.alpha > 0.0) || !(tp.lambda_impact > 0.0) || !(tp.dt > 0.0)) {
        throw ConfigError("tree alpha, Lambda and dt must be positive");
    }
    double total = 0.0;
    for (double p : inc.probs) {
        if (!(p > 0.0)) throw ConfigError("increment probabilities must be positive");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) throw ConfigError("increment probabilities must sum to one");
    double n_leaves = std::pow(static_cast<double>(branching_), static_cast<double>(steps));
    if (n_leaves > 1e6) throw ConfigError("scenario tree is too large");
    const std::size_t n = static_cast<std::size_t>(n_leaves);
    prob_.assign(n, 1.0);
    price_.assign((steps + 1) * n, s0);
    for (std::size_t leaf = 0; leaf < n; ++leaf) {
        std::size_t rest = leaf;
        std::vector<std::size_t> digits(steps);
        for (std::size_t j = steps; j-- > 0;) {
            digits[j] = rest % branching_;
            rest /= branching_;
        }
        double s = s0;
        for (std::size_t j = 0; j < steps; ++j) {
            s += inc.values[digits[j]];
            prob_[leaf] *= inc.probs[digits[j]];
            price_[(j + 1) * n + leaf] = s;
        }
    }
}

std::size_t ScenarioTree::block(std::size_t depth) const {
    std::size_t b = 1;
    for (std::size_t d = depth; d < steps_; ++d) b *= branching_;
    return b;
}

std::size_t ScenarioTree::info_depth(std::size_t k) const {
    return std::min(k + tp_.lookahead_steps, steps_);
}

namespace {

void check_measure(const ScenarioTree& tree, std::span<const double> q) {
    if (q.size() != tree.leaves()) throw InputError("xi: weight vector does not match the tree");
    double total = 0.0;
    for (double v : q) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw InputError("xi: weights must be non-negative");
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-9) throw InputError("xi: weights must sum to one");
}

// Conditional means of S_T under q for the information set at step k.
void node_means(const ScenarioTree& tree, std::span<const double> q, std::size_t k,
                std::vector<double>& mass, std::vector<double>& mean) {
    const std::size_t B = tree.block(tree.info_depth(k));
    const std::size_t nodes = tree.leaves() / B;
    const std::size_t n = tree.steps();
    mass.assign(nodes, 0.0);
    mean.assign(nodes, 0.0);
    for (std::size_t node = 0; node < nodes; ++node) {
        double Q = 0.0, QS = 0.0;
        for (std::size_t i = node * B; i < (node + 1) * B; ++i) {
            Q += q[i];
            QS += q[i] * tree.price(n, i);
        }
        mass[node] = Q;
        mean[node] = Q > 0.0 ? QS / Q : tree.price(k, node * B);
    }
}

double xi_unchecked(const ScenarioTree& tree, std::span<const double> q) {
    const TreeParams& tp = tree.params();
    const std::size_t n = tree.steps();
    double kl = 0.0, drift = 0.0;
    for (std::size_t i = 0; i < tree.leaves(); ++i) {
        if (q[i] > 0.0) kl += q[i] * std::log(q[i] / tree.prob(i));
        drift += q[i] * (tree.price(n, i) - tree.price(0, i));
    }
    double penalty = 0.0;
    std::vector<double> mass, mean;
    for (std::size_t k = 0; k < n; ++k) {
        node_means(tree, q, k, mass, mean);
        const std::size_t B = tree.block(tree.info_depth(k));
        for (std::size_t node = 0; node < mass.size(); ++node) {
            const double d = mean[node] - tree.price(k, node * B);
            penalty += mass[node] * d * d;
        }
    }
    return kl / tp.alpha + tp.phi0 * drift + tp.dt / (2.0 * tp.lambda_impact) * penalty;
}

double log_sum_exp(std::span<const double> x) {
    const double mx = *std::max_element(x.begin(), x.end());
    double s = 0.0;
    for (double v : x) s += std::exp(v - mx);
    return mx + std::log(s);
}

}  // namespace

double xi_functional(const ScenarioTree& tree, std::span<const double> q) {
    check_measure(tree, q);
    return xi_unchecked(tree, q);
}

XiMin minimize_xi(const ScenarioTree& tree, double tol, std::size_t max_iter) {
    const TreeParams& tp = tree.params();
    const std::size_t N = tree.leaves();
    const std::size_t n = tree.steps();
    std::vector<double> log_p(N), log_q(N), q(N), target(N), trial(N), trial_q(N);
    for (std::size_t i = 0; i < N; ++i) log_p[i] = std::log(tree.prob(i));
    log_q = log_p;
    for (std::size_t i = 0; i < N; ++i) q[i] = tree.prob(i);
    double value = xi_unchecked(tree, q);
    double theta = 1.0;
    std::vector<double> mass, mean;

    XiMin out;
    for (std::size_t it = 0; it < max_iter; ++it) {
        // First-order condition: log q = log p - alpha * gradient + const.
        for (std::size_t i = 0; i < N; ++i) target[i] = tp.phi0 * (tree.price(n, i) - tree.price(0, i));
        for (std::size_t k = 0; k < n; ++k) {
            node_means(tree, q, k, mass, mean);
            const std::size_t B = tree.block(tree.info_depth(k));
            for (std::size_t i = 0; i < N; ++i) {
                const double st = tree.price(n, i);
                const double a = st - tree.price(k, i);
                const double b = st - mean[i / B];
                target[i] += tp.dt / (2.0 * tp.lambda_impact) * (a * a - b * b);
            }
        }
        for (std::size_t i = 0; i < N; ++i) target[i] = log_p[i] - tp.alpha * target[i];
        const double lse = log_sum_exp(target);
        double residual = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            target[i] -= lse;
            residual = std::max(residual, std::abs(target[i] - log_q[i]));
        }
        out.iterations = it;
        out.residual = residual;
        if (residual < tol) break;

        bool accepted = false;
        while (theta > 1e-12) {
            for (std::size_t i = 0; i < N; ++i) trial[i] = (1.0 - theta) * log_q[i] + theta * target[i];
            const double l2 = log_sum_exp(trial);
            for (std::size_t i = 0; i < N; ++i) {
                trial[i] -= l2;
                trial_q[i] = std::exp(trial[i]);
            }
            const double v = xi_unchecked(tree, trial_q);
            if (v <= value + 1e-15 * std::max(1.0, std::abs(value))) {
                log_q.swap(trial);
                q.swap(trial_q);
                value = v;
                accepted = true;
                theta = std::min(1.0, 2.0 * theta);
                break;
            }
            theta *= 0.5;
        }
        if (!accepted) break;
    }
    out.q = q;
    out.value = value;
    return out;
}

PrimalMax maximize_primal(const ScenarioTree& tree, std::size_t starts, std::uint64_t seed, double tol,
                          std::size_t max_sweeps) {
    if (starts == 0) throw ConfigError("primal search needs at least one start");
    const TreeParams& tp = tree.params();
    const std::size_t N = tree.leaves();
    const std::size_t n = tree.steps();
    const double alpha = tp.alpha;
    const double lam = tp.lambda_impact;
    const double dt = tp.dt;

    struct Var {
        std::size_t k;
        std::size_t lo;
        std::size_t hi;
    };
    std::vector<Var> vars;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t B = tree.block(tree.info_depth(k));
        for (std::size_t node = 0; node < N / B; ++node) vars.push_back({k, node * B, (node + 1) * B});
    }

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> results;
    PrimalMax best;
    best.certainty_equivalent = -std::numeric_limits<double>::infinity();

    for (std::size_t start = 0; start < starts; ++start) {
        std::vector<double> phi(vars.size(), 0.0);
        if (start > 0) {
            for (double& f : phi) f = normal(rng) / lam;
        }
        std::vector<double> V(N);
        for (std::size_t i = 0; i < N; ++i) V[i] = tp.phi0 * (tree.price(n, i) - tree.price(0, i));
        for (std::size_t v = 0; v < vars.size(); ++v) {
            for (std::size_t i = vars[v].lo; i < vars[v].hi; ++i) {
                V[i] += phi[v] * (tree.price(n, i) - tree.price(vars[v].k, i)) * dt - 0.5 * lam * phi[v] * phi[v] * dt;
            }
        }
        std::vector<double> lw(N);
        for (std::size_t i = 0; i < N; ++i) lw[i] = std::log(tree.prob(i)) - alpha * V[i];

        std::size_t sweep = 0;
        for (; sweep < max_sweeps; ++sweep) {
            double max_grad = 0.0;
            for (std::size_t v = 0; v < vars.size(); ++v) {
                const Var& var = vars[v];
                // Log-mass outside the block stays fixed during this coordinate.
                double mx = -std::numeric_limits<double>::infinity();
                for (std::size_t i = 0; i < N; ++i) {
                    if (i < var.lo || i >= var.hi) mx = std::max(mx, lw[i]);
                }
                double out_sum = 0.0;
                if (std::isfinite(mx)) {
                    for (std::size_t i = 0; i < N; ++i) {
                        if (i < var.lo || i >= var.hi) out_sum += std::exp(lw[i] - mx);
                    }
                }
                auto objective = [&](double f, double* d1, double* d2) {
                    // J(f) = -(1/alpha) log(sum_out + sum_blk p exp(-alpha V))
                    double m2 = mx;
                    for (std::size_t i = var.lo; i < var.hi; ++i) {
                        const double gain = (f - phi[v]) * (tree.price(n, i) - tree.price(var.k, i)) * dt -
                                            0.5 * lam * (f * f - phi[v] * phi[v]) * dt;
                        m2 = std::max(m2, lw[i] - alpha * gain);
                    }
                    double Z = std::isfinite(mx) ? out_sum * std::exp(mx - m2) : 0.0;
                    double sg = 0.0, sg2 = 0.0, sw = 0.0;
                    for (std::size_t i = var.lo; i < var.hi; ++i) {
                        const double inc = tree.price(n, i) - tree.price(var.k, i);
                        const double gain = (f - phi[v]) * inc * dt - 0.5 * lam * (f * f - phi[v] * phi[v]) * dt;
                        const double w = std::exp(lw[i] - alpha * gain - m2);
                        const double g = (inc - lam * f) * dt;
                        Z += w;
                        sw += w;
                        sg += w * g;
                        sg2 += w * g * g;
                    }
                    sw /= Z;
                    sg /= Z;
                    sg2 /= Z;
                    if (d1 != nullptr) *d1 = sg;
                    if (d2 != nullptr) *d2 = -lam * dt * sw - alpha * (sg2 - sg * sg);
                    return -(m2 + std::log(Z)) / alpha;
                };
                double f = phi[v];
                double d1 = 0.0, d2 = 0.0;
                double J = objective(f, &d1, &d2);
                max_grad = std::max(max_grad, std::abs(d1));
                for (int it = 0; it < 50; ++it) {
                    double step = -d1 / d2;
                    double f_new = f + step;
                    double J_new = objective(f_new, nullptr, nullptr);
                    int halvings = 0;
                    while (J_new < J && halvings < 60) {
                        step *= 0.5;
                        f_new = f + step;
                        J_new = objective(f_new, nullptr, nullptr);
                        ++halvings;
                    }
                    if (J_new < J) break;
                    f = f_new;
                    J = objective(f, &d1, &d2);
                    if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(f))) break;
                }
                for (std::size_t i = var.lo; i < var.hi; ++i) {
                    const double gain = (f - phi[v]) * (tree.price(n, i) - tree.price(var.k, i)) * dt -
                                        0.5 * lam * (f * f - phi[v] * phi[v]) * dt;
                    V[i] += gain;
                    lw[i] -= alpha * gain;
                }
                phi[v] = f;
            }
            if (max_grad < tol) break;
        }
        const double ce = -log_sum_exp(lw) / alpha;
        results.push_back(ce);
        if (ce > best.certainty_equivalent) {
            best.certainty_equivalent = ce;
            best.sweeps = sweep;
        }
    }
    best.expected_utility = -std::exp(-alpha * best.certainty_equivalent);
    best.spread = *std::max_element(results.begin(), results.end()) - *std::min_element(results.begin(), results.end());
    return best;
}

}  // namespace frontrun
