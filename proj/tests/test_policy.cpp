#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "frontrun/errors.hpp"
#include "frontrun/kernels.hpp"
#include "frontrun/market_sim.hpp"
#include "frontrun/policy.hpp"

#include <algorithm>
#include <cmath>

using namespace frontrun;
using doctest::Approx;

namespace {

const ModelParams ref = reference_params();

std::vector<double> window(std::span<const double> path, const TimeGrid& g, std::size_t k) {
    return {path.begin() + static_cast<std::ptrdiff_t>(k), path.begin() + static_cast<std::ptrdiff_t>(g.window_end(k)) + 1};
}

}  // namespace

TEST_CASE("s_bar") {
    const TimeGrid g = make_grid(ref, 100);
    std::vector<double> s(101);
    generate_path(ref, g, 1, 0, s);
    const KernelSet k = KernelSet::original(ref);

    // Delta = 0 collapses to S_t.
    const ModelParams p0 = ref.with_lookahead(0.0);
    const KernelSet k0 = KernelSet::original(p0);
    CHECK(s_bar(PolicyInputs{2.0, std::span<const double>(s.data() + 20, 1), g.dt(), 0.0}, k0) == s[20]);

    // Terminal regime gives S_T.
    const auto w = window(s, g, 95);
    CHECK(s_bar(PolicyInputs{g.time(95), w, g.dt(), 0.0}, k) == s[100]);

    const std::vector<double> flat(11, 4.25);
    CHECK(s_bar(PolicyInputs{1.0, flat, g.dt(), 0.0}, k) == Approx(4.25).epsilon(1e-15));

    for (std::size_t j = 0; j < 95; j += 7) {
        const auto wj = window(s, g, j);
        const double v = s_bar(PolicyInputs{g.time(j), wj, g.dt(), 0.0}, k);
        CHECK(v >= *std::min_element(wj.begin(), wj.end()) - 1e-12);
        CHECK(v <= *std::max_element(wj.begin(), wj.end()) + 1e-12);
    }
    CHECK_THROWS_AS(s_bar(PolicyInputs{1.0, std::span<const double>(s.data(), 5), g.dt(), 0.0}, k), InputError);
}

TEST_CASE("feedback rate special cases") {
    const TimeGrid g = make_grid(ref, 100);
    std::vector<double> s(101);
    generate_path(ref, g, 2, 0, s);

    ModelParams::Fields f = ref.fields();
    f.mu = 0.0;
    f.lookahead_delta = 0.0;
    const ModelParams quiet(f);
    CHECK(feedback_rate(PolicyInputs{3.0, std::span<const double>(s.data() + 30, 1), g.dt(), 0.0}, quiet) == 0.0);

    // Terminal regime is exact.
    for (std::size_t k = 90; k < 100; ++k) {
        const auto w = window(s, g, k);
        CHECK(feedback_rate(PolicyInputs{g.time(k), w, g.dt(), 12.0}, ref) == (s[100] - s[k]) / ref.lambda_impact());
    }

    // Delta = 0 tracks the Merton ratio only.
    const ModelParams p0 = ref.with_lookahead(0.0);
    const double sr = std::sqrt(rho(ref));
    for (double t : {0.0, 2.5, 9.9}) {
        const std::vector<double> one{1.7};
        const double expect = sr * std::tanh(sr * (10.0 - t)) * (p0.merton_ratio() - 4.0);
        CHECK(feedback_rate(PolicyInputs{t, one, g.dt(), 4.0}, p0) == Approx(expect).epsilon(1e-14));
    }
}

TEST_CASE("urgency") {
    CHECK(urgency(9.5, ref) == 0.0);
    CHECK(urgency(9.0, ref) == 0.0);
    const ModelParams longrun = ref.with_lookahead(0.0).with_horizon(200.0);
    CHECK(urgency(0.0, longrun) == Approx(std::sqrt(rho(ref))).epsilon(1e-15));
    const KernelSet k = KernelSet::original(ref);
    for (int i = 0; i <= 100; ++i) {
        const double t = 0.1 * i;
        CHECK(std::abs(ref.lookahead() * urgency(t, ref) - k.upsilon(10.0 - t)) < 1e-14);
    }
}

TEST_CASE("initial rate closed form") {
    const double sr = std::sqrt(rho(ref));
    const ModelParams p0 = ref.with_lookahead(0.0).with_phi0(2.0);
    const std::vector<double> one{0.3};
    CHECK(initial_rate_closed_form(one, 0.01, p0) ==
          Approx(sr * std::tanh(sr * 10.0) * (p0.merton_ratio() - 2.0)).epsilon(1e-14));

    ModelParams::Fields f = ref.fields();
    f.mu = 0.0;
    const std::vector<double> flat(101, 0.0);
    CHECK(std::abs(initial_rate_closed_form(flat, 0.01, ModelParams(f))) < 1e-12);

    for (const ModelParams& p : {ref, ref.with_phi0(-20.0).with_lookahead(2.0), ref.with_lookahead(10.0),
                                 ref.with_lookahead(12.0)}) {
        const TimeGrid g = make_grid(p, 1000);
        std::vector<double> s(1001);
        for (std::size_t i = 0; i < 20; ++i) {
            generate_path(p, g, 4, i, s);
            const auto w = window(s, g, 0);
            CHECK(std::abs(feedback_rate(PolicyInputs{0.0, w, g.dt(), p.phi0()}, p) -
                           initial_rate_closed_form(w, g.dt(), p)) < 1e-9);
        }
    }
    CHECK_THROWS_AS(initial_rate_closed_form(one, 0.01, ref), InputError);
}

TEST_CASE("open-loop form") {
    // Constant price and the Merton position: nothing to do.
    const ModelParams merton = ref.with_phi0(ref.merton_ratio());
    const TimeGrid g = make_grid(merton, 200);
    const std::vector<double> flat(201, merton.s0());
    for (std::size_t k : {0, 50, 150}) CHECK(std::abs(open_loop_rate(g.time(k), flat, merton, g)) < 1e-10);

    const std::vector<ModelParams> sets{ref.with_phi0(5.0), ref.with_lookahead(0.0).with_phi0(-3.0),
                                        ModelParams({.s0 = 1.0,
                                                     .mu = -0.05,
                                                     .sigma = 0.8,
                                                     .lambda_impact = 0.2,
                                                     .alpha = 0.5,
                                                     .horizon_T = 4.0,
                                                     .lookahead_delta = 0.5,
                                                     .phi0 = 1.0})};
    for (const ModelParams& p : sets) {
        const TimeGrid gr = make_grid(p, 800);
        const OpenLoopOperator op(p, gr);
        std::vector<double> s(801);
        for (std::size_t i = 0; i < 30; ++i) {
            generate_path(p, gr, 6, i, s);
            const std::vector<double> pos = continuous_feedback_positions(s, p, gr);
            for (std::size_t k : {std::size_t{0}, gr.steps / 4, gr.steps / 2}) {
                const auto w = window(s, gr, k);
                const double fb = feedback_rate(PolicyInputs{gr.time(k), w, gr.dt(), pos[k]}, p);
                CHECK(std::abs(fb - op.rate(k, s)) < 2e-6);
            }
            const auto w0 = window(s, gr, 0);
            CHECK(std::abs(op.rate(0, s) - initial_rate_closed_form(w0, gr.dt(), p)) < 1e-8);
        }
    }
}

TEST_CASE("rollouts") {
    ModelParams::Fields f = ref.fields();
    f.mu = 0.0;
    const ModelParams still(f);
    const TimeGrid g = make_grid(still, 100);
    const std::vector<double> flat(101, 0.0);
    auto policy = make_policy(PolicyKind::informed, still, g);
    const StrategyTrace tr = run_policy(flat, still, g, *policy);
    CHECK(std::all_of(tr.phi.begin(), tr.phi.end(), [](double x) { return x == 0.0; }));
    CHECK(tr.V_T == 0.0);

    // Delta = 0 along the expected path: Phi_t = m (1 - cosh(sqrt(rho)(T-t)) / cosh(sqrt(rho) T)).
    const ModelParams p0 = ref.with_lookahead(0.0);
    const TimeGrid g0 = make_grid(p0, 2000);
    std::vector<double> mean_path(2001);
    for (std::size_t k = 0; k <= 2000; ++k) mean_path[k] = p0.mu() * g0.time(k);
    auto uninformed = make_policy(PolicyKind::uninformed, p0, g0);
    const StrategyTrace t0 = run_policy(mean_path, p0, g0, *uninformed);
    const double m = p0.merton_ratio();
    const double sr = std::sqrt(rho(p0));
    for (std::size_t k = 1; k <= 2000; ++k) {
        CHECK(t0.Phi[k] > t0.Phi[k - 1]);
        CHECK(t0.Phi[k] < m);
        const double exact = m * (1.0 - std::cosh(sr * (10.0 - g0.time(k))) / std::cosh(sr * 10.0));
        CHECK(std::abs(t0.Phi[k] - exact) < 0.02);
    }
    CHECK(std::all_of(t0.frontrun.begin(), t0.frontrun.end(), [](double x) { return x == 0.0; }));

    // Terms add up and the informed and uninformed policies agree when Delta = 0.
    auto informed0 = make_policy(PolicyKind::informed, p0, g0);
    const StrategyTrace ti = run_policy(mean_path, p0, g0, *informed0);
    for (std::size_t k = 0; k < 2000; ++k) {
        CHECK(ti.phi[k] == Approx(t0.phi[k]).epsilon(1e-14));
        CHECK(ti.phi[k] == Approx(ti.frontrun[k] + ti.merton[k]).epsilon(1e-14));
    }
}

TEST_CASE("uninformed limit as the lookahead shrinks") {
    // Smooth deterministic path; on Brownian paths S_{t+dt} - S_t is O(sqrt dt).
    ModelParams::Fields f = ref.fields();
    double prev = 0.0;
    for (std::size_t N = 100; N <= 3200; N *= 2) {
        const double dt = 10.0 / static_cast<double>(N);
        f.lookahead_delta = dt;
        const ModelParams p(f);
        const double t = 2.0;
        const std::vector<double> w{std::sin(t), std::sin(t + dt)};
        const std::vector<double> w0{std::sin(t)};
        const double err = std::abs(feedback_rate(PolicyInputs{t, w, dt, 5.0}, p) -
                                    feedback_rate(PolicyInputs{t, w0, dt, 5.0}, p.with_lookahead(0.0)));
        if (prev > 0.0) CHECK(std::log2(prev / err) >= 1.0);
        prev = err;
    }
}

TEST_CASE("policy kinds") {
    for (PolicyKind k : {PolicyKind::informed, PolicyKind::uninformed, PolicyKind::naive_frontrun, PolicyKind::custom}) {
        CHECK(policy_kind_from_string(to_string(k)) == k);
    }
    CHECK_THROWS_AS(policy_kind_from_string("oracle"), ConfigError);

    const TimeGrid g = make_grid(ref, 100);
    std::vector<double> s(101);
    generate_path(ref, g, 3, 0, s);
    auto naive = make_policy(PolicyKind::naive_frontrun, ref, g);
    const StrategyTrace tr = run_policy(s, ref, g, *naive);
    // Window mean over [t, t + Delta] by the trapezoid rule.
    double integral = 0.0;
    for (std::size_t j = 0; j < 10; ++j) integral += 0.5 * (s[20 + j] + s[21 + j]) * g.dt();
    CHECK(tr.s_bar[20] == Approx(integral / ref.lookahead()).epsilon(1e-13));
    CHECK(tr.phi[20] == Approx((tr.s_bar[20] - s[20]) / ref.lambda_impact()).epsilon(1e-12));

    auto custom = make_custom_policy([](const StepContext& c) { return 1.0 + c.t; }, g.lookahead_steps);
    const StrategyTrace tc = run_policy(s, ref, g, *custom);
    CHECK(tc.phi[50] == Approx(1.0 + g.time(50)));
    CHECK(tc.Phi[100] == Approx(10.0 + 0.5 * 10.0 * 10.0 - 0.5 * 10.0 * g.dt()).epsilon(1e-12));
}
