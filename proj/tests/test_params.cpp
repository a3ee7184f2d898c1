#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "frontrun/errors.hpp"
#include "frontrun/params.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace frontrun;

namespace {

ModelParams make(double alpha, double sigma, double lambda) {
    ModelParams::Fields f;
    f.alpha = alpha;
    f.sigma = sigma;
    f.lambda_impact = lambda;
    return ModelParams(f);
}

}  // namespace

TEST_CASE("rho examples") {
    CHECK(rho(reference_params()) == doctest::Approx(0.27).epsilon(1e-15));
    CHECK(rho(make(1, 1, 1)) == 1.0);
    CHECK(rho(make(2, 1, 2)) == 1.0);
}

TEST_CASE("reduce on the reference parameters") {
    const ReducedParams r = reduce(reference_params());
    CHECK(r.alpha_r == doctest::Approx(0.009).epsilon(1e-14));
    CHECK(r.lambda_r == doctest::Approx(0.01 / 0.3).epsilon(1e-14));
    CHECK(r.mu_r == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(r.phi0_r == doctest::Approx(-0.1 / (0.03 * 0.09)).epsilon(1e-14));
    CHECK(r.entropy_shift == doctest::Approx(0.5 / 9.0 * 10.0).epsilon(1e-14));
}

TEST_CASE("reduce special cases") {
    ModelParams::Fields f;
    f.phi0 = 2.5;
    const ReducedParams r = reduce(ModelParams(f));
    CHECK(r.phi0_r == 2.5);
    CHECK(r.mu_r == 0.0);

    const ModelParams p = reference_params();
    CHECK(reduce(p.with_phi0(p.merton_ratio())).phi0_r == 0.0);
}

TEST_CASE("rho is preserved bit for bit and reduce/unreduce round-trips") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.05, 3.0);
    for (int i = 0; i < 200; ++i) {
        const ModelParams p({.s0 = u(rng) - 1.0,
                             .mu = u(rng) - 1.5,
                             .sigma = u(rng),
                             .lambda_impact = u(rng),
                             .alpha = u(rng),
                             .horizon_T = u(rng) * 5,
                             .lookahead_delta = u(rng),
                             .phi0 = u(rng) - 1.0});
        const ReducedParams r = reduce(p);
        CHECK(r.rho() == rho(p));
        const ModelParams q = unreduce(r, p.s0(), p.sigma());
        auto close = [](double a, double b) { return std::abs(a - b) <= 1e-14 * std::max(1.0, std::abs(b)); };
        CHECK(close(q.mu(), p.mu()));
        CHECK(close(q.alpha(), p.alpha()));
        CHECK(close(q.lambda_impact(), p.lambda_impact()));
        // phi0 passes through phi0 - mu/(alpha sigma^2) and back, so the error
        // scales with the Merton position.
        CHECK(std::abs(q.phi0() - p.phi0()) <= 1e-14 * std::max({1.0, std::abs(p.phi0()), std::abs(p.merton_ratio())}));
        CHECK(q.horizon() == p.horizon());
        CHECK(q.lookahead() == p.lookahead());
    }
}

TEST_CASE("validation") {
    ModelParams::Fields f;
    f.sigma = 0.0;
    CHECK_THROWS_AS(ModelParams{f}, ConfigError);
    f = {};
    f.lambda_impact = -1.0;
    CHECK_THROWS_AS(ModelParams{f}, ConfigError);
    f = {};
    f.alpha = 0.0;
    CHECK_THROWS_AS(ModelParams{f}, ConfigError);
    f = {};
    f.horizon_T = 0.0;
    CHECK_THROWS_AS(ModelParams{f}, ConfigError);
    f = {};
    f.lookahead_delta = -0.1;
    CHECK_THROWS_AS(ModelParams{f}, ConfigError);
    f = {};
    f.mu = NAN;
    CHECK_THROWS_AS(ModelParams{f}, ConfigError);
    f = {};
    f.lookahead_delta = 5.0;  // beyond the horizon is allowed
    CHECK_NOTHROW(ModelParams{f});
}

TEST_CASE("json round trip and config errors") {
    const ModelParams p = reference_params();
    const nlohmann::json j = p;
    const ModelParams q = params_from_json(j);
    CHECK(q.fields().alpha == p.alpha());
    CHECK(q.fields().lookahead_delta == p.lookahead());
    CHECK(q.fields().phi0 == p.phi0());

    const ModelParams partial = params_from_json(nlohmann::json{{"lookahead_delta", 2.0}}, p.fields());
    CHECK(partial.lookahead() == 2.0);
    CHECK(partial.sigma() == p.sigma());

    CHECK_THROWS_AS(params_from_json(nlohmann::json{{"sigma", "big"}}), ConfigError);
    CHECK_THROWS_AS(params_from_json(nlohmann::json::array()), ConfigError);
    CHECK_THROWS_AS(params_from_json(nlohmann::json{{"sigma", -1.0}}), ConfigError);
}
