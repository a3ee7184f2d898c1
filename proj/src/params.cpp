#include "frontrun/params.hpp"

#include "frontrun/errors.hpp"

#include <cmath>
#include <string>

namespace frontrun {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError("invalid parameter: " + what);
}

}  // namespace

ModelParams::ModelParams(const Fields& f) : f_(f) {
    require(std::isfinite(f.s0), "s0 must be finite");
    require(std::isfinite(f.mu), "mu must be finite");
    require(std::isfinite(f.phi0), "phi0 must be finite");
    require(std::isfinite(f.sigma) && f.sigma > 0.0, "sigma must be > 0");
    require(std::isfinite(f.lambda_impact) && f.lambda_impact > 0.0, "lambda_impact must be > 0");
    require(std::isfinite(f.alpha) && f.alpha > 0.0, "alpha must be > 0");
    require(std::isfinite(f.horizon_T) && f.horizon_T > 0.0, "horizon_T must be > 0");
    require(std::isfinite(f.lookahead_delta) && f.lookahead_delta >= 0.0,
            "lookahead_delta must be >= 0");
    const double r = f.alpha * f.sigma * f.sigma / f.lambda_impact;
    require(std::isfinite(r) && r > 0.0, "alpha sigma^2 / lambda_impact must be finite and > 0");
}

ModelParams ModelParams::with_lookahead(double delta) const {
    Fields f = f_;
    f.lookahead_delta = delta;
    return ModelParams(f);
}

ModelParams ModelParams::with_horizon(double T) const {
    Fields f = f_;
    f.horizon_T = T;
    return ModelParams(f);
}

ModelParams ModelParams::with_mu(double mu) const {
    Fields f = f_;
    f.mu = mu;
    return ModelParams(f);
}

ModelParams ModelParams::with_phi0(double phi0) const {
    Fields f = f_;
    f.phi0 = phi0;
    return ModelParams(f);
}

double rho(const ModelParams& p) {
    return p.alpha() * p.sigma() * p.sigma() / p.lambda_impact();
}

ModelParams ReducedParams::as_model() const {
    return ModelParams({.s0 = 0.0,
                        .mu = 0.0,
                        .sigma = 1.0,
                        .lambda_impact = lambda_r,
                        .alpha = alpha_r,
                        .horizon_T = horizon_T,
                        .lookahead_delta = lookahead_delta,
                        .phi0 = phi0_r});
}

ReducedParams reduce(const ModelParams& p) {
    ReducedParams r;
    r.alpha_r = p.alpha() * p.sigma();
    r.lambda_r = p.lambda_impact() / p.sigma();
    r.mu_r = p.mu() / p.sigma();
    r.phi0_r = p.phi0() - p.merton_ratio();
    r.entropy_shift = 0.5 * r.mu_r * r.mu_r * p.horizon();
    r.horizon_T = p.horizon();
    r.lookahead_delta = p.lookahead();
    r.rho_value = rho(p);
    return r;
}

ModelParams unreduce(const ReducedParams& r, double s0, double sigma) {
    const double alpha = r.alpha_r / sigma;
    const double mu = r.mu_r * sigma;
    return ModelParams({.s0 = s0,
                        .mu = mu,
                        .sigma = sigma,
                        .lambda_impact = r.lambda_r * sigma,
                        .alpha = alpha,
                        .horizon_T = r.horizon_T,
                        .lookahead_delta = r.lookahead_delta,
                        .phi0 = r.phi0_r + mu / (alpha * sigma * sigma)});
}

void to_json(nlohmann::json& j, const ModelParams& p) {
    j = nlohmann::json{{"s0", p.s0()},
                       {"mu", p.mu()},
                       {"sigma", p.sigma()},
                       {"lambda_impact", p.lambda_impact()},
                       {"alpha", p.alpha()},
                       {"horizon_T", p.horizon()},
                       {"lookahead_delta", p.lookahead()},
                       {"phi0", p.phi0()}};
}

void to_json(nlohmann::json& j, const ReducedParams& r) {
    j = nlohmann::json{{"alpha_r", r.alpha_r},
                       {"lambda_r", r.lambda_r},
                       {"mu_r", r.mu_r},
                       {"phi0_r", r.phi0_r},
                       {"entropy_shift", r.entropy_shift},
                       {"horizon_T", r.horizon_T},
                       {"lookahead_delta", r.lookahead_delta}};
}

ModelParams params_from_json(const nlohmann::json& j, const ModelParams::Fields& base) {
    if (!j.is_object()) throw ConfigError("parameter config must be a JSON object");
    ModelParams::Fields f = base;
    auto read = [&](const char* key, double& dst) {
        if (!j.contains(key)) return;
        if (!j.at(key).is_number()) throw ConfigError(std::string("field '") + key + "' must be a number");
        dst = j.at(key).get<double>();
    };
    read("s0", f.s0);
    read("mu", f.mu);
    read("sigma", f.sigma);
    read("lambda_impact", f.lambda_impact);
    read("alpha", f.alpha);
    read("horizon_T", f.horizon_T);
    read("lookahead_delta", f.lookahead_delta);
    read("phi0", f.phi0);
    return ModelParams(f);
}

ModelParams reference_params() {
    return ModelParams({.s0 = 0.0,
                        .mu = 0.1,
                        .sigma = 0.3,
                        .lambda_impact = 0.01,
                        .alpha = 0.03,
                        .horizon_T = 10.0,
                        .lookahead_delta = 1.0,
                        .phi0 = 0.0});
}

}  // namespace frontrun
