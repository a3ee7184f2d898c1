#pragma once

#include <json.hpp>

namespace frontrun {

/// Problem specification for the Bachelier market S_t = s0 + mu t + sigma W_t
/// with quadratic temporary impact and exponential utility.
///
/// Instances are validated on construction; every downstream routine may
/// assume sigma, lambda_impact, alpha, horizon > 0 and lookahead >= 0.
class ModelParams {
public:
    struct Fields {
        double s0 = 0.0;
        double mu = 0.0;
        double sigma = 1.0;
        double lambda_impact = 1.0;
        double alpha = 1.0;
        double horizon_T = 1.0;
        double lookahead_delta = 0.0;
        double phi0 = 0.0;
    };

    /// Throws ConfigError when an invariant is violated.
    explicit ModelParams(const Fields& f);

    double s0() const { return f_.s0; }
    double mu() const { return f_.mu; }
    double sigma() const { return f_.sigma; }
    double lambda_impact() const { return f_.lambda_impact; }
    double alpha() const { return f_.alpha; }
    double horizon() const { return f_.horizon_T; }
    double lookahead() const { return f_.lookahead_delta; }
    double phi0() const { return f_.phi0; }
    const Fields& fields() const { return f_; }

    /// Merton position mu / (alpha sigma^2).
    double merton_ratio() const { return f_.mu / (f_.alpha * f_.sigma * f_.sigma); }

    /// Copy with a single field replaced (re-validated).
    ModelParams with_lookahead(double delta) const;
    ModelParams with_horizon(double T) const;
    ModelParams with_mu(double mu) const;
    ModelParams with_phi0(double phi0) const;

private:
    Fields f_;
};

/// Risk-liquidity ratio alpha sigma^2 / Lambda.
double rho(const ModelParams& p);

/// Driftless, unit-volatility form of a problem. Strategies keep their
/// meaning; only the currency unit and the reference measure change.
struct ReducedParams {
    double alpha_r = 0.0;        // alpha * sigma
    double lambda_r = 0.0;       // Lambda / sigma
    double mu_r = 0.0;           // mu / sigma
    double phi0_r = 0.0;         // Phi0 - mu / (alpha sigma^2)
    double entropy_shift = 0.0;  // (mu/sigma)^2 T / 2
    double horizon_T = 0.0;
    double lookahead_delta = 0.0;
    double rho_value = 0.0;  // set by reduce() with the same arithmetic as rho(ModelParams)

    double rho() const { return rho_value > 0.0 ? rho_value : alpha_r / lambda_r; }

    /// The reduced problem as a ModelParams (s0 = 0, sigma = 1, mu = 0).
    ModelParams as_model() const;
};

ReducedParams reduce(const ModelParams& p);

/// Inverse of reduce(); s0 and sigma are not recoverable from the reduced
/// fields and must be supplied.
ModelParams unreduce(const ReducedParams& r, double s0, double sigma);

void to_json(nlohmann::json& j, const ModelParams& p);
/// Reads the eight fields by name; missing fields keep `base` values.
ModelParams params_from_json(const nlohmann::json& j, const ModelParams::Fields& base = {});
void to_json(nlohmann::json& j, const ReducedParams& r);

/// Parameters of the illustrative run: s0 = 0, mu = .1, sigma = .3, T = 10,
/// Delta = 1, alpha = .03, Phi0 = 0, Lambda = .01.
ModelParams reference_params();

}  // namespace frontrun
