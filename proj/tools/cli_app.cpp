#include "cli_app.hpp"

#include "frontrun/analytics.hpp"
#include "frontrun/dual_oracle.hpp"
#include "frontrun/errors.hpp"
#include "frontrun/kernels.hpp"
#include "frontrun/market_sim.hpp"
#include "frontrun/params.hpp"
#include "frontrun/policy.hpp"
#include "frontrun/verification.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

namespace frontrun::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct RunConfig {
    std::string config_path;
    // Flag overrides; unset means "take the file value or the default".
    std::optional<double> s0, mu, sigma, lambda_impact, alpha, horizon_T, lookahead_delta, phi0;
    std::optional<std::size_t> n_paths, steps;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    unsigned workers = 1;

    json file;
    ModelParams params = reference_params();

    std::size_t get_n_paths(std::size_t def) const { return n_paths.value_or(file.value("n_paths", def)); }
    std::size_t get_steps(std::size_t def) const { return steps.value_or(file.value("N", def)); }
    std::uint64_t get_seed(std::uint64_t def) const { return seed.value_or(file.value("seed", def)); }
    std::string get_out(const std::string& def) const { return out_dir.value_or(file.value("out_dir", def)); }
};

void add_common(CLI::App* sub, RunConfig& c) {
    sub->add_option("--config", c.config_path, "JSON config file");
    sub->add_option("--s0", c.s0, "Initial price");
    sub->add_option("--mu", c.mu, "Drift");
    sub->add_option("--sigma", c.sigma, "Volatility");
    sub->add_option("--lambda-impact", c.lambda_impact, "Temporary impact coefficient");
    sub->add_option("--alpha", c.alpha, "Absolute risk aversion");
    sub->add_option("--horizon", c.horizon_T, "Horizon T");
    sub->add_option("--lookahead", c.lookahead_delta, "Lookahead Delta");
    sub->add_option("--phi0", c.phi0, "Initial position");
    sub->add_option("--n-paths", c.n_paths, "Number of simulated paths");
    sub->add_option("--steps", c.steps, "Grid steps N");
    sub->add_option("--seed", c.seed, "Random seed");
    sub->add_option("--out", c.out_dir, "Output directory");
    sub->add_option("--workers", c.workers, "Worker threads (output does not depend on it)");
}

void load(RunConfig& c) {
    if (!c.config_path.empty()) {
        std::ifstream in(c.config_path);
        if (!in) throw IoError("cannot open config file " + c.config_path);
        try {
            c.file = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ConfigError(std::string("config is not valid JSON: ") + e.what());
        }
        if (!c.file.is_object()) throw ConfigError("config must be a JSON object");
    } else {
        c.file = json::object();
    }
    json merged = c.file;
    auto put = [&](const char* key, const std::optional<double>& v) {
        if (v) merged[key] = *v;
    };
    put("s0", c.s0);
    put("mu", c.mu);
    put("sigma", c.sigma);
    put("lambda_impact", c.lambda_impact);
    put("alpha", c.alpha);
    put("horizon_T", c.horizon_T);
    put("lookahead_delta", c.lookahead_delta);
    put("phi0", c.phi0);
    try {
        c.params = params_from_json(merged, reference_params().fields());
        // Validate run-level fields early so type errors surface as config errors.
        (void)c.get_n_paths(0);
        (void)c.get_steps(0);
        (void)c.get_seed(0);
        (void)c.get_out("");
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config field: ") + e.what());
    }
    if (c.workers == 0) throw ConfigError("--workers must be at least 1");
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path.string());
    f << std::setprecision(17);
    return f;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

void close_checked(std::ofstream& f, const fs::path& path) {
    f.close();
    if (!f) throw IoError("failed writing " + path.string());
}

// ---------------------------------------------------------------------------

int cmd_simulate(RunConfig& c, const std::vector<std::string>& policy_names, std::ostream& out) {
    load(c);
    const ModelParams& p = c.params;
    const std::size_t n = c.get_n_paths(10);
    const std::size_t N = c.get_steps(1000);
    const std::uint64_t seed = c.get_seed(1);
    const fs::path dir = c.get_out("out");
    if (n == 0) throw ConfigError("n_paths must be positive");
    const TimeGrid g = make_grid(p, N);
    std::vector<PolicyKind> kinds;
    for (const auto& name : policy_names) kinds.push_back(policy_kind_from_string(name));
    for (PolicyKind k : kinds) {
        if (k == PolicyKind::custom) throw ConfigError("the custom policy is only available from the library");
    }

    const PathEnsemble ens = simulate(p, n, N, seed, c.workers);
    ensure_dir(dir);

    {
        const fs::path path = dir / "paths.csv";
        std::ofstream f = open_out(path);
        f << "path,k,t,S\n";
        for (std::size_t i = 0; i < n; ++i) {
            const auto s = ens.path(i);
            for (std::size_t k = 0; k <= N; ++k) f << i << ',' << k << ',' << g.time(k) << ',' << s[k] << '\n';
        }
        close_checked(f, path);
    }

    json summary = json::object();
    std::vector<std::string> files{"paths.csv"};
    for (PolicyKind kind : kinds) {
        const std::string name = to_string(kind);
        const std::string file = "traces_" + name + ".csv";
        files.push_back(file);
        const fs::path path = dir / file;
        std::ofstream f = open_out(path);
        f << "path,t,S_t,S_bar,phi,Phi,frontrun_term,merton_term,upsilon,merton_ratio\n";
        auto policy = make_policy(kind, p, g);
        std::vector<double> values;
        std::vector<double> utilities;
        for (std::size_t i = 0; i < n; ++i) {
            const auto s = ens.path(i);
            const StrategyTrace tr = run_policy(s, p, g, *policy);
            values.push_back(tr.V_T);
            utilities.push_back(utility(tr.V_T, p.alpha()));
            for (std::size_t k = 0; k <= N; ++k) {
                f << i << ',' << g.time(k) << ',' << s[k] << ',';
                if (k < N) {
                    f << tr.s_bar[k] << ',' << tr.phi[k] << ',' << tr.Phi[k] << ',' << tr.frontrun[k] << ','
                      << tr.merton[k] << ',' << tr.upsilon[k];
                } else {
                    // No trading decision at T; only the terminal position.
                    f << ",," << tr.Phi[k] << ",,,";
                }
                f << ',' << p.merton_ratio() << '\n';
            }
        }
        close_checked(f, path);
        const MCEstimate u = estimate(utilities, seed);
        double mean_v = 0.0;
        for (double v : values) mean_v += v / static_cast<double>(n);
        summary[name] = {{"mean_terminal_wealth", mean_v}, {"expected_utility", u}};
    }

    json meta = {{"params", p},
                 {"n_paths", n},
                 {"N", N},
                 {"dt", g.dt()},
                 {"lookahead_steps", g.lookahead_steps},
                 {"seed", seed},
                 {"policies", policy_names},
                 {"files", files},
                 {"summary", summary}};
    const fs::path mpath = dir / "meta.json";
    std::ofstream mf = open_out(mpath);
    mf << meta.dump(2) << '\n';
    close_checked(mf, mpath);
    out << "wrote " << files.size() + 1 << " files to " << dir.string() << '\n';
    return 0;
}

int cmd_value(RunConfig& c, std::size_t mc_paths, const std::vector<std::size_t>& mc_steps, std::ostream& out) {
    load(c);
    McOptions mc;
    mc.n_paths = c.n_paths.value_or(mc_paths != 0 ? mc_paths : c.file.value("mc_paths", std::size_t{0}));
    if (!mc_steps.empty()) mc.steps = mc_steps;
    mc.seed = c.get_seed(1);
    mc.workers = c.workers;
    const ValueReport rep = value_report(c.params, mc);
    const json j = rep;
    out << std::setprecision(17) << j.dump(2) << '\n';
    if (const std::string dir = c.get_out(""); !dir.empty()) {
        ensure_dir(dir);
        const fs::path path = fs::path(dir) / "value.json";
        std::ofstream f = open_out(path);
        f << j.dump(2) << '\n';
        close_checked(f, path);
    }
    return 0;
}

int cmd_ce(RunConfig& c, std::vector<double> deltas, std::ostream& out) {
    load(c);
    if (deltas.empty()) {
        for (int i = 0; i <= 8; ++i) deltas.push_back(0.25 * i);
    }
    std::ostringstream csv;
    csv << std::setprecision(17) << "lookahead_delta,certainty_equivalent,primal_value\n";
    for (double d : deltas) {
        const ModelParams q = c.params.with_lookahead(d);
        csv << d << ',' << certainty_equivalent(q) << ',' << primal_value(q) << '\n';
    }
    if (const std::string dir = c.get_out(""); !dir.empty()) {
        ensure_dir(dir);
        const fs::path path = fs::path(dir) / "ce.csv";
        std::ofstream f = open_out(path);
        f << csv.str();
        close_checked(f, path);
    }
    out << csv.str();
    return 0;
}

int cmd_verify(const VerifyOptions& o, const std::vector<std::string>& only, const std::string& json_out,
               std::ostream& out, std::ostream& err) {
    bool all = true;
    const auto results = run_acceptance(o, only, [&](const CriterionResult& r) {
        err << format_line(r) << std::endl;
        all = all && r.passed;
    });
    const json j = {{"all_passed", all}, {"quick", o.quick}, {"seed", o.seed}, {"criteria", results}};
    out << std::setprecision(17) << j.dump(2) << '\n';
    if (!json_out.empty()) {
        std::ofstream f = open_out(json_out);
        f << j.dump(2) << '\n';
        close_checked(f, json_out);
    }
    return all ? 0 : 1;
}

int cmd_dual_oracle(RunConfig& c, std::vector<std::size_t> ms, std::vector<double> sources, bool trees,
                    std::ostream& out) {
    load(c);
    const ModelParams& p = c.params;
    const ReducedParams red = reduce(p);
    const KernelSet k = KernelSet::reduced(p);
    if (ms.empty()) ms = {64, 128, 256, 512, 1024, 2048, 4096};
    for (std::size_t m : ms) {
        if (m < 4) throw ConfigError("ladder sizes must be at least 4");
    }
    if (sources.empty()) sources = {0.5 * p.lookahead(), 0.5 * p.horizon()};

    json j;
    j["params"] = p;
    j["a"] = refinement_ladder([&](std::size_t m) { return minimize_a(red, m).value; }, ms,
                               -k.A_hat() * red.phi0_r * red.phi0_r);
    j["l"] = json::array();
    for (double s : sources) {
        if (s < 0.0 || s >= p.horizon()) throw ConfigError("source times must lie in [0, T)");
        j["l"].push_back({{"s", s},
                          {"theta", minimize_theta(s, red).theta},
                          {"ladder", refinement_ladder([&](std::size_t m) { return minimize_l(s, red, m).value; },
                                                       ms, k.L_hat(s))}});
    }
    j["assembly"] = refinement_ladder([&](std::size_t m) { return dual_value_assembly(red, m, c.workers); }, ms,
                                      dual_value_reduced(p));
    if (trees) {
        j["trees"] = json::array();
        for (std::size_t steps : {2, 3}) {
            for (std::size_t b : {2, 3}) {
                TreeParams tp;
                tp.dt = 1.0 / static_cast<double>(steps);
                tp.lookahead_steps = 1;
                const ScenarioTree tree(0.0, steps, gaussian_increments(b, 1.0, tp.dt), tp);
                const XiMin d = minimize_xi(tree);
                const PrimalMax pr = maximize_primal(tree, 3, c.get_seed(1));
                j["trees"].push_back({{"steps", steps},
                                      {"branching", b},
                                      {"lookahead_steps", tp.lookahead_steps},
                                      {"min_xi", d.value},
                                      {"primal_certainty_equivalent", pr.certainty_equivalent},
                                      {"gap", d.value - pr.certainty_equivalent}});
            }
        }
    }
    out << std::setprecision(17) << j.dump(2) << '\n';
    if (const std::string dir = c.get_out(""); !dir.empty()) {
        ensure_dir(dir);
        const fs::path path = fs::path(dir) / "dual_oracle.json";
        std::ofstream f = open_out(path);
        f << j.dump(2) << '\n';
        close_checked(f, path);
    }
    return 0;
}

int cmd_kernels_dump(RunConfig& c, std::size_t grid, std::ostream& out) {
    load(c);
    if (grid < 2) throw ConfigError("--grid must be at least 2");
    const KernelSet k = KernelSet::reduced(c.params);
    std::ostringstream csv;
    csv << std::setprecision(17) << "t,s,l_hat,k_hat,residual\n";
    const double T = c.params.horizon();
    for (std::size_t i = 0; i < grid; ++i) {
        const double t = T * static_cast<double>(i) / static_cast<double>(grid - 1);
        for (std::size_t j = 0; j <= i; ++j) {
            const double s = T * static_cast<double>(j) / static_cast<double>(grid - 1);
            csv << t << ',' << s << ',' << k.l_hat(t, s) << ',' << k.k_hat(t, s) << ',' << k.resolvent_residual(t, s)
                << '\n';
        }
    }
    if (const std::string dir = c.get_out(""); !dir.empty()) {
        ensure_dir(dir);
        const fs::path path = fs::path(dir) / "kernels.csv";
        std::ofstream f = open_out(path);
        f << csv.str();
        close_checked(f, path);
    } else {
        out << csv.str();
    }
    return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Lookahead trading: simulation, values and verification"};
    app.require_subcommand(1);

    RunConfig sim_cfg, value_cfg, ce_cfg, oracle_cfg, dump_cfg;

    auto* sim = app.add_subcommand("simulate", "Simulate paths and roll out policies");
    add_common(sim, sim_cfg);
    std::vector<std::string> policies{"informed", "uninformed", "naive_frontrun"};
    sim->add_option("--policies", policies, "Policies to roll out")->delimiter(',');

    auto* value = app.add_subcommand("value", "Closed-form values with an optional Monte Carlo cross-check");
    add_common(value, value_cfg);
    std::size_t mc_paths = 0;
    std::vector<std::size_t> mc_steps;
    value->add_option("--mc-paths", mc_paths, "Paths for the Monte Carlo cross-check (0 = skip)");
    value->add_option("--mc-steps", mc_steps, "Grid sizes of the refinement ladder")->delimiter(',');

    auto* ce = app.add_subcommand("ce", "Certainty equivalent table over lookahead values");
    add_common(ce, ce_cfg);
    std::vector<double> deltas;
    ce->add_option("--deltas", deltas, "Lookahead values")->delimiter(',');

    auto* verify = app.add_subcommand("verify", "Run the acceptance checks");
    VerifyOptions vopts;
    std::vector<std::string> only;
    std::string verify_json;
    verify->add_flag("--quick", vopts.quick, "Smaller Monte Carlo sizes");
    verify->add_option("--only", only, "Criterion ids")->delimiter(',');
    verify->add_option("--workers", vopts.workers, "Worker threads");
    verify->add_option("--seed", vopts.seed, "Base seed");
    verify->add_option("--json", verify_json, "Also write the report to this file");
    verify->add_flag("--flip-k-hat-sign", vopts.faults.flip_k_hat_sign, "Inject a sign fault into the resolvent kernel");

    auto* oracle = app.add_subcommand("dual-oracle", "Refinement ladders of the discretized dual problem");
    add_common(oracle, oracle_cfg);
    std::vector<std::size_t> ms;
    std::vector<double> sources;
    bool trees = false;
    oracle->add_option("--m", ms, "Ladder sizes")->delimiter(',');
    oracle->add_option("--s", sources, "Source times for the kernel ladders")->delimiter(',');
    oracle->add_flag("--trees", trees, "Also report scenario-tree duality gaps");

    auto* dump = app.add_subcommand("kernels-dump", "Kernel values and resolvent residuals on a triangular grid");
    add_common(dump, dump_cfg);
    std::size_t grid = 20;
    dump->add_option("--grid", grid, "Points per axis");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }

    try {
        if (*sim) return cmd_simulate(sim_cfg, policies, out);
        if (*value) return cmd_value(value_cfg, mc_paths, mc_steps, out);
        if (*ce) return cmd_ce(ce_cfg, deltas, out);
        if (*verify) {
            if (vopts.workers == 0) throw ConfigError("--workers must be at least 1");
            return cmd_verify(vopts, only, verify_json, out, err);
        }
        if (*oracle) return cmd_dual_oracle(oracle_cfg, ms, sources, trees, out);
        if (*dump) return cmd_kernels_dump(dump_cfg, grid, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return 1;
    } catch (const InputError& e) {
        err << "input error: " << e.what() << '\n';
        return 1;
    } catch (const IoError& e) {
        err << "io error: " << e.what() << '\n';
        return 2;
    } catch (const NumericError& e) {
        err << "numeric error: " << e.what() << '\n';
        return 3;
    }
    return 1;
}

}  // namespace frontrun::cli
