#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <set>
#include <sstream>

#include "tylershrink/config.hpp"
#include "tylershrink/detector.hpp"
#include "tylershrink/errors.hpp"
#include "tylershrink/io.hpp"
#include "tylershrink/montecarlo.hpp"

namespace ts = tylershrink;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitSchema = 2;
constexpr int kExitNonConvergence = 3;
constexpr int kExitIo = 4;

struct CommonOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<int> threads;
    std::optional<std::string> grid;
    std::optional<std::string> gammas;
};

// Flag overrides win over config-file values.
struct Resolved {
    ts::ConfigFile cfg;
    std::uint64_t seed = 1;
    fs::path out_dir = "out";
    int threads = 0;
    ts::Provenance prov;
};

// One manifest may describe a whole experiment; every command validates the
// full schema (so typos are caught anywhere) and reads only its own sections.
const std::map<std::string, std::set<std::string>>& full_schema() {
    static const std::map<std::string, std::set<std::string>> schema = {
        {"model",
         {"N", "n", "covariance", "a", "texture", "shape", "values", "weights"}},
        {"solver", {"tolerance", "max_iterations"}},
        {"run", {"seed", "out_dir", "threads"}},
        {"generate", {"include_truth"}},
        {"estimate", {"rho", "input", "kappa"}},
        {"theory", {"grid", "gammas", "kappa"}},
        {"sweep", {"grid", "gammas", "kappa", "input"}},
        {"montecarlo",
         {"outer", "inner", "grid", "gammas", "big_gammas", "kappa", "histogram_rho"}},
        {"rates", {"enabled", "sizes", "rho", "seeds", "toeplitz_a", "c"}},
    };
    return schema;
}

Resolved resolve(const CommonOptions& opt) {
    Resolved r{ts::ConfigFile::parse_file(opt.config_path)};
    r.cfg.validate(full_schema());

    r.seed = opt.seed.value_or(
        static_cast<std::uint64_t>(r.cfg.get_int("run", "seed", 1)));
    r.out_dir = opt.out_dir.value_or(r.cfg.get_string("run", "out_dir", "out"));
    r.threads = opt.threads.value_or(r.cfg.get_int("run", "threads", 0));

    std::ostringstream overrides;
    overrides << "seed=" << r.seed << ";grid=" << opt.grid.value_or("")
              << ";gammas=" << opt.gammas.value_or("");
    r.prov.version = ts::tool_version();
    r.prov.seed = r.seed;
    r.prov.config_hash = ts::fnv1a64(r.cfg.raw_text() + "|" + overrides.str());

    std::error_code ec;
    fs::create_directories(r.out_dir, ec);
    if (ec) throw ts::IoError("cannot create output directory: " + r.out_dir.string());
    return r;
}

ts::CovarianceModel build_model(const ts::ConfigFile& cfg, std::string* json_desc = nullptr) {
    const int dim = cfg.get_int("model", "N", 100);
    const std::string kind = cfg.get_string("model", "covariance", "toeplitz");
    const double a = cfg.get_double("model", "a", 0.7);
    if (json_desc) {
        nlohmann::json j;
        j["covariance"] = kind;
        if (kind == "toeplitz") j["a"] = a;
        j["N"] = dim;
        j["texture"] = cfg.get_string("model", "texture", "unit");
        if (cfg.has("model", "shape")) j["shape"] = cfg.get_double("model", "shape", 3.0);
        *json_desc = j.dump();
    }
    if (kind == "identity") return ts::CovarianceModel::identity(dim);
    if (kind == "toeplitz") return ts::CovarianceModel::toeplitz_ar(a, dim);
    throw ts::SchemaError("[model] covariance: expected identity or toeplitz, got '" + kind +
                          "'");
}

ts::TextureModel build_texture(const ts::ConfigFile& cfg) {
    const std::string law = cfg.get_string("model", "texture", "unit");
    if (law == "unit") return ts::TextureModel::unit();
    if (law == "inverse_gamma")
        return ts::TextureModel::inverse_gamma(cfg.get_double("model", "shape", 3.0));
    if (law == "discrete")
        return ts::TextureModel::discrete(cfg.get_list("model", "values", {}),
                                          cfg.get_list("model", "weights", {}));
    throw ts::SchemaError("[model] texture: unknown law '" + law + "'");
}

ts::SolverConfig build_solver(const ts::ConfigFile& cfg) {
    ts::SolverConfig solver;
    solver.tolerance = cfg.get_double("solver", "tolerance", 1e-9);
    solver.max_iterations = cfg.get_int("solver", "max_iterations", 200);
    if (!(solver.tolerance > 0.0) || solver.max_iterations < 1)
        throw ts::SchemaError("[solver] tolerance must be > 0 and max_iterations >= 1");
    return solver;
}

std::vector<double> resolve_grid(const Resolved& r, const CommonOptions& opt,
                                 const std::string& section,
                                 const std::vector<double>& fallback) {
    if (opt.grid) return ts::parse_grid(*opt.grid);
    return r.cfg.get_grid(section, "grid", fallback);
}

std::vector<double> resolve_gammas(const Resolved& r, const CommonOptions& opt,
                                   const std::string& section,
                                   const std::vector<double>& fallback) {
    if (opt.gammas) return ts::parse_double_list(*opt.gammas);
    return r.cfg.get_list(section, "gammas", fallback);
}

std::string fmt12(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

int cmd_generate(const CommonOptions& opt) {
    Resolved r = resolve(opt);
    std::string model_json;
    const auto model = build_model(r.cfg, &model_json);
    const auto texture = build_texture(r.cfg);
    const int count = r.cfg.get_int("model", "n", 2 * model.dim());
    const bool truth = r.cfg.get_bool("generate", "include_truth", true);

    const ts::Dataset data = ts::sample_dataset(model, count, texture, r.seed);
    ts::write_dataset(r.out_dir / "dataset.csv", data, r.prov, model_json, truth);
    std::cout << "wrote " << (r.out_dir / "dataset.csv").string() << " (N=" << data.dim
              << ", n=" << data.count << ")\n";
    return kExitOk;
}

int cmd_estimate(const CommonOptions& opt) {
    Resolved r = resolve(opt);
    const fs::path input =
        r.cfg.get_string("estimate", "input", (r.out_dir / "dataset.csv").string());
    const ts::Dataset data = ts::read_dataset(input);

    const double rho = r.cfg.get_double("estimate", "rho", 0.2);
    const double kappa = r.cfg.get_double("estimate", "kappa", 1e-3);
    ts::ShrinkageParam param;
    try {
        param = ts::ShrinkageParam::make(rho, data.dim, data.count, kappa);
    } catch (const ts::RhoOutOfRange& e) {
        throw ts::SchemaError(std::string("[estimate] rho: ") + e.what());
    }
    const ts::ScatterEstimate est =
        ts::robust_shrinkage_fit(data, param, build_solver(r.cfg));
    ts::write_scatter_csv(r.out_dir / "scatter.csv", est, r.prov);
    std::cout << "wrote " << (r.out_dir / "scatter.csv").string() << " (iterations="
              << est.iterations_used << ", residual=" << est.final_residual << ")\n";
    return kExitOk;
}

int cmd_theory(const CommonOptions& opt) {
    Resolved r = resolve(opt);
    const auto model = build_model(r.cfg);
    const int count = r.cfg.get_int("model", "n", 2 * model.dim());
    const double c = double(model.dim()) / count;
    const auto p = ts::uniform_steering(model.dim());
    const auto grid = resolve_grid(r, opt, "theory", ts::parse_grid("0.05:0.05:1.0"));
    const auto gammas = resolve_gammas(r, opt, "theory", {2.0, 3.0});

    std::ofstream out(r.out_dir / "theory.csv");
    if (!out) throw ts::IoError("cannot write theory.csv");
    out << r.prov.header_line() << "\n";
    out << "rho,rho_bar,gamma,m,sigma2";
    for (double g : gammas) out << ",rayleigh_tail_g" << fmt12(g);
    out << "\n";
    for (double rho : grid) {
        const auto ctx = ts::build_theory_context(model, p, c, rho);
        out << fmt12(rho) << "," << fmt12(ctx.rho_bar) << "," << fmt12(ctx.gamma) << ","
            << fmt12(ctx.m) << "," << fmt12(ctx.sigma2);
        for (double g : gammas) out << "," << fmt12(ts::rayleigh_tail(g, ctx.sigma2));
        out << "\n";
    }
    std::cout << "wrote " << (r.out_dir / "theory.csv").string() << " (" << grid.size()
              << " grid points)\n";
    return kExitOk;
}

int cmd_sweep(const CommonOptions& opt) {
    Resolved r = resolve(opt);
    const fs::path input =
        r.cfg.get_string("sweep", "input", (r.out_dir / "dataset.csv").string());
    const ts::Dataset data = ts::read_dataset(input);
    const auto p = ts::uniform_steering(data.dim);
    const auto grid = resolve_grid(r, opt, "sweep", ts::parse_grid("0.05:0.05:1.0"));
    const auto gammas = resolve_gammas(r, opt, "sweep", {2.0, 3.0});
    const double kappa = r.cfg.get_double("sweep", "kappa", 1e-3);

    const ts::RhoSweepResult result =
        ts::select_rho_star(data, p, grid, build_solver(r.cfg), kappa);

    std::ofstream out(r.out_dir / "sweep.csv");
    if (!out) throw ts::IoError("cannot write sweep.csv");
    out << r.prov.header_line() << "\n";
    out << "rho,rho_bar_hat,sigma2_hat";
    for (double g : gammas) out << ",predicted_far_g" << fmt12(g);
    out << ",is_star\n";
    for (std::size_t j = 0; j < result.grid.size(); ++j) {
        out << fmt12(result.grid[j]) << "," << fmt12(result.rho_bar_hat[j]) << ","
            << fmt12(result.sigma2_hat[j]);
        for (double g : gammas)
            out << ","
                << (result.ok[j] ? fmt12(ts::rayleigh_tail(g, result.sigma2_hat[j])) : "nan");
        out << "," << (static_cast<int>(j) == result.selected_index ? 1 : 0) << "\n";
    }
    std::cout << "rho_star = " << result.rho_star << " (sigma2_hat = "
              << result.sigma2_hat[result.selected_index] << ")\n";
    return kExitOk;
}

int cmd_validate(const CommonOptions& opt) {
    Resolved r = resolve(opt);

    ts::TrialPlan plan;
    plan.model = build_model(r.cfg);
    plan.steering = ts::uniform_steering(plan.model.dim());
    plan.count = r.cfg.get_int("model", "n", 2 * plan.model.dim());
    plan.texture = build_texture(r.cfg);
    plan.rho_grid = resolve_grid(r, opt, "montecarlo", ts::parse_grid("0.05:0.05:1.0"));
    plan.gammas = resolve_gammas(r, opt, "montecarlo", {2.0, 3.0});
    plan.big_gammas = r.cfg.get_list("montecarlo", "big_gammas", {});
    plan.outer_trials = r.cfg.get_int("montecarlo", "outer", 200);
    plan.inner_trials = r.cfg.get_int("montecarlo", "inner", 500);
    plan.kappa = r.cfg.get_double("montecarlo", "kappa", 1e-3);
    plan.solver = build_solver(r.cfg);
    plan.seed = r.seed;

    const double hist_rho =
        r.cfg.get_double("montecarlo", "histogram_rho", plan.rho_grid.front());
    auto hist_it = std::find(plan.rho_grid.begin(), plan.rho_grid.end(), hist_rho);
    if (hist_it == plan.rho_grid.end())
        throw ts::SchemaError("[montecarlo] histogram_rho must be a grid point");
    plan.collect_samples = true;

    const ts::FarSweepResult result = ts::run_far_sweep(plan, r.threads);
    ts::write_far_curve_csv(r.out_dir / "far_curve.csv", result, plan.rho_grid, plan.gammas,
                            r.prov);

    const std::size_t hist_idx = hist_it - plan.rho_grid.begin();
    const double sigma = std::sqrt(result.theory_sigma2[hist_idx]);
    const ts::FitDiagnostics diag =
        ts::ks_distance_vs_rayleigh(result.scaled_samples[hist_idx], sigma);
    ts::write_histogram_csv(r.out_dir / "histogram.csv", diag, r.prov);

    const bool have_adaptive = !plan.big_gammas.empty();
    if (have_adaptive)
        ts::write_adaptive_far_csv(r.out_dir / "far_adaptive.csv", result, plan.model.dim(),
                                   r.prov);

    if (r.cfg.get_bool("rates", "enabled", true)) {
        ts::ProbeConfig probe;
        probe.sizes.clear();
        for (double s : r.cfg.get_list("rates", "sizes", {20, 40}))
            probe.sizes.push_back(static_cast<int>(s));
        probe.rho = r.cfg.get_double("rates", "rho", 0.5);
        probe.num_seeds = r.cfg.get_int("rates", "seeds", 5);
        probe.toeplitz_a = r.cfg.get_double("rates", "toeplitz_a", 0.7);
        probe.c = r.cfg.get_double("rates", "c", 0.5);
        probe.seed = r.seed;
        probe.solver = plan.solver;
        ts::write_rates_csv(r.out_dir / "rates.csv",
                            ts::convergence_probe(probe, r.threads), r.prov);
    }
    ts::write_plot_script(r.out_dir / "plots.gp", have_adaptive, r.prov);

    std::cout << "effective trials: " << result.effective_trials
              << " (failed outer trials: " << result.failed_trials << ")\n";
    std::cout << "wrote far_curve.csv, histogram.csv"
              << (have_adaptive ? ", far_adaptive.csv" : "") << ", rates.csv, plots.gp in "
              << r.out_dir.string() << "\n";
    return kExitOk;
}

void add_common(CLI::App* sub, CommonOptions& opt) {
    sub->add_option("--config", opt.config_path, "experiment manifest (INI)")->required();
    sub->add_option("--seed", opt.seed, "override [run] seed");
    sub->add_option("--out-dir", opt.out_dir, "override [run] out_dir");
    sub->add_option("--threads", opt.threads, "override [run] threads (0 = all cores)")
        ->envname("TYLERSHRINK_THREADS");
    sub->add_option("--grid", opt.grid, "override rho grid (start:step:stop or list)");
    sub->add_option("--gammas", opt.gammas, "override gamma list");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"regularized Tyler shrinkage estimator, GLRT detector calibration and "
                 "Monte Carlo validation"};
    app.require_subcommand(1);

    CommonOptions opt;
    int (*handler)(const CommonOptions&) = nullptr;

    for (auto [name, desc, fn] :
         {std::tuple{"generate", "synthesize an elliptical dataset", &cmd_generate},
          std::tuple{"estimate", "fit the robust shrinkage scatter estimate", &cmd_estimate},
          std::tuple{"theory", "tabulate the asymptotic theory over a rho grid", &cmd_theory},
          std::tuple{"sweep", "data-driven shrinkage sweep and rho* selection", &cmd_sweep},
          std::tuple{"validate", "Monte Carlo false-alarm validation harness",
                     &cmd_validate}}) {
        CLI::App* sub = app.add_subcommand(name, desc);
        add_common(sub, opt);
        sub->callback([&handler, fn = fn] { handler = fn; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitSchema;
    }

    try {
        return handler(opt);
    } catch (const ts::SchemaError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitSchema;
    } catch (const ts::NonConvergence& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return kExitNonConvergence;
    } catch (const ts::BracketFailure& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return kExitNonConvergence;
    } catch (const ts::DegenerateDenominator& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return kExitNonConvergence;
    } catch (const ts::AllPointsFailed& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return kExitNonConvergence;
    } catch (const ts::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
