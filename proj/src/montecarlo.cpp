#include "tylershrink/montecarlo.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "tylershrink/errors.hpp"

namespace tylershrink {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

int resolve_threads(int requested, int total_tasks) {
    int t = requested > 0 ? requested
                          : static_cast<int>(std::thread::hardware_concurrency());
    if (t < 1) t = 1;
    return std::min(t, std::max(1, total_tasks));
}

// Workers claim task indices from a shared counter; every task writes only its
// own preallocated slot, so the result layout is independent of scheduling.
template <typename Fn>
void run_parallel(int total, int threads, Fn&& task) {
    threads = resolve_threads(threads, total);
    if (threads == 1) {
        for (int i = 0; i < total; ++i) task(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int w = 0; w < threads; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= total) return;
                task(i);
            }
        });
    }
    for (auto& th : pool) th.join();
}

double median_of(std::vector<double> v) {
    if (v.empty()) return kNaN;
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

std::pair<double, double> mean_and_std(const std::vector<double>& v) {
    if (v.empty()) return {kNaN, kNaN};
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= v.size();
    if (v.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / (v.size() - 1))};
}

// Per-rho detector state reused across the inner trials of one outer draw.
struct FittedGridPoint {
    Matrix chol_l;        // lower Cholesky factor of C_hat(rho)
    Vector whitened_p;    // L^{-1} p
    double sigma2_hat = kNaN;
    double rho_bar_hat = kNaN;
};

struct TrialOutcome {
    bool ok = false;
    std::vector<double> sigma2_hat;              // per rho
    std::vector<double> rho_bar_hat;             // per rho
    std::vector<long long> exceed;               // rho-major, gamma-minor
    int star = -1;
    std::vector<long long> exceed_star;          // per gamma
    std::vector<long long> exceed_star_big;      // per big Gamma
    std::vector<std::vector<double>> samples;    // per rho (optional)
    double rho_star = kNaN;
};

// Fits every grid point on one secondary-data draw (warm-started along the
// grid) and packages the factors needed for fast GLRT evaluation.
std::vector<FittedGridPoint> fit_grid(const TrialPlan& plan, const Dataset& data) {
    std::vector<FittedGridPoint> grid(plan.rho_grid.size());
    std::optional<Matrix> warm;
    const double c = double(plan.model.dim()) / plan.count;
    for (std::size_t j = 0; j < plan.rho_grid.size(); ++j) {
        const double rho = plan.rho_grid[j];
        const auto param = ShrinkageParam::make(rho, plan.model.dim(), plan.count, plan.kappa);
        ScatterEstimate est = robust_shrinkage_fit(data, param, plan.solver, warm);
        warm = est.matrix;

        FittedGridPoint& pt = grid[j];
        Eigen::LLT<Matrix> llt(est.matrix);
        if (llt.info() != Eigen::Success)
            throw SingularEstimate("scatter estimate not positive definite");
        pt.chol_l = llt.matrixL();
        pt.whitened_p = plan.steering.p;
        llt.matrixL().solveInPlace(pt.whitened_p);

        if (rho == 1.0) {
            pt.rho_bar_hat = 1.0;
            pt.sigma2_hat = empirical_sigma2_at_one(data, plan.steering);
        } else {
            pt.rho_bar_hat = empirical_rho_bar(est);
            pt.sigma2_hat = empirical_sigma2(est, plan.steering, pt.rho_bar_hat, c);
        }
        if (!(pt.sigma2_hat > 0.0))
            throw DegenerateDenominator("plug-in variance is not positive");
    }
    return grid;
}

int argmin_sigma2(const std::vector<FittedGridPoint>& grid) {
    int best = -1;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        if (!std::isfinite(grid[j].sigma2_hat)) continue;
        if (best < 0 || grid[j].sigma2_hat < grid[best].sigma2_hat)
            best = static_cast<int>(j);  // ties keep the smaller rho
    }
    if (best < 0) throw AllPointsFailed();
    return best;
}

TrialOutcome run_far_trial(const TrialPlan& plan, int trial) {
    const int dim = plan.model.dim();
    const double sqrt_n = std::sqrt(double(dim));
    const std::size_t num_rho = plan.rho_grid.size();
    const std::size_t num_gamma = plan.gammas.size();

    TrialOutcome out;
    out.sigma2_hat.assign(num_rho, kNaN);
    out.rho_bar_hat.assign(num_rho, kNaN);
    out.exceed.assign(num_rho * num_gamma, 0);
    out.exceed_star.assign(num_gamma, 0);
    out.exceed_star_big.assign(plan.big_gammas.size(), 0);
    if (plan.collect_samples) out.samples.resize(num_rho);

    Dataset data = sample_dataset(plan.model, plan.count, plan.texture, plan.seed,
                                  static_cast<std::uint64_t>(trial));
    std::vector<FittedGridPoint> grid = fit_grid(plan, data);
    for (std::size_t j = 0; j < num_rho; ++j) {
        out.sigma2_hat[j] = grid[j].sigma2_hat;
        out.rho_bar_hat[j] = grid[j].rho_bar_hat;
        if (plan.collect_samples) out.samples[j].reserve(plan.inner_trials);
    }
    out.star = argmin_sigma2(grid);
    out.rho_star = plan.rho_grid[out.star];

    Vector whitened_y(dim);
    for (int i = 1; i <= plan.inner_trials; ++i) {
        RngStream rng(plan.seed, static_cast<std::uint64_t>(trial),
                      static_cast<std::uint64_t>(i));
        const Vector y = draw_h0_observation(plan.model, plan.texture, rng);
        for (std::size_t j = 0; j < num_rho; ++j) {
            whitened_y = y;
            grid[j].chol_l.triangularView<Eigen::Lower>().solveInPlace(whitened_y);
            const double t_val =
                std::abs(whitened_y.dot(grid[j].whitened_p)) /
                std::sqrt(whitened_y.squaredNorm() * grid[j].whitened_p.squaredNorm());
            const double scaled = sqrt_n * t_val;
            for (std::size_t g = 0; g < num_gamma; ++g)
                if (scaled > plan.gammas[g]) ++out.exceed[j * num_gamma + g];
            if (plan.collect_samples) out.samples[j].push_back(scaled);
            if (static_cast<int>(j) == out.star) {
                for (std::size_t g = 0; g < num_gamma; ++g)
                    if (scaled > plan.gammas[g]) ++out.exceed_star[g];
                for (std::size_t g = 0; g < plan.big_gammas.size(); ++g)
                    if (t_val > plan.big_gammas[g]) ++out.exceed_star_big[g];
            }
        }
    }
    out.ok = true;
    return out;
}

void validate_plan(const TrialPlan& plan) {
    if (plan.count < 1) throw Error("plan: n must be >= 1");
    if (plan.rho_grid.empty()) throw Error("plan: rho grid must be nonempty");
    if (plan.outer_trials < 1) throw Error("plan: outer_trials must be >= 1");
    const double lb = std::max(0.0, 1.0 - double(plan.count) / plan.model.dim());
    for (double rho : plan.rho_grid)
        if (!(rho >= lb + plan.kappa && rho <= 1.0))
            throw RhoOutOfRange("plan: grid point outside R_kappa");
}

}  // namespace

FarSweepResult run_far_sweep(const TrialPlan& plan, int threads) {
    validate_plan(plan);
    if (plan.inner_trials < 1) throw Error("plan: inner_trials must be >= 1");

    const std::size_t num_rho = plan.rho_grid.size();
    const std::size_t num_gamma = plan.gammas.size();
    const double c = double(plan.model.dim()) / plan.count;

    std::vector<TrialOutcome> outcomes(plan.outer_trials);
    run_parallel(plan.outer_trials, threads, [&](int t) {
        try {
            outcomes[t] = run_far_trial(plan, t);
        } catch (const Error&) {
            outcomes[t].ok = false;  // recorded below; the sweep continues
        }
    });

    FarSweepResult result;
    result.theory_sigma2.resize(num_rho);
    for (std::size_t j = 0; j < num_rho; ++j)
        result.theory_sigma2[j] =
            build_theory_context(plan.model, plan.steering, c, plan.rho_grid[j]).sigma2;

    // deterministic ordered reduction by trial index
    long long ok_trials = 0;
    for (const auto& o : outcomes) {
        if (o.ok)
            ++ok_trials;
        else
            ++result.failed_trials;
    }
    result.effective_trials = ok_trials * plan.inner_trials;
    if (ok_trials == 0) throw AllPointsFailed();

    if (plan.collect_samples) result.scaled_samples.resize(num_rho);
    result.sigma2_hat_mean.resize(num_rho);
    result.sigma2_hat_std.resize(num_rho);
    result.rho_bar_hat_mean.resize(num_rho);

    auto binom = [&](long long count) {
        const double p = double(count) / result.effective_trials;
        return std::pair<double, double>(
            p, std::sqrt(p * (1.0 - p) / result.effective_trials));
    };

    for (std::size_t j = 0; j < num_rho; ++j) {
        std::vector<double> s2, rb;
        for (const auto& o : outcomes) {
            if (!o.ok) continue;
            s2.push_back(o.sigma2_hat[j]);
            rb.push_back(o.rho_bar_hat[j]);
            if (plan.collect_samples)
                result.scaled_samples[j].insert(result.scaled_samples[j].end(),
                                                o.samples[j].begin(), o.samples[j].end());
        }
        auto [s2_mean, s2_std] = mean_and_std(s2);
        result.sigma2_hat_mean[j] = s2_mean;
        result.sigma2_hat_std[j] = s2_std;
        result.rho_bar_hat_mean[j] = mean_and_std(rb).first;

        for (std::size_t g = 0; g < num_gamma; ++g) {
            long long total = 0;
            std::vector<double> plugin;
            for (const auto& o : outcomes) {
                if (!o.ok) continue;
                total += o.exceed[j * num_gamma + g];
                plugin.push_back(rayleigh_tail(plan.gammas[g], o.sigma2_hat[j]));
            }
            FarPoint pt;
            pt.rho = plan.rho_grid[j];
            pt.gamma = plan.gammas[g];
            std::tie(pt.empirical, pt.stderr_) = binom(total);
            pt.theory = rayleigh_tail(plan.gammas[g], result.theory_sigma2[j]);
            std::tie(pt.plugin_mean, pt.plugin_std) = mean_and_std(plugin);
            result.points.push_back(pt);
        }
    }

    for (const auto& o : outcomes)
        if (o.ok) result.rho_star.push_back(o.rho_star);

    const double sqrt_n = std::sqrt(double(plan.model.dim()));
    for (std::size_t g = 0; g < num_gamma; ++g) {
        long long total = 0;
        std::vector<double> pred;
        for (const auto& o : outcomes) {
            if (!o.ok) continue;
            total += o.exceed_star[g];
            pred.push_back(rayleigh_tail(plan.gammas[g], o.sigma2_hat[o.star]));
        }
        AdaptiveFarPoint pt;
        pt.threshold = plan.gammas[g];
        std::tie(pt.empirical, pt.stderr_) = binom(total);
        std::tie(pt.predicted_mean, pt.predicted_std) = mean_and_std(pred);
        result.adaptive.push_back(pt);
    }
    for (std::size_t g = 0; g < plan.big_gammas.size(); ++g) {
        long long total = 0;
        std::vector<double> pred;
        for (const auto& o : outcomes) {
            if (!o.ok) continue;
            total += o.exceed_star_big[g];
            // P(T > Gamma) ~ exp(-N Gamma^2 / (2 sigma2_hat))
            pred.push_back(rayleigh_tail(sqrt_n * plan.big_gammas[g], o.sigma2_hat[o.star]));
        }
        AdaptiveFarPoint pt;
        pt.threshold = plan.big_gammas[g];
        std::tie(pt.empirical, pt.stderr_) = binom(total);
        std::tie(pt.predicted_mean, pt.predicted_std) = mean_and_std(pred);
        result.adaptive_unscaled.push_back(pt);
    }
    return result;
}

FitDiagnostics ks_distance_vs_rayleigh(std::vector<double> samples, double sigma) {
    if (samples.size() < 100) throw Error("KS diagnostic needs >= 100 samples");
    if (!(sigma > 0.0)) throw Error("sigma must be positive");

    auto cdf = [&](double t) {
        return t <= 0.0 ? 0.0 : 1.0 - std::exp(-t * t / (2.0 * sigma * sigma));
    };

    std::sort(samples.begin(), samples.end());
    const double n = double(samples.size());
    FitDiagnostics diag;
    diag.ks = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        diag.ks = std::max(diag.ks, std::max(f - double(i) / n, double(i + 1) / n - f));
    }

    // fixed bins, width 0.1 over [0, 5], matching the reference histograms
    const int num_bins = 50;
    const double width = 0.1;
    std::vector<long long> counts(num_bins, 0);
    for (double s : samples) {
        const int b = static_cast<int>(std::floor(s / width));
        if (b >= 0 && b < num_bins) ++counts[b];
    }
    for (int b = 0; b < num_bins; ++b) {
        HistogramBin bin;
        bin.left = b * width;
        bin.density = counts[b] / (n * width);
        const double center = bin.left + width / 2.0;
        bin.rayleigh_density =
            center / (sigma * sigma) * std::exp(-center * center / (2.0 * sigma * sigma));
        diag.histogram.push_back(bin);
    }
    for (int b = 0; b <= num_bins; ++b) {
        const double t = b * width;
        const double empirical =
            double(std::lower_bound(samples.begin(), samples.end(),
                                    std::nextafter(t, std::numeric_limits<double>::max())) -
                   samples.begin()) / n;
        diag.cdf.push_back({t, empirical, cdf(t)});
    }
    return diag;
}

RateReport convergence_probe(const ProbeConfig& cfg, int threads) {
    const int num_sizes = static_cast<int>(cfg.sizes.size());
    if (num_sizes < 2) throw Error("probe needs at least two sizes");
    if (cfg.num_seeds < 1) throw Error("probe needs at least one seed");

    struct SizeContext {
        CovarianceModel model;
        SteeringVector p;
        int count;
        double gamma;
    };
    std::vector<SizeContext> contexts;
    contexts.reserve(num_sizes);
    for (int dim : cfg.sizes) {
        SizeContext ctx{CovarianceModel::toeplitz_ar(cfg.toeplitz_a, dim),
                        uniform_steering(dim),
                        static_cast<int>(std::llround(dim / cfg.c)), 0.0};
        ctx.gamma = solve_gamma(ctx.model, cfg.rho);
        contexts.push_back(std::move(ctx));
    }

    struct Gap {
        double norm = kNaN;
        std::array<double, 4> bilinear{kNaN, kNaN, kNaN, kNaN};
    };
    std::vector<Gap> gaps(num_sizes * cfg.num_seeds);

    run_parallel(num_sizes * cfg.num_seeds, threads, [&](int task) {
        const int s = task / cfg.num_seeds;
        const int k = task % cfg.num_seeds;
        const SizeContext& ctx = contexts[s];
        const int dim = ctx.model.dim();
        const double c_n = double(dim) / ctx.count;

        Dataset data = sample_dataset(ctx.model, ctx.count, TextureModel::unit(), cfg.seed,
                                      (static_cast<std::uint64_t>(dim) << 32) |
                                          static_cast<std::uint64_t>(k));
        const auto param = ShrinkageParam::make(cfg.rho, dim, ctx.count, 1e-6);
        const ScatterEstimate est = robust_shrinkage_fit(data, param, cfg.solver);
        const Matrix s_hat = deterministic_equivalent(data, ctx.gamma, cfg.rho, c_n);

        Gap& gap = gaps[task];
        const Matrix diff = est.matrix - s_hat;
        Eigen::SelfAdjointEigenSolver<Matrix> eig(diff, Eigen::EigenvaluesOnly);
        gap.norm = eig.eigenvalues().cwiseAbs().maxCoeff();

        const Vector& p = ctx.p.p;
        Eigen::LLT<Matrix> llt_c(est.matrix), llt_s(s_hat);
        Vector wc = p, ws = p;
        llt_c.matrixL().solveInPlace(wc);
        llt_s.matrixL().solveInPlace(ws);
        Vector ic = wc, is = ws;
        llt_c.matrixU().solveInPlace(ic);  // C^{-1} p
        llt_s.matrixU().solveInPlace(is);

        // k order: {-2, -1, 1, 2}
        gap.bilinear[0] = std::abs(ic.squaredNorm() - is.squaredNorm());
        gap.bilinear[1] = std::abs(wc.squaredNorm() - ws.squaredNorm());
        gap.bilinear[2] = std::abs((p.adjoint() * diff * p).value().real());
        gap.bilinear[3] =
            std::abs((est.matrix * p).squaredNorm() - (s_hat * p).squaredNorm());
    });

    RateReport report;
    std::vector<double> log_n, log_norm;
    std::array<std::vector<double>, 4> log_bilinear;
    for (int s = 0; s < num_sizes; ++s) {
        RatePoint pt;
        pt.dim = cfg.sizes[s];
        std::vector<double> norms;
        std::array<std::vector<double>, 4> bil;
        for (int k = 0; k < cfg.num_seeds; ++k) {
            const Gap& g = gaps[s * cfg.num_seeds + k];
            norms.push_back(g.norm);
            for (int q = 0; q < 4; ++q) bil[q].push_back(g.bilinear[q]);
        }
        pt.norm_gap = median_of(norms);
        for (int q = 0; q < 4; ++q) pt.bilinear_gap[q] = median_of(bil[q]);
        report.points.push_back(pt);

        log_n.push_back(std::log(double(pt.dim)));
        log_norm.push_back(std::log(pt.norm_gap));
        for (int q = 0; q < 4; ++q) log_bilinear[q].push_back(std::log(pt.bilinear_gap[q]));
    }

    auto slope = [&](const std::vector<double>& ys) {
        const std::size_t n = log_n.size();
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < n; ++i) {
            sx += log_n[i];
            sy += ys[i];
            sxx += log_n[i] * log_n[i];
            sxy += log_n[i] * ys[i];
        }
        return (n * sxy - sx * sy) / (n * sxx - sx * sx);
    };
    report.norm_slope = slope(log_norm);
    for (int q = 0; q < 4; ++q) report.bilinear_slope[q] = slope(log_bilinear[q]);
    return report;
}

EstimatorErrorReport estimator_error_sweep(const TrialPlan& plan, int threads) {
    validate_plan(plan);
    const std::size_t num_rho = plan.rho_grid.size();
    const double c = double(plan.model.dim()) / plan.count;

    struct Row {
        bool ok = false;
        std::vector<double> sigma2_hat, rho_bar_hat;
    };
    std::vector<Row> rows(plan.outer_trials);
    run_parallel(plan.outer_trials, threads, [&](int t) {
        try {
            Dataset data = sample_dataset(plan.model, plan.count, plan.texture, plan.seed,
                                          static_cast<std::uint64_t>(t));
            auto grid = fit_grid(plan, data);
            Row& row = rows[t];
            for (const auto& pt : grid) {
                row.sigma2_hat.push_back(pt.sigma2_hat);
                row.rho_bar_hat.push_back(pt.rho_bar_hat);
            }
            row.ok = true;
        } catch (const Error&) {
        }
    });

    EstimatorErrorReport report;
    report.gammas = plan.gammas;
    for (const auto& r : rows)
        if (!r.ok) ++report.failed_trials;

    for (std::size_t j = 0; j < num_rho; ++j) {
        EstimatorErrorRow row;
        row.rho = plan.rho_grid[j];
        row.sigma2_theory =
            build_theory_context(plan.model, plan.steering, c, plan.rho_grid[j]).sigma2;

        std::vector<double> s2, rb, rel;
        for (const auto& r : rows) {
            if (!r.ok) continue;
            s2.push_back(r.sigma2_hat[j]);
            rb.push_back(r.rho_bar_hat[j]);
            rel.push_back(std::abs(r.sigma2_hat[j] - row.sigma2_theory) / row.sigma2_theory);
        }
        if (s2.empty()) throw AllPointsFailed();
        std::tie(row.sigma2_hat_mean, row.sigma2_hat_std) = mean_and_std(s2);
        row.rho_bar_hat_mean = mean_and_std(rb).first;
        row.sigma2_hat_median_rel_err = median_of(rel);
        for (double gamma : plan.gammas) {
            std::vector<double> plugin;
            for (double v : s2) plugin.push_back(rayleigh_tail(gamma, v));
            auto [pm, ps] = mean_and_std(plugin);
            row.plugin_far_mean.push_back(pm);
            row.plugin_far_std.push_back(ps);
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

}  // namespace tylershrink
