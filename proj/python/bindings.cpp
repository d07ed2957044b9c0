#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tylershrink/detector.hpp"
#include "tylershrink/errors.hpp"
#include "tylershrink/montecarlo.hpp"
#include "tylershrink/rmt.hpp"

namespace py = pybind11;
using namespace tylershrink;

namespace {

TextureModel texture_from_name(const std::string& law, double shape,
                               const std::vector<double>& values,
                               const std::vector<double>& weights) {
    if (law == "unit") return TextureModel::unit();
    if (law == "inverse_gamma") return TextureModel::inverse_gamma(shape);
    if (law == "discrete") return TextureModel::discrete(values, weights);
    throw Error("unknown texture law: " + law);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "robust shrinkage scatter estimation and GLRT detector calibration";

    py::register_exception<Error>(m, "TylershrinkError");

    py::class_<CovarianceModel>(m, "CovarianceModel")
        .def_property_readonly("dim", &CovarianceModel::dim)
        .def_property_readonly("matrix",
                               [](const CovarianceModel& c) { return c.matrix(); })
        .def_property_readonly("eigenvalues",
                               [](const CovarianceModel& c) { return c.eigenvalues(); })
        .def("__repr__", [](const CovarianceModel& c) {
            return "<CovarianceModel N=" + std::to_string(c.dim()) + ">";
        });

    m.def("identity_model", &CovarianceModel::identity, py::arg("dim"));
    m.def("toeplitz_ar_model", &CovarianceModel::toeplitz_ar, py::arg("a"), py::arg("dim"));
    m.def("model_from_matrix", &CovarianceModel::from_matrix, py::arg("matrix"));

    py::class_<SteeringVector>(m, "SteeringVector")
        .def_property_readonly("vector", [](const SteeringVector& s) { return s.p; });
    m.def("uniform_steering", &uniform_steering, py::arg("dim"));
    m.def("steering_from_vector", &steering_from_vector, py::arg("vector"));

    py::class_<Dataset>(m, "Dataset")
        .def_readonly("dim", &Dataset::dim)
        .def_readonly("count", &Dataset::count)
        .def_readonly("samples", &Dataset::samples)
        .def_readonly("has_truth", &Dataset::has_truth)
        .def_readonly("z", &Dataset::z)
        .def_readonly("tau", &Dataset::tau);

    m.def(
        "sample_dataset",
        [](const CovarianceModel& model, int count, std::uint64_t seed,
           const std::string& texture, double shape, const std::vector<double>& values,
           const std::vector<double>& weights, std::uint64_t stream) {
            return sample_dataset(model, count,
                                  texture_from_name(texture, shape, values, weights), seed,
                                  stream);
        },
        py::arg("model"), py::arg("count"), py::arg("seed"), py::arg("texture") = "unit",
        py::arg("shape") = 3.0, py::arg("values") = std::vector<double>{},
        py::arg("weights") = std::vector<double>{}, py::arg("stream") = 0);

    py::class_<ScatterEstimate>(m, "ScatterEstimate")
        .def_readonly("rho", &ScatterEstimate::rho)
        .def_readonly("matrix", &ScatterEstimate::matrix)
        .def_readonly("iterations_used", &ScatterEstimate::iterations_used)
        .def_readonly("final_residual", &ScatterEstimate::final_residual);

    m.def(
        "robust_shrinkage_fit",
        [](const Dataset& data, double rho, double tolerance, int max_iterations,
           double kappa) {
            const auto param = ShrinkageParam::make(rho, data.dim, data.count, kappa);
            return robust_shrinkage_fit(data, param, {tolerance, max_iterations});
        },
        py::arg("data"), py::arg("rho"), py::arg("tolerance") = 1e-9,
        py::arg("max_iterations") = 200, py::arg("kappa") = 1e-3);

    m.def(
        "robust_shrinkage_fit_samples",
        [](const Matrix& samples, double rho, double tolerance, int max_iterations,
           double kappa) {
            Dataset data;
            data.dim = static_cast<int>(samples.rows());
            data.count = static_cast<int>(samples.cols());
            data.samples = samples;
            const auto param = ShrinkageParam::make(rho, data.dim, data.count, kappa);
            return robust_shrinkage_fit(data, param, {tolerance, max_iterations});
        },
        py::arg("samples"), py::arg("rho"), py::arg("tolerance") = 1e-9,
        py::arg("max_iterations") = 200, py::arg("kappa") = 1e-3,
        "Fit from a complex N x n sample matrix (columns are observations).");

    m.def("sample_covariance", &sample_covariance, py::arg("data"));

    py::class_<GlrtStatistic>(m, "GlrtStatistic")
        .def_readonly("rho", &GlrtStatistic::rho)
        .def_readonly("value", &GlrtStatistic::value)
        .def_readonly("y_cinv_p", &GlrtStatistic::y_cinv_p)
        .def_readonly("y_cinv_y", &GlrtStatistic::y_cinv_y)
        .def_readonly("p_cinv_p", &GlrtStatistic::p_cinv_p);

    m.def("glrt_statistic", &glrt_statistic, py::arg("y"), py::arg("p"), py::arg("estimate"));
    m.def(
        "decide", [](const GlrtStatistic& s, double g) { return decide(s, g); },
        py::arg("statistic"), py::arg("threshold"));

    py::class_<TheoryContext>(m, "TheoryContext")
        .def_readonly("c", &TheoryContext::c)
        .def_readonly("rho", &TheoryContext::rho)
        .def_readonly("gamma", &TheoryContext::gamma)
        .def_readonly("alpha", &TheoryContext::alpha)
        .def_readonly("rho_bar", &TheoryContext::rho_bar)
        .def_readonly("m", &TheoryContext::m)
        .def_readonly("sigma2", &TheoryContext::sigma2);

    m.def("build_theory_context", &build_theory_context, py::arg("model"), py::arg("p"),
          py::arg("c"), py::arg("rho"));
    m.def("solve_gamma", [](const CovarianceModel& m_, double rho) {
        return solve_gamma(m_, rho);
    }, py::arg("model"), py::arg("rho"));
    m.def("rho_bar", &rho_bar, py::arg("rho"), py::arg("c"), py::arg("gamma"));
    m.def("solve_stieltjes", [](const CovarianceModel& m_, double rb, double c) {
        return solve_stieltjes(m_, rb, c);
    }, py::arg("model"), py::arg("rho_bar"), py::arg("c"));
    m.def("theoretical_sigma2", &theoretical_sigma2, py::arg("model"), py::arg("p"),
          py::arg("rho_bar"), py::arg("m"), py::arg("c"));
    m.def("rayleigh_tail", &rayleigh_tail, py::arg("gamma_threshold"), py::arg("sigma2"));

    m.def("empirical_rho_bar", &empirical_rho_bar, py::arg("estimate"));
    m.def("empirical_sigma2", &empirical_sigma2, py::arg("estimate"), py::arg("p"),
          py::arg("rho_bar"), py::arg("c"));
    m.def("empirical_sigma2_at_one", &empirical_sigma2_at_one, py::arg("data"), py::arg("p"));

    py::class_<RhoSweepResult>(m, "RhoSweepResult")
        .def_readonly("grid", &RhoSweepResult::grid)
        .def_readonly("rho_bar_hat", &RhoSweepResult::rho_bar_hat)
        .def_readonly("sigma2_hat", &RhoSweepResult::sigma2_hat)
        .def_readonly("selected_index", &RhoSweepResult::selected_index)
        .def_readonly("rho_star", &RhoSweepResult::rho_star);

    m.def(
        "select_rho_star",
        [](const Dataset& data, const SteeringVector& p, const std::vector<double>& grid,
           double tolerance, int max_iterations, double kappa) {
            return select_rho_star(data, p, grid, {tolerance, max_iterations}, kappa);
        },
        py::arg("data"), py::arg("p"), py::arg("grid"), py::arg("tolerance") = 1e-9,
        py::arg("max_iterations") = 200, py::arg("kappa") = 1e-3);

    py::class_<FitDiagnostics>(m, "FitDiagnostics")
        .def_readonly("ks", &FitDiagnostics::ks);
    m.def("ks_distance_vs_rayleigh", &ks_distance_vs_rayleigh, py::arg("samples"),
          py::arg("sigma"));

    py::class_<FarPoint>(m, "FarPoint")
        .def_readonly("rho", &FarPoint::rho)
        .def_readonly("gamma", &FarPoint::gamma)
        .def_readonly("empirical", &FarPoint::empirical)
        .def_readonly("stderr", &FarPoint::stderr_)
        .def_readonly("theory", &FarPoint::theory)
        .def_readonly("plugin_mean", &FarPoint::plugin_mean)
        .def_readonly("plugin_std", &FarPoint::plugin_std);

    py::class_<FarSweepResult>(m, "FarSweepResult")
        .def_readonly("points", &FarSweepResult::points)
        .def_readonly("rho_star", &FarSweepResult::rho_star)
        .def_readonly("sigma2_hat_mean", &FarSweepResult::sigma2_hat_mean)
        .def_readonly("theory_sigma2", &FarSweepResult::theory_sigma2)
        .def_readonly("effective_trials", &FarSweepResult::effective_trials)
        .def_readonly("failed_trials", &FarSweepResult::failed_trials);

    m.def(
        "run_far_sweep",
        [](const CovarianceModel& model, int count, const std::vector<double>& rho_grid,
           const std::vector<double>& gammas, int outer, int inner, std::uint64_t seed,
           const std::string& texture, double shape, int threads) {
            TrialPlan plan;
            plan.model = model;
            plan.steering = uniform_steering(model.dim());
            plan.count = count;
            plan.texture = texture_from_name(texture, shape, {}, {});
            plan.rho_grid = rho_grid;
            plan.gammas = gammas;
            plan.outer_trials = outer;
            plan.inner_trials = inner;
            plan.seed = seed;
            return run_far_sweep(plan, threads);
        },
        py::arg("model"), py::arg("count"), py::arg("rho_grid"), py::arg("gammas"),
        py::arg("outer") = 50, py::arg("inner") = 100, py::arg("seed") = 1,
        py::arg("texture") = "unit", py::arg("shape") = 3.0, py::arg("threads") = 0);

    m.attr("__version__") = "0.1.0";
}
