#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "tylershrink/estimators.hpp"
#include "tylershrink/montecarlo.hpp"

namespace tylershrink {

// Metadata stamped as a single '#'-prefixed comment line on top of every CSV.
// No timestamps: identical plan + seed must give bitwise-identical files.
struct Provenance {
    std::string tool = "tylershrink";
    std::string version;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::string header_line() const;
};

std::uint64_t fnv1a64(const std::string& text);

const char* tool_version();

// Complex matrices go out as paired real columns c<j>_re, c<j>_im.
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m,
                      const Provenance& prov, const std::string& extra_comment = "");
Matrix read_matrix_csv(const std::filesystem::path& path);

// dataset.csv (x samples) + <stem>_meta.json + optional truth files
// <stem>_truth_z.csv / <stem>_truth_tau.csv next to it.
void write_dataset(const std::filesystem::path& csv_path, const Dataset& data,
                   const Provenance& prov, const std::string& model_json,
                   bool include_truth = true);
Dataset read_dataset(const std::filesystem::path& csv_path);

// Scatter estimate with rho / iterations / residual recorded in the header.
void write_scatter_csv(const std::filesystem::path& path, const ScatterEstimate& est,
                       const Provenance& prov);
ScatterEstimate read_scatter_csv(const std::filesystem::path& path);

void write_far_curve_csv(const std::filesystem::path& path, const FarSweepResult& result,
                         const std::vector<double>& rho_grid,
                         const std::vector<double>& gammas, const Provenance& prov);
void write_adaptive_far_csv(const std::filesystem::path& path, const FarSweepResult& result,
                            int dim, const Provenance& prov);
void write_histogram_csv(const std::filesystem::path& path, const FitDiagnostics& diag,
                         const Provenance& prov);
void write_rates_csv(const std::filesystem::path& path, const RateReport& report,
                     const Provenance& prov);

// Self-contained gnuplot script referencing the CSVs emitted by `validate`.
void write_plot_script(const std::filesystem::path& path, bool have_adaptive,
                       const Provenance& prov);

}  // namespace tylershrink
