#include "tylershrink/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "tylershrink/errors.hpp"

namespace tylershrink {

namespace {

using nlohmann::json;

// 17 significant digits: doubles round-trip exactly through the data files.
std::string fmt(double v, int digits = 17) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
    return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write: " + path.string());
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read: " + path.string());
    return in;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    return fields;
}

// Reads a CSV body (after any '#' comment lines and the header) as doubles.
std::vector<std::vector<double>> read_numeric_csv(std::istream& in, std::string* comment_line) {
    std::vector<std::vector<double>> rows;
    std::string line;
    bool header_skipped = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '#') {
            if (comment_line && comment_line->empty()) *comment_line = line;
            continue;
        }
        if (!header_skipped) {
            header_skipped = true;
            continue;
        }
        std::vector<double> row;
        for (const auto& f : split_csv_line(line)) row.push_back(std::stod(f));
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_complex_matrix_body(std::ofstream& out, const Matrix& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        out << (j ? "," : "") << "c" << j << "_re,c" << j << "_im";
    }
    out << "\n";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ",";
            out << fmt(m(i, j).real()) << "," << fmt(m(i, j).imag());
        }
        out << "\n";
    }
}

Matrix matrix_from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw IoError("matrix CSV has no data rows");
    const auto cols = rows.front().size();
    if (cols % 2 != 0) throw IoError("matrix CSV must have re/im column pairs");
    Matrix m(rows.size(), cols / 2);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != cols) throw IoError("ragged matrix CSV");
        for (std::size_t j = 0; j < cols / 2; ++j)
            m(i, j) = {rows[i][2 * j], rows[i][2 * j + 1]};
    }
    return m;
}

}  // namespace

const char* tool_version() { return "0.1.0"; }

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::string Provenance::header_line() const {
    std::ostringstream out;
    out << "#tool=" << tool << ";version=" << version << ";config_hash=" << std::hex
        << config_hash << std::dec << ";seed=" << seed;
    return out.str();
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m,
                      const Provenance& prov, const std::string& extra_comment) {
    auto out = open_out(path);
    out << prov.header_line() << "\n";
    if (!extra_comment.empty()) out << "#" << extra_comment << "\n";
    write_complex_matrix_body(out, m);
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
    auto in = open_in(path);
    return matrix_from_rows(read_numeric_csv(in, nullptr));
}

void write_dataset(const std::filesystem::path& csv_path, const Dataset& data,
                   const Provenance& prov, const std::string& model_json,
                   bool include_truth) {
    write_matrix_csv(csv_path, data.samples, prov);

    json meta;
    meta["N"] = data.dim;
    meta["n"] = data.count;
    meta["has_truth"] = data.has_truth && include_truth;
    meta["tool"] = prov.tool;
    meta["version"] = prov.version;
    meta["seed"] = prov.seed;
    if (!model_json.empty()) meta["model"] = json::parse(model_json);

    std::filesystem::path stem = csv_path;
    stem.replace_extension();
    auto meta_out = open_out(stem.string() + "_meta.json");
    meta_out << meta.dump(2) << "\n";

    if (data.has_truth && include_truth) {
        write_matrix_csv(stem.string() + "_truth_z.csv", data.z, prov);
        auto tau_out = open_out(stem.string() + "_truth_tau.csv");
        tau_out << prov.header_line() << "\n" << "tau\n";
        for (int i = 0; i < data.count; ++i) tau_out << fmt(data.tau(i)) << "\n";
    }
}

Dataset read_dataset(const std::filesystem::path& csv_path) {
    Dataset data;
    data.samples = read_matrix_csv(csv_path);
    data.dim = static_cast<int>(data.samples.rows());
    data.count = static_cast<int>(data.samples.cols());

    std::filesystem::path stem = csv_path;
    stem.replace_extension();
    const std::filesystem::path meta_path = stem.string() + "_meta.json";
    if (std::filesystem::exists(meta_path)) {
        auto in = open_in(meta_path);
        json meta = json::parse(in);
        if (meta.value("has_truth", false)) {
            data.z = read_matrix_csv(stem.string() + "_truth_z.csv");
            auto tau_in = open_in(stem.string() + "_truth_tau.csv");
            auto rows = read_numeric_csv(tau_in, nullptr);
            data.tau.resize(rows.size());
            for (std::size_t i = 0; i < rows.size(); ++i) data.tau(i) = rows[i][0];
            data.has_truth = true;
        }
    }
    return data;
}

void write_scatter_csv(const std::filesystem::path& path, const ScatterEstimate& est,
                       const Provenance& prov) {
    auto out = open_out(path);
    out << prov.header_line() << "\n";
    out << "#rho=" << fmt(est.rho) << ";iterations=" << est.iterations_used
        << ";residual=" << fmt(est.final_residual, 6) << "\n";
    write_complex_matrix_body(out, est.matrix);
}

ScatterEstimate read_scatter_csv(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::string line, meta;
    std::ostringstream body;
    while (std::getline(in, line)) {
        if (!line.empty() && line.front() == '#') {
            if (line.rfind("#rho=", 0) == 0) meta = line;
            continue;
        }
        body << line << "\n";
    }
    if (meta.empty()) throw IoError("scatter CSV lacks the rho header: " + path.string());

    ScatterEstimate est;
    std::stringstream fields(meta.substr(1));
    std::string kv;
    while (std::getline(fields, kv, ';')) {
        const auto eq = kv.find('=');
        const std::string key = kv.substr(0, eq);
        const std::string value = kv.substr(eq + 1);
        if (key == "rho") est.rho = std::stod(value);
        if (key == "iterations") est.iterations_used = std::stoi(value);
        if (key == "residual") est.final_residual = std::stod(value);
    }
    std::istringstream body_in(body.str());
    est.matrix = matrix_from_rows(read_numeric_csv(body_in, nullptr));
    return est;
}

void write_far_curve_csv(const std::filesystem::path& path, const FarSweepResult& result,
                         const std::vector<double>& /*rho_grid*/,
                         const std::vector<double>& /*gammas*/, const Provenance& prov) {
    auto out = open_out(path);
    out << prov.header_line() << "\n";
    out << "rho,gamma,empirical,stderr,theory,plugin_mean,plugin_std\n";
    for (const auto& pt : result.points) {
        out << fmt(pt.rho, 12) << "," << fmt(pt.gamma, 12) << "," << fmt(pt.empirical, 12)
            << "," << fmt(pt.stderr_, 12) << "," << fmt(pt.theory, 12) << ","
            << fmt(pt.plugin_mean, 12) << "," << fmt(pt.plugin_std, 12) << "\n";
    }
}

void write_adaptive_far_csv(const std::filesystem::path& path, const FarSweepResult& result,
                            int dim, const Provenance& prov) {
    auto out = open_out(path);
    out << prov.header_line() << "\n";
    out << "threshold,scaled,empirical,stderr,predicted_mean,predicted_std\n";
    for (const auto& pt : result.adaptive) {
        out << fmt(pt.threshold, 12) << ",1," << fmt(pt.empirical, 12) << ","
            << fmt(pt.stderr_, 12) << "," << fmt(pt.predicted_mean, 12) << ","
            << fmt(pt.predicted_std, 12) << "\n";
    }
    for (const auto& pt : result.adaptive_unscaled) {
        out << fmt(pt.threshold, 12) << ",0," << fmt(pt.empirical, 12) << ","
            << fmt(pt.stderr_, 12) << "," << fmt(pt.predicted_mean, 12) << ","
            << fmt(pt.predicted_std, 12) << "\n";
    }
    (void)dim;
}

void write_histogram_csv(const std::filesystem::path& path, const FitDiagnostics& diag,
                         const Provenance& prov) {
    auto out = open_out(path);
    out << prov.header_line() << "\n";
    out << "#ks=" << fmt(diag.ks, 6) << "\n";
    out << "bin_left,density,rayleigh_density\n";
    for (const auto& bin : diag.histogram)
        out << fmt(bin.left, 12) << "," << fmt(bin.density, 12) << ","
            << fmt(bin.rayleigh_density, 12) << "\n";
}

void write_rates_csv(const std::filesystem::path& path, const RateReport& report,
                     const Provenance& prov) {
    auto out = open_out(path);
    out << prov.header_line() << "\n";
    out << "#norm_slope=" << fmt(report.norm_slope, 6);
    for (int q = 0; q < 4; ++q)
        out << ";bilinear_slope_k" << kProbePowers[q] << "="
            << fmt(report.bilinear_slope[q], 6);
    out << "\n";
    out << "N,norm_gap,bilinear_gap_km2,bilinear_gap_km1,bilinear_gap_kp1,bilinear_gap_kp2\n";
    for (const auto& pt : report.points) {
        out << pt.dim << "," << fmt(pt.norm_gap, 12);
        for (int q = 0; q < 4; ++q) out << "," << fmt(pt.bilinear_gap[q], 12);
        out << "\n";
    }
}

void write_plot_script(const std::filesystem::path& path, bool have_adaptive,
                       const Provenance& prov) {
    auto out = open_out(path);
    out << prov.header_line() << "\n";
    out << R"gp(# gnuplot script; run from the directory holding the CSVs:  gnuplot plots.gp
set datafile separator ","
set datafile commentschars "#"
set terminal pngcairo size 900,600

set output "far_curve.png"
set logscale y
set xlabel "rho"
set ylabel "P(sqrt(N) T > gamma)"
plot "far_curve.csv" using 1:3 with points pt 7 title "empirical", \
     "far_curve.csv" using 1:5 with lines title "limiting theory", \
     "far_curve.csv" using 1:6:7 with yerrorbars pt 6 title "plug-in estimator"

set output "histogram.png"
unset logscale y
set xlabel "sqrt(N) T"
set ylabel "density"
plot "histogram.csv" using ($1+0.05):2 with boxes title "empirical", \
     "histogram.csv" using ($1+0.05):3 with lines lw 2 title "Rayleigh"

set output "rates.png"
set logscale xy
set xlabel "N"
set ylabel "median gap"
plot "rates.csv" using 1:2 with linespoints title "||Chat - Shat||", \
     "rates.csv" using 1:4 with linespoints title "|p*(Chat^{-1} - Shat^{-1})p|"
)gp";
    if (have_adaptive) {
        out << R"gp(
set output "far_adaptive.png"
unset logscale x
set logscale y
set xlabel "threshold"
set ylabel "P(T(rho*) > threshold)"
plot "far_adaptive.csv" using 1:3 with points pt 7 title "empirical", \
     "far_adaptive.csv" using 1:5 with lines title "plug-in prediction"
)gp";
    }
}

}  // namespace tylershrink
