#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "cqed/dispersion.hpp"
#include "cqed/drive.hpp"
#include "cqed/model.hpp"
#include "cqed/spectral_density.hpp"
#include "cqed/volterra.hpp"

namespace cqed {

// Config files use MHz (cycle frequencies) and ns; everything below is converted
// to rad/ns on load except scan axis values, which stay in file units.

struct DensitySpec {
    DensityKind kind = DensityKind::QGaussian;
    double q = 2.0;
    double fwhm = 0.0;  ///< rad/ns

    SpectralDensity build(double omega_s) const;
};

enum class ProtocolKind { Rectangular, PhaseSwitchedTrain, Segments };

struct ProtocolSpec {
    ProtocolKind kind = ProtocolKind::Rectangular;
    cplx eta{1.0, 0.0};
    double t_on = 0.0;
    double t_off = 0.0;
    double t_end = 0.0;
    double tau = 0.0;
    int n_pulses = 0;
    std::vector<DriveSegment> segments;

    /// `tau` overrides the pulse length of a train.
    DriveProtocol build(std::optional<double> tau = {}) const;
};

enum class ScanVariable { OmegaP, Omega, Tau };

struct ScanAxis {
    ScanVariable variable = ScanVariable::OmegaP;
    double min = 0.0;  ///< MHz for omega_p and Omega, ns for tau
    double max = 0.0;
    int steps = 2;

    std::vector<double> values() const;
};

enum class OutputFormat { Csv, Json, Both };

struct AnalysisSpec {
    std::optional<double> t_fit_start;
    std::optional<std::pair<double, double>> rabi_window;
    std::optional<double> steady_time;
    double map_stride = 1.0;  ///< ns between map samples
    double cw_time = 800.0;   ///< CW reference sample for enhancement ratios
    bool enhancement = false;
};

struct ValidateSpec {
    std::size_t n_spins = 0;
    int substeps = 5;
    bool stratified = true;
    double threshold = 2e-2;
    std::optional<double> t_compare_end;
    std::vector<std::size_t> convergence_sizes;
    double lossless_drive_off = 10.0;
    double lossless_t_end = 500.0;
    double conservation_threshold = 1e-8;
};

struct RunConfig {
    SystemParams params;
    DensitySpec density;
    ProtocolSpec protocol;
    TimeGrid grid;
    std::optional<ScanAxis> scan;
    std::string output_path = "out.csv";
    OutputFormat format = OutputFormat::Csv;
    std::uint64_t seed = 1;
    int workers = 1;
    AnalysisSpec analysis;
    ValidateSpec validate;

    SpectralDensity spectral_density() const { return density.build(params.omega_s); }
    DriveProtocol drive() const { return protocol.build(); }
};

/// Throws ParseError (with line and column) or ValidationError (naming the field).
RunConfig parse_config(const std::string& text, const std::string& source = "<string>");
RunConfig load_config(const std::filesystem::path& path);

using Cell = std::variant<double, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    /// Numeric column by name; string cells read as NaN. Throws ValidationError for unknown names.
    std::vector<double> column(const std::string& name) const;
};

/// UTF-8, comma separated, header row; an optional leading "# ..." line.
void write_csv(const Table& table, const std::filesystem::path& path, const std::string& comment = {});
/// {"columns": [...], "rows": [[...], ...]}
void write_json(const Table& table, const std::filesystem::path& path);
std::string to_csv(const Table& table, const std::string& comment = {});

struct SimulationResult {
    CavityTrajectory trajectory;
    DriveProtocol protocol;
    Table table;  ///< t_ns, re_A, im_A, abs_A2, eta_re, eta_im
    std::vector<std::pair<std::string, double>> summary;
};

SimulationResult run_simulate(const RunConfig& config, KernelCache* cache = nullptr);

struct ScanResult {
    ScanVariable variable = ScanVariable::OmegaP;
    std::vector<double> axis;
    Table summary;              ///< one ordered row per axis value with a status column
    std::optional<Table> map;   ///< |A|^2 over (axis, t) for omega_p and tau scans

    bool all_ok() const;
};

/// Runs every axis point on `workers` threads. Per-point failures are recorded
/// in the status column. A null cache disables kernel sharing.
ScanResult run_scan(const RunConfig& config, int workers, KernelCache* cache);

/// Distance between the two largest transmission maxima of an omega_p scan (MHz).
/// Throws NotSplit when fewer than two maxima are present.
double peak_separation(const ScanResult& result);

struct ValidationReport {
    Table table;  ///< metric, value, threshold, status
    bool passed = false;
};

ValidationReport run_validate(const RunConfig& config);

/// Poles and closed-form rates; one row per axis value for omega_p and Omega scans.
Table run_poles(const RunConfig& config);

/// Applies fn(i) for i in [0, n) on up to `workers` threads; result order is by index.
template <class T, class F>
std::vector<T> parallel_map(std::size_t n, int workers, F&& fn);

}  // namespace cqed

#include "cqed/detail/parallel.hpp"
