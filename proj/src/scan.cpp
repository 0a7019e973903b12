#include "cqed/scan.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "cqed/error.hpp"
#include "cqed/ode_oracle.hpp"

namespace cqed {
namespace {

using json = nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Field access with dotted paths in every error message.
class Node {
public:
    Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

    const json& raw() const { return j_; }
    const std::string& path() const { return path_; }
    bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }

    std::string field(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

    [[noreturn]] void fail(const char* key, const std::string& why) const {
        throw Error(ErrorCode::ValidationError, "field '" + field(key) + "': " + why);
    }

    Node child(const char* key) const {
        if (!has(key)) fail(key, "required field is missing");
        if (!j_.at(key).is_object()) fail(key, "must be an object");
        return Node(j_.at(key), field(key));
    }

    double number(const char* key) const {
        if (!has(key)) fail(key, "required field is missing");
        const auto& v = j_.at(key);
        if (!v.is_number()) fail(key, "must be a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) fail(key, "must be finite");
        return x;
    }

    double number(const char* key, double fallback) const { return has(key) ? number(key) : fallback; }

    std::optional<double> optional_number(const char* key) const {
        if (!has(key)) return std::nullopt;
        return number(key);
    }

    double positive(const char* key) const {
        const double x = number(key);
        if (!(x > 0.0)) fail(key, "must be > 0");
        return x;
    }

    double non_negative(const char* key, double fallback) const {
        const double x = number(key, fallback);
        if (!(x >= 0.0)) fail(key, "must be >= 0");
        return x;
    }

    long long integer(const char* key, long long fallback, long long lo) const {
        if (!has(key)) return fallback;
        const auto& v = j_.at(key);
        if (!v.is_number_integer()) fail(key, "must be an integer");
        const long long x = v.get<long long>();
        if (x < lo) fail(key, "must be >= " + std::to_string(lo));
        return x;
    }

    std::string text(const char* key) const {
        if (!has(key)) fail(key, "required field is missing");
        if (!j_.at(key).is_string()) fail(key, "must be a string");
        return j_.at(key).get<std::string>();
    }

    bool flag(const char* key, bool fallback) const {
        if (!has(key)) return fallback;
        if (!j_.at(key).is_boolean()) fail(key, "must be true or false");
        return j_.at(key).get<bool>();
    }

    cplx complex_number(const char* key, cplx fallback) const {
        if (!has(key)) return fallback;
        const auto& v = j_.at(key);
        if (v.is_number()) return {v.get<double>(), 0.0};
        if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
            return {v[0].get<double>(), v[1].get<double>()};
        }
        fail(key, "must be a number or a [re, im] pair");
    }

    void allow_only(std::initializer_list<const char*> keys) const {
        for (const auto& [k, v] : j_.items()) {
            if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; })) {
                throw Error(ErrorCode::ValidationError,
                            "field '" + (path_.empty() ? k : path_ + "." + k) + "': unknown field");
            }
        }
    }

private:
    const json& j_;
    std::string path_;
};

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

SystemParams read_params(const Node& n) {
    n.allow_only({"omega_c_mhz", "omega_s_mhz", "omega_p_mhz", "kappa_mhz", "gamma_mhz", "Omega_mhz"});
    SystemParams p;
    p.omega_c = mhz_to_angular(n.positive("omega_c_mhz"));
    p.omega_s = mhz_to_angular(n.positive("omega_s_mhz"));
    p.omega_p = mhz_to_angular(n.positive("omega_p_mhz"));
    if (!n.has("kappa_mhz")) n.fail("kappa_mhz", "required field is missing");
    if (!n.has("Omega_mhz")) n.fail("Omega_mhz", "required field is missing");
    p.kappa = mhz_to_angular(n.non_negative("kappa_mhz", 0.0));
    p.gamma = mhz_to_angular(n.non_negative("gamma_mhz", 0.0));
    p.Omega = mhz_to_angular(n.non_negative("Omega_mhz", 0.0));
    return p;
}

DensitySpec read_density(const Node& n) {
    n.allow_only({"kind", "q", "fwhm_mhz"});
    DensitySpec d;
    const std::string kind = lower(n.text("kind"));
    if (kind == "qgaussian" || kind == "q_gaussian" || kind == "q-gaussian") {
        d.kind = DensityKind::QGaussian;
        d.q = n.number("q");
        if (!(d.q > 1.0 && d.q < 3.0)) n.fail("q", "must lie in (1, 3)");
    } else if (kind == "lorentzian") {
        d.kind = DensityKind::Lorentzian;
    } else if (kind == "gaussian") {
        d.kind = DensityKind::Gaussian;
    } else {
        n.fail("kind", "must be one of qgaussian, lorentzian, gaussian");
    }
    d.fwhm = mhz_to_angular(n.positive("fwhm_mhz"));
    return d;
}

ProtocolSpec read_protocol(const Node& n) {
    ProtocolSpec p;
    const std::string type = lower(n.text("type"));
    p.eta = n.complex_number("eta", {1.0, 0.0});
    if (type == "rectangular") {
        n.allow_only({"type", "eta", "t_on", "t_off", "t_end"});
        p.kind = ProtocolKind::Rectangular;
        p.t_on = n.non_negative("t_on", 0.0);
        p.t_off = n.number("t_off");
        p.t_end = n.number("t_end");
        if (!(p.t_off > p.t_on)) n.fail("t_off", "must exceed t_on");
        if (!(p.t_end >= p.t_off)) n.fail("t_end", "must be >= t_off");
    } else if (type == "phase_switched_train") {
        n.allow_only({"type", "eta", "tau", "n_pulses", "t_end"});
        p.kind = ProtocolKind::PhaseSwitchedTrain;
        p.tau = n.positive("tau");
        p.n_pulses = static_cast<int>(n.integer("n_pulses", 0, 1));
        if (!n.has("n_pulses")) n.fail("n_pulses", "required field is missing");
        p.t_end = n.number("t_end");
    } else if (type == "segments") {
        n.allow_only({"type", "segments"});
        p.kind = ProtocolKind::Segments;
        if (!n.has("segments") || !n.raw().at("segments").is_array() || n.raw().at("segments").empty()) {
            n.fail("segments", "must be a non-empty array");
        }
        std::size_t k = 0;
        for (const auto& s : n.raw().at("segments")) {
            const Node seg(s, n.field("segments") + "[" + std::to_string(k++) + "]");
            if (!s.is_object()) throw Error(ErrorCode::ValidationError, "field '" + seg.path() + "': must be an object");
            seg.allow_only({"t_start", "t_end", "eta"});
            p.segments.push_back({seg.number("t_start"), seg.number("t_end"), seg.complex_number("eta", {0.0, 0.0})});
        }
    } else {
        n.fail("type", "must be one of rectangular, phase_switched_train, segments");
    }
    try {
        (void)p.build();
    } catch (const Error& e) {
        throw Error(ErrorCode::ValidationError, "field '" + n.path() + "': " + e.what());
    }
    return p;
}

TimeGrid read_grid(const Node& n) {
    n.allow_only({"t_start", "t_end", "dt"});
    const double t0 = n.number("t_start", 0.0);
    const double t1 = n.number("t_end");
    const double dt = n.positive("dt");
    if (!(t1 > t0)) n.fail("t_end", "must exceed t_start");
    return make_grid(t0, t1, dt);
}

ScanAxis read_scan(const Node& n) {
    n.allow_only({"variable", "min", "max", "steps"});
    ScanAxis a;
    const std::string v = n.text("variable");
    if (v == "omega_p") {
        a.variable = ScanVariable::OmegaP;
    } else if (v == "Omega") {
        a.variable = ScanVariable::Omega;
    } else if (v == "tau") {
        a.variable = ScanVariable::Tau;
    } else {
        n.fail("variable", "must be one of omega_p, Omega, tau");
    }
    a.min = n.number("min");
    a.max = n.number("max");
    if (!n.has("steps")) n.fail("steps", "required field is missing");
    a.steps = static_cast<int>(n.integer("steps", 0, std::numeric_limits<int>::min()));
    if (a.steps < 2) n.fail("steps", "must be >= 2");
    if (!(a.max > a.min)) n.fail("max", "must exceed min");
    if (a.variable != ScanVariable::OmegaP && !(a.min > 0.0)) n.fail("min", "must be > 0");
    return a;
}

AnalysisSpec read_analysis(const Node& n) {
    n.allow_only({"t_fit_start", "rabi_window", "steady_time", "map_stride_ns", "cw_time", "enhancement"});
    AnalysisSpec a;
    a.t_fit_start = n.optional_number("t_fit_start");
    if (n.has("rabi_window")) {
        const auto& w = n.raw().at("rabi_window");
        if (!w.is_array() || w.size() != 2 || !w[0].is_number() || !w[1].is_number() ||
            !(w[1].get<double>() > w[0].get<double>())) {
            n.fail("rabi_window", "must be an increasing [from, to] pair");
        }
        a.rabi_window = std::pair{w[0].get<double>(), w[1].get<double>()};
    }
    a.steady_time = n.optional_number("steady_time");
    a.map_stride = n.has("map_stride_ns") ? n.positive("map_stride_ns") : 1.0;
    a.cw_time = n.has("cw_time") ? n.positive("cw_time") : 800.0;
    a.enhancement = n.flag("enhancement", false);
    return a;
}

ValidateSpec read_validate(const Node& n) {
    n.allow_only({"n_spins", "substeps", "stratified", "threshold", "t_compare_end", "convergence_sizes",
                  "lossless_drive_off", "lossless_t_end", "conservation_threshold"});
    ValidateSpec v;
    v.n_spins = static_cast<std::size_t>(n.integer("n_spins", 0, 1));
    v.substeps = static_cast<int>(n.integer("substeps", 5, 1));
    v.stratified = n.flag("stratified", true);
    v.threshold = n.has("threshold") ? n.positive("threshold") : 2e-2;
    v.t_compare_end = n.optional_number("t_compare_end");
    if (n.has("convergence_sizes")) {
        const auto& arr = n.raw().at("convergence_sizes");
        if (!arr.is_array()) n.fail("convergence_sizes", "must be an array of integers");
        for (const auto& x : arr) {
            if (!x.is_number_integer() || x.get<long long>() < 1) n.fail("convergence_sizes", "entries must be >= 1");
            v.convergence_sizes.push_back(static_cast<std::size_t>(x.get<long long>()));
        }
    }
    v.lossless_drive_off = n.has("lossless_drive_off") ? n.positive("lossless_drive_off") : 10.0;
    v.lossless_t_end = n.has("lossless_t_end") ? n.positive("lossless_t_end") : 500.0;
    if (!(v.lossless_t_end > v.lossless_drive_off)) n.fail("lossless_t_end", "must exceed lossless_drive_off");
    v.conservation_threshold = n.has("conservation_threshold") ? n.positive("conservation_threshold") : 1e-8;
    return v;
}

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

double to_mhz(double rate) { return angular_to_mhz(rate); }

std::size_t nearest_index(const TimeGrid& grid, double t) {
    const double x = std::round((t - grid.t_start) / grid.dt);
    if (x <= 0.0) return 0;
    return std::min(grid.size() - 1, static_cast<std::size_t>(x));
}

std::size_t stride_of(const TimeGrid& grid, double stride_ns) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(stride_ns / grid.dt)));
}

CavityTrajectory solve_with(const SystemParams& params, const SpectralDensity& rho, const DriveProtocol& protocol,
                            const TimeGrid& grid, KernelCache* cache) {
    if (cache == nullptr) return solve(params, rho, protocol, grid);
    const auto kernel = cache->get(params, rho, grid.dt, grid.t_end - grid.t_start);
    return solve(params, *kernel, protocol, grid);
}

double default_switch_off(const RunConfig& c) {
    if (c.protocol.kind == ProtocolKind::Rectangular) return c.protocol.t_off;
    if (c.protocol.kind == ProtocolKind::PhaseSwitchedTrain) return c.protocol.tau * c.protocol.n_pulses;
    return c.grid.t_end;
}

double last_drive_time(const DriveProtocol& p) {
    double t = p.t_begin();
    for (const auto& s : p.segments()) {
        if (s.eta != cplx(0.0, 0.0)) t = s.t_end;
    }
    return t;
}

CavityTrajectory cw_reference(const RunConfig& c, const SpectralDensity& rho, KernelCache* cache) {
    const TimeGrid grid = make_grid(0.0, c.analysis.cw_time, c.grid.dt);
    return solve_with(c.params, rho, rectangular(c.protocol.eta, 0.0, c.analysis.cw_time, c.analysis.cw_time), grid,
                      cache);
}

std::string status_of(const Error& e) { return std::string(to_string(e.code())); }

struct PointOutput {
    std::vector<Cell> row;
    std::vector<std::vector<Cell>> map_rows;
};

void append_map(PointOutput& out, double axis, const CavityTrajectory& traj, std::size_t stride) {
    for (std::size_t i = 0; i < traj.amplitude.size(); i += stride) {
        out.map_rows.push_back({axis, traj.grid.time(i), std::norm(traj.amplitude[i])});
    }
}

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string csv_text(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

SpectralDensity DensitySpec::build(double omega_s) const {
    return SpectralDensity::from_fwhm(kind, omega_s, fwhm, q);
}

DriveProtocol ProtocolSpec::build(std::optional<double> tau_override) const {
    switch (kind) {
        case ProtocolKind::Rectangular:
            return rectangular(eta, t_on, t_off, t_end);
        case ProtocolKind::PhaseSwitchedTrain:
            return phase_switched_train(eta, tau_override.value_or(tau), n_pulses, t_end);
        case ProtocolKind::Segments:
            return DriveProtocol(segments);
    }
    return {};
}

std::vector<double> ScanAxis::values() const {
    std::vector<double> v(static_cast<std::size_t>(steps));
    for (int k = 0; k < steps; ++k) v[k] = min + (max - min) * k / (steps - 1);
    return v;
}

RunConfig parse_config(const std::string& text, const std::string& source) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_column(text, e.byte);
        throw Error(ErrorCode::ParseError,
                    source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": invalid JSON");
    }
    if (!j.is_object()) throw Error(ErrorCode::ParseError, source + ":1:1: top level must be a JSON object");

    const Node root(j, "");
    root.allow_only({"params", "density", "protocol", "grid", "scan", "output", "seed", "workers", "analysis",
                     "validate", "description"});
    RunConfig c;
    c.params = read_params(root.child("params"));
    c.density = read_density(root.child("density"));
    c.protocol = read_protocol(root.child("protocol"));
    c.grid = read_grid(root.child("grid"));
    if (root.has("scan")) c.scan = read_scan(root.child("scan"));
    if (root.has("output")) {
        if (j.at("output").is_string()) {
            c.output_path = j.at("output").get<std::string>();
        } else {
            const Node out = root.child("output");
            out.allow_only({"path", "format"});
            c.output_path = out.text("path");
            if (out.has("format")) {
                const std::string f = lower(out.text("format"));
                if (f == "csv") {
                    c.format = OutputFormat::Csv;
                } else if (f == "json") {
                    c.format = OutputFormat::Json;
                } else if (f == "both") {
                    c.format = OutputFormat::Both;
                } else {
                    out.fail("format", "must be csv, json or both");
                }
            }
        }
    }
    c.seed = static_cast<std::uint64_t>(root.integer("seed", 1, 0));
    c.workers = static_cast<int>(root.integer("workers", 1, 1));
    if (root.has("analysis")) c.analysis = read_analysis(root.child("analysis"));
    if (root.has("validate")) c.validate = read_validate(root.child("validate"));

    try {
        (void)c.spectral_density();
    } catch (const Error& e) {
        throw Error(ErrorCode::ValidationError, std::string("field 'density': ") + e.what());
    }
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::ValidationError, "cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.string());
}

std::vector<double> Table::column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw Error(ErrorCode::ValidationError, "no column named " + name);
    const auto k = static_cast<std::size_t>(it - columns.begin());
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        const double* x = std::get_if<double>(&r[k]);
        out.push_back(x != nullptr ? *x : kNaN);
    }
    return out;
}

std::string to_csv(const Table& table, const std::string& comment) {
    std::string out;
    if (!comment.empty()) out += "# " + comment + "\n";
    for (std::size_t k = 0; k < table.columns.size(); ++k) {
        if (k > 0) out += ',';
        out += csv_text(table.columns[k]);
    }
    out += '\n';
    for (const auto& r : table.rows) {
        for (std::size_t k = 0; k < r.size(); ++k) {
            if (k > 0) out += ',';
            if (const double* x = std::get_if<double>(&r[k])) {
                out += format_number(*x);
            } else {
                out += csv_text(std::get<std::string>(r[k]));
            }
        }
        out += '\n';
    }
    return out;
}

void write_csv(const Table& table, const std::filesystem::path& path, const std::string& comment) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::ValidationError, "cannot write " + path.string());
    out << to_csv(table, comment);
}

void write_json(const Table& table, const std::filesystem::path& path) {
    json rows = json::array();
    for (const auto& r : table.rows) {
        json row = json::array();
        for (const auto& cell : r) {
            if (const double* x = std::get_if<double>(&cell)) {
                row.push_back(std::isfinite(*x) ? json(*x) : json(nullptr));
            } else {
                row.push_back(std::get<std::string>(cell));
            }
        }
        rows.push_back(std::move(row));
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::ValidationError, "cannot write " + path.string());
    out << json{{"columns", table.columns}, {"rows", rows}}.dump(1) << '\n';
}

SimulationResult run_simulate(const RunConfig& c, KernelCache* cache) {
    if (c.scan) throw Error(ErrorCode::ValidationError, "field 'scan': simulate takes no scan axis");
    const SpectralDensity rho = c.spectral_density();
    SimulationResult r;
    r.protocol = c.drive();
    r.trajectory = solve_with(c.params, rho, r.protocol, c.grid, cache);

    r.table.columns = {"t_ns", "re_A", "im_A", "abs_A2", "eta_re", "eta_im"};
    r.table.rows.reserve(r.trajectory.amplitude.size());
    for (std::size_t i = 0; i < r.trajectory.amplitude.size(); ++i) {
        const double t = c.grid.time(i);
        const cplx a = r.trajectory.amplitude[i];
        const cplx eta = amplitude_at(r.protocol, std::min(t, r.protocol.t_end()));
        r.table.rows.push_back({t, a.real(), a.imag(), std::norm(a), eta.real(), eta.imag()});
    }

    const auto& an = c.analysis;
    if (an.rabi_window) {
        try {
            const auto [omega_r, t_r] = extract_rabi(r.trajectory, an.rabi_window->first, an.rabi_window->second);
            r.summary.emplace_back("t_r_ns", t_r);
            r.summary.emplace_back("omega_r_mhz", to_mhz(omega_r));
        } catch (const Error&) {
            r.summary.emplace_back("t_r_ns", kNaN);
        }
    }
    if (an.t_fit_start) {
        try {
            r.summary.emplace_back("gamma_mhz", to_mhz(extract_decay_rate(r.trajectory, *an.t_fit_start)));
        } catch (const Error&) {
            r.summary.emplace_back("gamma_mhz", kNaN);
        }
    }
    if (an.enhancement) {
        try {
            const CavityTrajectory cw = cw_reference(c, rho, cache);
            r.summary.emplace_back(
                "enhancement", enhancement_factor(r.trajectory, cw, {r.protocol.t_begin(), last_drive_time(r.protocol),
                                                                     an.cw_time}));
        } catch (const Error&) {
            r.summary.emplace_back("enhancement", kNaN);
        }
    }
    return r;
}

bool ScanResult::all_ok() const {
    const auto it = std::find(summary.columns.begin(), summary.columns.end(), "status");
    if (it == summary.columns.end()) return true;
    const auto k = static_cast<std::size_t>(it - summary.columns.begin());
    return std::all_of(summary.rows.begin(), summary.rows.end(),
                       [&](const auto& r) { return std::get<std::string>(r[k]) == "ok"; });
}

ScanResult run_scan(const RunConfig& c, int workers, KernelCache* cache) {
    if (!c.scan) throw Error(ErrorCode::ValidationError, "field 'scan': required for the scan command");
    const ScanAxis& axis = *c.scan;
    const SpectralDensity rho = c.spectral_density();
    const std::size_t stride = stride_of(c.grid, c.analysis.map_stride);

    ScanResult result;
    result.variable = axis.variable;
    result.axis = axis.values();
    std::function<PointOutput(double)> point;

    switch (axis.variable) {
        case ScanVariable::OmegaP: {
            result.summary.columns = {"omega_p_mhz", "detuning_mhz", "steady_abs_A2", "status"};
            result.map = Table{{"omega_p_mhz", "t_ns", "abs_A2"}, {}};
            const double t_steady = c.analysis.steady_time.value_or(default_switch_off(c));
            const DriveProtocol protocol = c.drive();
            point = [&, t_steady, protocol](double f) {
                SystemParams p = c.params;
                p.omega_p = mhz_to_angular(f);
                const double detuning = f - angular_to_mhz(c.params.omega_c);
                PointOutput out;
                try {
                    const auto traj = solve_with(p, rho, protocol, c.grid, cache);
                    out.row = {f, detuning, std::norm(traj.amplitude[nearest_index(c.grid, t_steady)]), "ok"};
                    append_map(out, f, traj, stride);
                } catch (const Error& e) {
                    out.row = {f, detuning, kNaN, status_of(e)};
                }
                return out;
            };
            break;
        }
        case ScanVariable::Omega: {
            result.summary.columns = {"Omega_mhz",         "gamma_mhz",
                                      "omega_r_mhz",       "gamma_markov_mhz",
                                      "gamma_lorentzian_1_mhz", "gamma_lorentzian_2_mhz",
                                      "gamma_asymptotic_mhz", "status"};
            const double t_fit = c.analysis.t_fit_start.value_or(default_switch_off(c));
            const DriveProtocol protocol = c.drive();
            const double lorentz_hwhm = 0.5 * rho.fwhm();
            point = [&, t_fit, protocol, lorentz_hwhm](double f) {
                SystemParams p = c.params;
                p.Omega = mhz_to_angular(f);
                const auto [l1, l2] = gamma_lorentzian(lorentz_hwhm, p.kappa, p.Omega);
                std::vector<Cell> theory{to_mhz(gamma_markov(p, rho)), to_mhz(-2.0 * l1.real()),
                                         to_mhz(-2.0 * l2.real()), to_mhz(gamma_asymptotic(p, rho))};
                double rate = kNaN;
                double rabi = kNaN;
                std::string status = "ok";
                try {
                    const auto traj = solve_with(p, rho, protocol, c.grid, cache);
                    rate = to_mhz(extract_decay_rate(traj, t_fit));
                    try {
                        rabi = to_mhz(extract_rabi(traj, t_fit, c.grid.t_end).first);
                    } catch (const Error&) {
                    }
                } catch (const Error& e) {
                    status = status_of(e);
                }
                PointOutput out;
                out.row = {f, rate, rabi};
                out.row.insert(out.row.end(), theory.begin(), theory.end());
                out.row.emplace_back(status);
                return out;
            };
            break;
        }
        case ScanVariable::Tau: {
            if (c.protocol.kind != ProtocolKind::PhaseSwitchedTrain) {
                throw Error(ErrorCode::ValidationError, "field 'protocol.type': tau scans need phase_switched_train");
            }
            result.summary.columns = {"tau_ns", "late_peak_abs_A2", "late_peak_ratio", "status"};
            result.map = Table{{"tau_ns", "t_ns", "abs_A2"}, {}};
            const CavityTrajectory cw = cw_reference(c, rho, cache);
            const double cw_level = std::norm(cw.amplitude.back());
            const int n = c.protocol.n_pulses;
            point = [&, cw_level, n](double tau) {
                PointOutput out;
                try {
                    const DriveProtocol protocol = c.protocol.build(tau);
                    const auto traj = solve_with(c.params, rho, protocol, c.grid, cache);
                    const std::size_t lo = nearest_index(c.grid, (n >= 2 ? n - 2 : 0) * tau);
                    const std::size_t hi = nearest_index(c.grid, n * tau);
                    double peak = 0.0;
                    for (std::size_t i = lo; i <= hi; ++i) peak = std::max(peak, std::norm(traj.amplitude[i]));
                    out.row = {tau, peak, peak / cw_level, "ok"};
                    append_map(out, tau, traj, stride);
                } catch (const Error& e) {
                    out.row = {tau, kNaN, kNaN, status_of(e)};
                }
                return out;
            };
            break;
        }
    }

    auto points = parallel_map<PointOutput>(result.axis.size(), workers,
                                            [&](std::size_t i) { return point(result.axis[i]); });
    for (auto& pt : points) {
        result.summary.rows.push_back(std::move(pt.row));
        if (result.map) {
            for (auto& r : pt.map_rows) result.map->rows.push_back(std::move(r));
        }
    }
    return result;
}

double peak_separation(const ScanResult& result) {
    if (result.variable != ScanVariable::OmegaP) {
        throw Error(ErrorCode::ValidationError, "peak separation needs an omega_p scan");
    }
    const auto x = result.summary.column("omega_p_mhz");
    const auto y = result.summary.column("steady_abs_A2");
    std::vector<std::pair<double, double>> peaks;  // (height, position)
    for (std::size_t i = 1; i + 1 < y.size(); ++i) {
        if (!(y[i] > y[i - 1] && y[i] >= y[i + 1])) continue;
        const double curv = y[i - 1] - 2.0 * y[i] + y[i + 1];
        const double shift = curv != 0.0 ? 0.5 * (y[i - 1] - y[i + 1]) / curv : 0.0;
        peaks.emplace_back(y[i], x[i] + shift * (x[i + 1] - x[i]));
    }
    if (peaks.size() < 2) throw Error(ErrorCode::NotSplit, "fewer than two transmission maxima");
    std::sort(peaks.begin(), peaks.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    return std::abs(peaks[0].second - peaks[1].second);
}

ValidationReport run_validate(const RunConfig& c) {
    const ValidateSpec& v = c.validate;
    if (v.n_spins == 0) throw Error(ErrorCode::ValidationError, "field 'validate.n_spins': required field is missing");
    const SpectralDensity rho = c.spectral_density();
    const DriveProtocol protocol = c.drive();
    const CavityTrajectory volterra = solve(c.params, rho, protocol, c.grid);
    const std::size_t n_cmp = nearest_index(c.grid, v.t_compare_end.value_or(c.grid.t_end)) + 1;
    const std::vector<cplx> reference(volterra.amplitude.begin(),
                                      volterra.amplitude.begin() + static_cast<std::ptrdiff_t>(n_cmp));

    auto distance = [&](std::size_t n_spins) {
        const auto ens = build_ensemble(rho, n_spins, c.params.Omega, c.seed, v.stratified);
        const auto traj = integrate(ens, c.params, protocol, c.grid, v.substeps).first;
        const std::vector<cplx> a(traj.amplitude.begin(), traj.amplitude.begin() + static_cast<std::ptrdiff_t>(n_cmp));
        return std::pair{relative_l2(a, reference), ks_distance(ens, rho)};
    };

    ValidationReport report;
    report.table.columns = {"metric", "value", "threshold", "status"};
    auto& rows = report.table.rows;
    bool ok = true;

    const auto [main_d, main_ks] = distance(v.n_spins);
    const std::string tag = "_N" + std::to_string(v.n_spins);
    const bool main_ok = main_d < v.threshold;
    ok = ok && main_ok;
    rows.push_back({"relative_l2" + tag, main_d, v.threshold, main_ok ? "PASS" : "FAIL"});
    rows.push_back({"ks_distance" + tag, main_ks, kNaN, "info"});

    if (!v.convergence_sizes.empty()) {
        std::vector<std::pair<std::size_t, double>> trend{{v.n_spins, main_d}};
        for (const std::size_t n : v.convergence_sizes) {
            const double d = distance(n).first;
            trend.emplace_back(n, d);
            rows.push_back({"relative_l2_N" + std::to_string(n), d, kNaN, "info"});
        }
        std::sort(trend.begin(), trend.end());
        bool monotone = true;
        for (std::size_t k = 1; k < trend.size(); ++k) monotone = monotone && trend[k].second <= trend[k - 1].second;
        ok = ok && monotone;
        rows.push_back({"convergence_monotone", monotone ? 1.0 : 0.0, 1.0, monotone ? "PASS" : "FAIL"});
    }

    SystemParams lossless = c.params;
    lossless.kappa = 0.0;
    lossless.gamma = 0.0;
    const auto ens = build_ensemble(rho, v.n_spins, lossless.Omega, c.seed, v.stratified);
    const TimeGrid driven = make_grid(0.0, v.lossless_drive_off, c.grid.dt);
    const auto on = integrate(ens, lossless, rectangular(c.protocol.eta, 0.0, v.lossless_drive_off, v.lossless_drive_off),
                              driven, v.substeps);
    const TimeGrid free = make_grid(v.lossless_drive_off, v.lossless_t_end, c.grid.dt);
    const auto off = integrate(ens, lossless, DriveProtocol({{v.lossless_drive_off, v.lossless_t_end, 0.0}}), free,
                               v.substeps, on.second);
    const double e0 = total_excitation(on.second);
    const double drift = std::abs(total_excitation(off.second) - e0) / e0;
    const bool drift_ok = drift < v.conservation_threshold;
    ok = ok && drift_ok;
    rows.push_back({"lossless_drift", drift, v.conservation_threshold, drift_ok ? "PASS" : "FAIL"});

    report.passed = ok;
    return report;
}

Table run_poles(const RunConfig& c) {
    const SpectralDensity rho = c.spectral_density();
    std::vector<double> axis{kNaN};
    std::string axis_name;
    if (c.scan && c.scan->variable != ScanVariable::Tau) {
        axis = c.scan->values();
        axis_name = c.scan->variable == ScanVariable::Omega ? "Omega_mhz" : "omega_p_mhz";
    }
    Table t;
    if (!axis_name.empty()) t.columns.push_back(axis_name);
    for (const char* col : {"s_plus_re", "s_plus_im", "s_minus_re", "s_minus_im", "gamma_plus_mhz", "gamma_minus_mhz",
                            "omega_r_mhz", "t_r_ns", "gamma_asymptotic_mhz", "gamma_markov_mhz", "residual", "status"}) {
        t.columns.emplace_back(col);
    }
    for (const double x : axis) {
        SystemParams p = c.params;
        if (axis_name == "Omega_mhz") p.Omega = mhz_to_angular(x);
        if (axis_name == "omega_p_mhz") p.omega_p = mhz_to_angular(x);
        std::vector<Cell> row;
        if (!axis_name.empty()) row.emplace_back(x);
        try {
            const PolePair pp = find_poles(p, rho);
            const double split = pp.rabi_splitting();
            for (double val : {pp.s_plus.real(), pp.s_plus.imag(), pp.s_minus.real(), pp.s_minus.imag(),
                               to_mhz(pp.decay_rate_plus()), to_mhz(pp.decay_rate_minus()), to_mhz(split),
                               2.0 * std::numbers::pi / split}) {
                row.emplace_back(val);
            }
            row.emplace_back(to_mhz(gamma_asymptotic(p, rho)));
            row.emplace_back(to_mhz(gamma_markov(p, rho)));
            row.emplace_back(pp.residual);
            row.emplace_back(pp.converged ? "ok" : "NoConvergence");
        } catch (const Error& e) {
            for (int k = 0; k < 8; ++k) row.emplace_back(kNaN);
            row.emplace_back(to_mhz(gamma_asymptotic(p, rho)));
            row.emplace_back(to_mhz(gamma_markov(p, rho)));
            row.emplace_back(kNaN);
            row.emplace_back(status_of(e));
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

}  // namespace cqed
