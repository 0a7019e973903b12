#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cqed/dispersion.hpp"
#include "cqed/drive.hpp"
#include "cqed/error.hpp"
#include "cqed/model.hpp"
#include "cqed/ode_oracle.hpp"
#include "cqed/scan.hpp"
#include "cqed/spectral_density.hpp"
#include "cqed/volterra.hpp"

namespace py = pybind11;
using namespace cqed;

namespace {

py::array_t<double> times_of(const TimeGrid& g) {
    py::array_t<double> out(static_cast<py::ssize_t>(g.size()));
    auto v = out.mutable_unchecked<1>();
    for (py::ssize_t i = 0; i < v.shape(0); ++i) v(i) = g.time(static_cast<std::size_t>(i));
    return out;
}

template <class T>
py::array_t<T> to_array(const std::vector<T>& xs) {
    return py::array_t<T>(static_cast<py::ssize_t>(xs.size()), xs.data());
}

py::dict table_dict(const Table& t) {
    py::dict d;
    for (std::size_t k = 0; k < t.columns.size(); ++k) {
        py::list col;
        for (const auto& r : t.rows) {
            if (const double* x = std::get_if<double>(&r[k])) {
                col.append(*x);
            } else {
                col.append(std::get<std::string>(r[k]));
            }
        }
        d[py::str(t.columns[k])] = col;
    }
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Cavity QED spin-ensemble solver";

    py::register_exception<Error>(m, "CqedError", PyExc_RuntimeError);

    m.def("mhz_to_angular", &mhz_to_angular, py::arg("f_mhz"));
    m.def("angular_to_mhz", &angular_to_mhz, py::arg("omega"));

    py::class_<SystemParams>(m, "SystemParams")
        .def(py::init<>())
        .def(py::init([](double omega_c, double omega_s, double omega_p, double kappa, double gamma, double Omega) {
                 return SystemParams{omega_c, omega_s, omega_p, kappa, gamma, Omega};
             }),
             py::arg("omega_c"), py::arg("omega_s"), py::arg("omega_p"), py::arg("kappa"), py::arg("gamma"),
             py::arg("Omega"))
        .def_readwrite("omega_c", &SystemParams::omega_c)
        .def_readwrite("omega_s", &SystemParams::omega_s)
        .def_readwrite("omega_p", &SystemParams::omega_p)
        .def_readwrite("kappa", &SystemParams::kappa)
        .def_readwrite("gamma", &SystemParams::gamma)
        .def_readwrite("Omega", &SystemParams::Omega)
        .def("__repr__", [](const SystemParams& p) {
            return "SystemParams(omega_c=" + std::to_string(p.omega_c) + ", Omega=" + std::to_string(p.Omega) + ")";
        });
    m.def("device_params", &device_params);
    m.def("validate", &validate, py::arg("params"));

    py::class_<TimeGrid>(m, "TimeGrid")
        .def_readonly("t_start", &TimeGrid::t_start)
        .def_readonly("t_end", &TimeGrid::t_end)
        .def_readonly("dt", &TimeGrid::dt)
        .def("__len__", &TimeGrid::size)
        .def_property_readonly("times", &times_of);
    m.def("make_grid", &make_grid, py::arg("t_start"), py::arg("t_end"), py::arg("dt"));

    py::enum_<DensityKind>(m, "DensityKind")
        .value("QGaussian", DensityKind::QGaussian)
        .value("Lorentzian", DensityKind::Lorentzian)
        .value("Gaussian", DensityKind::Gaussian);

    py::class_<SpectralDensity>(m, "SpectralDensity")
        .def_static("q_gaussian", &SpectralDensity::q_gaussian, py::arg("omega_s"), py::arg("q"), py::arg("delta"))
        .def_static("lorentzian", &SpectralDensity::lorentzian, py::arg("omega_s"), py::arg("hwhm"))
        .def_static("gaussian", &SpectralDensity::gaussian, py::arg("omega_s"), py::arg("delta"))
        .def_static("from_fwhm", &SpectralDensity::from_fwhm, py::arg("kind"), py::arg("omega_s"), py::arg("fwhm"),
                    py::arg("q") = 2.0)
        .def_property_readonly("kind", &SpectralDensity::kind)
        .def_property_readonly("omega_s", &SpectralDensity::omega_s)
        .def_property_readonly("q", &SpectralDensity::q)
        .def_property_readonly("delta", &SpectralDensity::delta)
        .def_property_readonly("norm_c", &SpectralDensity::norm_c)
        .def_property_readonly("fwhm", &SpectralDensity::fwhm)
        .def("__call__", [](const SpectralDensity& r, double w) { return r(w); }, py::arg("omega"))
        .def("__call__",
             [](const SpectralDensity& r, py::array_t<double, py::array::c_style | py::array::forcecast> w) {
                 py::array_t<double> out(w.request().shape);
                 const double* in = w.data();
                 double* dst = out.mutable_data();
                 for (py::ssize_t i = 0; i < w.size(); ++i) dst[i] = r(in[i]);
                 return out;
             },
             py::arg("omega"))
        .def("cdf", [](const SpectralDensity& r, double w) { return cdf(r, w); }, py::arg("omega"));
    m.def("normalization_constant", &normalization_constant, py::arg("q"), py::arg("delta"));
    m.def("sample_frequencies", [](const SpectralDensity& r, std::size_t n, std::uint64_t seed) {
        return to_array(sample_frequencies(r, n, seed));
    }, py::arg("rho"), py::arg("n"), py::arg("seed"));

    py::class_<DriveSegment>(m, "DriveSegment")
        .def(py::init([](double a, double b, std::complex<double> eta) { return DriveSegment{a, b, eta}; }),
             py::arg("t_start"), py::arg("t_end"), py::arg("eta"))
        .def_readonly("t_start", &DriveSegment::t_start)
        .def_readonly("t_end", &DriveSegment::t_end)
        .def_readonly("eta", &DriveSegment::eta);
    py::class_<DriveProtocol>(m, "DriveProtocol")
        .def(py::init<std::vector<DriveSegment>>(), py::arg("segments"))
        .def_property_readonly("segments", &DriveProtocol::segments)
        .def_property_readonly("t_begin", &DriveProtocol::t_begin)
        .def_property_readonly("t_end", &DriveProtocol::t_end)
        .def("amplitude_at", [](const DriveProtocol& p, double t) { return amplitude_at(p, t); }, py::arg("t"));
    m.def("rectangular", &rectangular, py::arg("eta"), py::arg("t_on"), py::arg("t_off"), py::arg("t_end"));
    m.def("phase_switched_train", &phase_switched_train, py::arg("eta"), py::arg("tau"), py::arg("n_pulses"),
          py::arg("t_end"));

    py::class_<CavityTrajectory>(m, "CavityTrajectory")
        .def_readonly("grid", &CavityTrajectory::grid)
        .def_property_readonly("t", [](const CavityTrajectory& c) { return times_of(c.grid); })
        .def_property_readonly("amplitude", [](const CavityTrajectory& c) { return to_array(c.amplitude); })
        .def_property_readonly("intensity", [](const CavityTrajectory& c) { return to_array(c.intensity()); });

    py::class_<QuadratureOptions>(m, "QuadratureOptions")
        .def(py::init<>())
        .def_readwrite("eps", &QuadratureOptions::eps)
        .def_readwrite("cap_hwhm", &QuadratureOptions::cap_hwhm)
        .def_readwrite("tolerance", &QuadratureOptions::tolerance);

    m.def("kernel_table", [](const SystemParams& p, const SpectralDensity& r, double dt, double horizon,
                             const QuadratureOptions& o) { return to_array(kernel_table(p, r, dt, horizon, o).values); },
          py::arg("params"), py::arg("rho"), py::arg("dt"), py::arg("horizon"), py::arg("options") = QuadratureOptions{});
    m.def("solve", [](const SystemParams& p, const SpectralDensity& r, const DriveProtocol& d, const TimeGrid& g,
                      const QuadratureOptions& o) { return solve(p, r, d, g, o); },
          py::arg("params"), py::arg("rho"), py::arg("protocol"), py::arg("grid"),
          py::arg("options") = QuadratureOptions{}, py::call_guard<py::gil_scoped_release>());

    m.def("ode_integrate", [](const SpectralDensity& r, std::size_t n, const SystemParams& p, const DriveProtocol& d,
                              const TimeGrid& g, std::uint64_t seed, bool stratified, int substeps) {
        return integrate(build_ensemble(r, n, p.Omega, seed, stratified), p, d, g, substeps).first;
    }, py::arg("rho"), py::arg("n_spins"), py::arg("params"), py::arg("protocol"), py::arg("grid"), py::arg("seed") = 1,
          py::arg("stratified") = true, py::arg("substeps") = 5, py::call_guard<py::gil_scoped_release>());
    m.def("lorentzian_reduction", &lorentzian_reduction, py::arg("params"), py::arg("delta"), py::arg("protocol"),
          py::arg("grid"), py::arg("substeps") = 10);

    py::class_<PolePair>(m, "PolePair")
        .def_readonly("s_plus", &PolePair::s_plus)
        .def_readonly("s_minus", &PolePair::s_minus)
        .def_readonly("converged", &PolePair::converged)
        .def_readonly("residual", &PolePair::residual)
        .def_property_readonly("rabi_splitting", &PolePair::rabi_splitting);
    m.def("dispersion_value", &dispersion_value, py::arg("s"), py::arg("params"), py::arg("rho"));
    m.def("find_poles", &find_poles, py::arg("params"), py::arg("rho"));
    m.def("gamma_asymptotic", &gamma_asymptotic, py::arg("params"), py::arg("rho"));
    m.def("gamma_markov", &gamma_markov, py::arg("params"), py::arg("rho"));
    m.def("gamma_lorentzian", &gamma_lorentzian, py::arg("delta"), py::arg("kappa"), py::arg("Omega"));
    m.def("extract_decay_rate", &extract_decay_rate, py::arg("trajectory"), py::arg("t_fit_start"));
    m.def("extract_rabi", &extract_rabi, py::arg("trajectory"), py::arg("t_from"), py::arg("t_to"),
          py::arg("rel_prominence") = 0.1);
    m.def("enhancement_factor", [](const CavityTrajectory& a, const CavityTrajectory& b, double from, double to,
                                   double cw_time) { return enhancement_factor(a, b, {from, to, cw_time}); },
          py::arg("pulsed"), py::arg("cw"), py::arg("pulsed_from"), py::arg("pulsed_to"), py::arg("cw_time"));

    py::class_<RunConfig>(m, "RunConfig")
        .def_readwrite("params", &RunConfig::params)
        .def_readonly("grid", &RunConfig::grid)
        .def_readwrite("output_path", &RunConfig::output_path)
        .def_readwrite("workers", &RunConfig::workers)
        .def_readwrite("seed", &RunConfig::seed)
        .def_property_readonly("density", &RunConfig::spectral_density)
        .def_property_readonly("protocol", &RunConfig::drive)
        .def_property_readonly("has_scan", [](const RunConfig& c) { return c.scan.has_value(); });
    m.def("load_config", &load_config, py::arg("path"));
    m.def("parse_config", &parse_config, py::arg("text"), py::arg("source") = "<string>");

    m.def("run_simulate", [](const RunConfig& c) {
        SimulationResult r;
        {
            py::gil_scoped_release release;
            r = run_simulate(c);
        }
        py::dict out = table_dict(r.table);
        py::dict summary;
        for (const auto& [k, v] : r.summary) summary[py::str(k)] = v;
        out["summary"] = summary;
        return out;
    }, py::arg("config"));
    m.def("run_scan", [](const RunConfig& c, int workers) {
        ScanResult r;
        {
            py::gil_scoped_release release;
            KernelCache cache;
            r = run_scan(c, workers, &cache);
        }
        py::dict out;
        out["summary"] = table_dict(r.summary);
        if (r.map) out["map"] = table_dict(*r.map);
        if (r.variable == ScanVariable::OmegaP) {
            try {
                out["peak_separation_mhz"] = peak_separation(r);
            } catch (const Error&) {
                out["peak_separation_mhz"] = py::none();
            }
        }
        return out;
    }, py::arg("config"), py::arg("workers") = 1);
    m.def("run_validate", [](const RunConfig& c) {
        ValidationReport r;
        {
            py::gil_scoped_release release;
            r = run_validate(c);
        }
        py::dict out = table_dict(r.table);
        out["passed"] = r.passed;
        return out;
    }, py::arg("config"));
    m.def("run_poles", [](const RunConfig& c) { return table_dict(run_poles(c)); }, py::arg("config"));
}
