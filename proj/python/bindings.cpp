#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "xxz/analysis.hpp"
#include "xxz/columnar.hpp"
#include "xxz/error.hpp"
#include "xxz/evolution.hpp"
#include "xxz/experiments.hpp"
#include "xxz/groundstate.hpp"
#include "xxz/model.hpp"
#include "xxz/observables.hpp"
#include "xxz/oracle.hpp"

namespace py = pybind11;
using namespace xxz;

namespace {

py::array_t<double> matrix(const std::vector<std::vector<double>>& rows) {
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  py::array_t<double> out({rows.size(), cols});
  auto a = out.mutable_unchecked<2>();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols; ++c) a(r, c) = rows[r][c];
  }
  return out;
}

py::dict trajectory_dict(const Trajectory& t) {
  py::dict d;
  d["times"] = py::array_t<double>(t.times.size(), t.times.data());
  d["z_profiles"] = matrix(t.z_profiles);
  d["currents"] = matrix(t.currents);
  d["norms"] = py::array_t<double>(t.norms.size(), t.norms.data());
  d["discarded_weights"] = py::array_t<double>(t.discarded_weights.size(), t.discarded_weights.data());
  d["total_z"] = py::array_t<double>(t.total_z.size(), t.total_z.data());
  d["max_bonds"] = std::vector<long long>(t.max_bonds.begin(), t.max_bonds.end());
  d["hopping"] = t.hopping;
  d["quality_warning"] = t.quality_warning;
  d["continuity_residual_max"] = t.continuity_residual_max;
  return d;
}

py::object column_value(const Column& c) {
  if (const auto* v = std::get_if<std::vector<double>>(&c.data)) {
    py::array_t<double> a(v->size(), v->data());
    if (c.shape.size() == 2) a = a.reshape({c.shape[0], c.shape[1]});
    return a;
  }
  if (const auto* v = std::get_if<std::vector<std::int64_t>>(&c.data)) {
    py::array_t<std::int64_t> a(v->size(), v->data());
    if (c.shape.size() == 2) a = a.reshape({c.shape[0], c.shape[1]});
    return a;
  }
  return py::cast(std::get<std::vector<std::string>>(c.data));
}

py::object json_loads(const std::string& text) { return py::module_::import("json").attr("loads")(text); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "TEBD simulator and transport analysis for an XXZ chain between interacting leads.";

  py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_IOError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);

  py::class_<ChainSpec>(m, "ChainSpec")
      .def(py::init([](int n_bath, int n_sys, double hopping, double u_bath, double u_sys) {
             ChainSpec s{n_bath, n_sys, hopping, u_bath, u_sys};
             s.validate();
             return s;
           }),
           py::arg("n_bath"), py::arg("n_sys"), py::arg("hopping") = 1.0, py::arg("u_bath") = 0.0,
           py::arg("u_sys") = 0.0)
      .def_static("with_default_leads", &ChainSpec::with_default_leads, py::arg("n_sys"), py::arg("hopping") = 1.0,
                  py::arg("u_bath") = 0.0, py::arg("u_sys") = 0.0)
      .def_readwrite("n_bath", &ChainSpec::n_bath)
      .def_readwrite("n_sys", &ChainSpec::n_sys)
      .def_readwrite("hopping", &ChainSpec::hopping)
      .def_readwrite("u_bath", &ChainSpec::u_bath)
      .def_readwrite("u_sys", &ChainSpec::u_sys)
      .def_property_readonly("length", &ChainSpec::length)
      .def("__repr__", [](const ChainSpec& s) {
        return "ChainSpec(n_bath=" + std::to_string(s.n_bath) + ", n_sys=" + std::to_string(s.n_sys) +
               ", hopping=" + std::to_string(s.hopping) + ", u_bath=" + std::to_string(s.u_bath) +
               ", u_sys=" + std::to_string(s.u_sys) + ")";
      });

  m.def("bond_coupling", &bond_coupling, py::arg("spec"), py::arg("bond"));
  m.def("two_site_term", &two_site_term, py::arg("hopping"), py::arg("zz"));

  m.def(
      "ground_state",
      [](int n_sys, double hopping, double u_sys, Index max_bond, double svd_cutoff, double tol, bool allow_odd) {
        GroundStateOptions opt;
        opt.allow_odd = allow_odd;
        const GroundStateResult r = find_ground_state(n_sys, hopping, u_sys, {max_bond, svd_cutoff}, tol, opt);
        py::dict d;
        d["energy"] = r.energy;
        d["converged"] = r.converged;
        d["iterations"] = r.iterations;
        d["variance_estimate"] = r.variance_estimate;
        d["monotone"] = r.monotone;
        d["rung_energies"] = r.rung_energies;
        return d;
      },
      py::arg("n_sys"), py::arg("hopping") = 1.0, py::arg("u_sys") = 0.0, py::arg("max_bond") = 256,
      py::arg("svd_cutoff") = 1e-14, py::arg("tol") = 1e-10, py::arg("allow_odd") = false,
      "Imaginary-time TEBD ground state of the isolated system chain.");

  m.def(
      "simulate",
      [](const ChainSpec& spec, double dt, double t_max, Index max_bond, double svd_cutoff, int record_stride,
         double gs_tol) {
        const GroundStateResult gs = find_ground_state(spec.n_sys, spec.hopping, spec.u_sys, {256, 1e-14}, gs_tol);
        if (!gs.converged) throw ConvergenceError("ground state did not converge");
        RunParams p;
        p.dt = dt;
        p.t_max = t_max;
        p.trunc = {max_bond, svd_cutoff};
        p.record_stride = record_stride;
        py::gil_scoped_release release;
        EvolutionResult r = evolve(initial_state(spec, gs.state), spec, p);
        py::gil_scoped_acquire acquire;
        return trajectory_dict(r.trajectory);
      },
      py::arg("spec"), py::arg("dt") = 0.05, py::arg("t_max") = 1.0, py::arg("max_bond") = 128,
      py::arg("svd_cutoff") = 1e-10, py::arg("record_stride") = 1, py::arg("gs_tol") = 1e-10,
      "Quench from the all-up/ground/all-down state and return the recorded observables.");

  m.def(
      "exact_currents",
      [](const ChainSpec& spec, const std::vector<double>& times, double gs_tol) {
        if (static_cast<std::size_t>(spec.length()) > oracle::kMaxSites) {
          throw InvalidInput("exact reference limited to " + std::to_string(oracle::kMaxSites) + " sites");
        }
        const GroundStateResult gs = find_ground_state(spec.n_sys, spec.hopping, spec.u_sys, {256, 1e-14}, gs_tol);
        const oracle::DenseState psi0 = oracle::to_dense(initial_state(spec, gs.state));
        const oracle::SectorSpectrum spectrum(chain_couplings(spec));
        std::vector<std::vector<double>> rows;
        for (double t : times) {
          const oracle::DenseState psi = spectrum.evolve(psi0, t);
          std::vector<double> row;
          for (int i = 0; i + 1 < spec.length(); ++i) {
            row.push_back(oracle::dense_current(psi, spec.hopping, static_cast<std::size_t>(i)));
          }
          rows.push_back(std::move(row));
        }
        return matrix(rows);
      },
      py::arg("spec"), py::arg("times"), py::arg("gs_tol") = 1e-12,
      "Bond currents from exact evolution of the same initial state.");

  m.def("xx_ground_energy", &oracle::xx_ground_energy, py::arg("n"), py::arg("hopping") = 1.0);

  py::enum_<DecayFamily>(m, "DecayFamily")
      .value("power_law", DecayFamily::power_law)
      .value("exponential", DecayFamily::exponential);
  py::enum_<DecayPreference>(m, "DecayPreference")
      .value("power_law", DecayPreference::power_law)
      .value("exponential", DecayPreference::exponential)
      .value("indeterminate", DecayPreference::indeterminate);
  py::enum_<SpectralWindow>(m, "SpectralWindow")
      .value("hann", SpectralWindow::hann)
      .value("rectangular", SpectralWindow::rectangular);

  py::class_<FitReport>(m, "FitReport")
      .def_readonly("family", &FitReport::family)
      .def_readonly("amplitude", &FitReport::amplitude)
      .def_readonly("exponent", &FitReport::exponent)
      .def_readonly("residual", &FitReport::residual)
      .def_property_readonly("window", [](const FitReport& f) { return py::make_tuple(f.window.lo, f.window.hi); })
      .def_readonly("n_points", &FitReport::n_points)
      .def_readonly("n_dropped", &FitReport::n_dropped)
      .def_readonly("flagged", &FitReport::flagged);
  py::class_<DecayClassification>(m, "DecayClassification")
      .def_readonly("preferred", &DecayClassification::preferred)
      .def_readonly("power_law", &DecayClassification::power_law)
      .def_readonly("exponential", &DecayClassification::exponential);
  py::class_<Spectrum>(m, "Spectrum")
      .def_readonly("frequencies", &Spectrum::frequencies)
      .def_readonly("magnitudes", &Spectrum::magnitudes)
      .def_readonly("window_start", &Spectrum::window_start)
      .def_readonly("sample_spacing", &Spectrum::sample_spacing);
  py::class_<Peak>(m, "Peak")
      .def(py::init<double, double>(), py::arg("frequency"), py::arg("magnitude"))
      .def_readonly("frequency", &Peak::frequency)
      .def_readonly("magnitude", &Peak::magnitude);
  py::class_<PeakSet>(m, "PeakSet")
      .def(py::init<std::optional<Peak>, std::optional<Peak>, std::optional<Peak>>(), py::arg("low") = py::none(),
           py::arg("medium") = py::none(), py::arg("high") = py::none())
      .def_readonly("low", &PeakSet::low)
      .def_readonly("medium", &PeakSet::medium)
      .def_readonly("high", &PeakSet::high);
  py::class_<AlphaFit>(m, "AlphaFit")
      .def_readonly("alpha_freq", &AlphaFit::alpha_freq)
      .def_readonly("residual", &AlphaFit::residual)
      .def_readonly("n_peaks", &AlphaFit::n_peaks);

  auto window = [](std::pair<double, double> w) { return FitWindow{w.first, w.second}; };
  m.def(
      "fit_power_law",
      [window](std::vector<double> x, std::vector<double> y, std::pair<double, double> w, double floor) {
        return fit_power_law(x, y, window(w), floor);
      },
      py::arg("x"), py::arg("y"), py::arg("window"), py::arg("floor") = kFitFloor);
  m.def(
      "fit_exponential",
      [window](std::vector<double> x, std::vector<double> y, std::pair<double, double> w, double floor) {
        return fit_exponential(x, y, window(w), floor);
      },
      py::arg("x"), py::arg("y"), py::arg("window"), py::arg("floor") = kFitFloor);
  m.def(
      "classify_decay",
      [window](std::vector<double> t, std::vector<double> v, std::pair<double, double> w) {
        return classify_decay(t, v, window(w));
      },
      py::arg("times"), py::arg("values"), py::arg("window"));
  m.def(
      "time_average",
      [](std::vector<double> t, std::vector<double> v, double tau2, double t_end) {
        return time_average(t, v, tau2, t_end);
      },
      py::arg("times"), py::arg("values"), py::arg("tau2"), py::arg("t_end"));
  m.def(
      "s_line",
      [](double s) {
        const Couplings c = s_line(s);
        return py::make_tuple(c.u_bath, c.u_sys);
      },
      py::arg("s"));
  m.def(
      "spectrum",
      [](std::vector<double> t, std::vector<double> v, double t_start, SpectralWindow w) {
        return spectrum(t, v, t_start, w);
      },
      py::arg("times"), py::arg("values"), py::arg("t_start"), py::arg("window") = SpectralWindow::hann);
  m.def("extract_peaks", &extract_peaks, py::arg("spectrum"), py::arg("prominence") = 3.0);
  m.def(
      "frequency_model",
      [](double u, double hopping, double alpha) {
        const Frequencies f = frequency_model(u, hopping, alpha);
        return py::make_tuple(f.low, f.medium, f.high);
      },
      py::arg("u"), py::arg("hopping"), py::arg("alpha_freq"));
  m.def(
      "fit_alpha",
      [](const std::vector<std::tuple<double, PeakSet>>& obs, double hopping) {
        std::vector<PeakObservation> v;
        for (const auto& [u, peaks] : obs) v.push_back({u, hopping, peaks});
        return fit_alpha(v);
      },
      py::arg("observations"), py::arg("hopping") = 1.0, "observations: list of (U, PeakSet)");

  m.def("preset_names", &preset_names);
  m.def(
      "preset_config", [](const std::string& name) { return json_loads(config_to_json(preset_config(name))); },
      py::arg("name"));
  m.def(
      "resolve_config", [](const std::string& text) { return json_loads(config_to_json(parse_config(text))); },
      py::arg("config_json"), "Validate a JSON config and return it with defaults filled in.");
  m.def(
      "run_id", [](const std::string& text) { return run_id(parse_config(text)); }, py::arg("config_json"));
  m.def(
      "run_single",
      [](const std::string& text) {
        const ExperimentConfig c = parse_config(text);
        GroundStateCache cache(std::filesystem::path(c.output_dir) / "ground_states");
        RunOutput out;
        {
          py::gil_scoped_release release;
          out = run_single(c, cache);
        }
        py::dict d;
        d["record"] = json_loads(record_to_json(out.record));
        d["trajectory"] = trajectory_dict(out.trajectory);
        d["reused"] = out.reused;
        d["directory"] = run_directory(c).string();
        return d;
      },
      py::arg("config_json"));
  m.def(
      "run_sweep",
      [](const std::string& text) {
        const ExperimentConfig c = parse_config(text);
        SweepResult res;
        {
          py::gil_scoped_release release;
          res = run_sweep(c);
        }
        py::list out;
        for (const RunRecord& r : res.records) out.append(json_loads(record_to_json(r)));
        return out;
      },
      py::arg("config_json"));
  m.def(
      "import_records",
      [](const std::filesystem::path& path) {
        py::list out;
        for (const RunRecord& r : import_records(path)) out.append(json_loads(record_to_json(r)));
        return out;
      },
      py::arg("path"));
  m.def(
      "load_columnar",
      [](const std::filesystem::path& path) {
        py::dict d;
        for (const Column& c : load_columnar(path).columns) d[py::str(c.name)] = column_value(c);
        return d;
      },
      py::arg("path"));
}
