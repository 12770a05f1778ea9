#include "xxz/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <tuple>
#include <thread>

#include "json.hpp"
#include "xxz/checkpoint.hpp"
#include "xxz/observables.hpp"

namespace xxz {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void require_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw InvalidInput("config: '" + where + "' must be an object");
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) throw InvalidInput("config: unknown key '" + where + "." + key + "'");
  }
}

template <typename T>
void read_if(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("config: bad value for '") + key + "': " + e.what());
  }
}

std::string window_name(SpectralWindow w) { return w == SpectralWindow::hann ? "hann" : "rectangular"; }

SpectralWindow window_from(const std::string& s) {
  if (s == "hann") return SpectralWindow::hann;
  if (s == "rectangular") return SpectralWindow::rectangular;
  throw InvalidInput("config: unknown spectral window '" + s + "'");
}

std::vector<double> number_list(const json& j, const std::string& key) {
  if (!j.is_array()) throw InvalidInput("config: sweep." + key + " must be a list");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw InvalidInput("config: sweep." + key + " must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::vector<int> size_list(const json& sweep, int fallback) {
  if (!sweep.contains("n_sys")) return {fallback};
  std::vector<int> out;
  for (double v : number_list(sweep.at("n_sys"), "n_sys")) {
    if (v != std::floor(v)) throw InvalidInput("config: sweep.n_sys must hold integers");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

std::vector<GridPoint> parse_sweep(const json& sweep, int n_sys) {
  require_keys(sweep, "sweep", {"u_bath", "u_sys", "n_sys", "homogeneous", "s", "points"});
  std::vector<GridPoint> points;
  const std::vector<int> sizes = size_list(sweep, n_sys);
  const int forms = static_cast<int>(sweep.contains("u_bath") || sweep.contains("u_sys")) +
                    static_cast<int>(sweep.contains("homogeneous")) + static_cast<int>(sweep.contains("s")) +
                    static_cast<int>(sweep.contains("points"));
  if (forms != 1) throw InvalidInput("config: sweep needs exactly one of grid, homogeneous, s or points");
  if (sweep.contains("points")) {
    if (sweep.contains("n_sys")) throw InvalidInput("config: sweep.points carries its own n_sys");
    for (const auto& p : sweep.at("points")) {
      require_keys(p, "sweep.points[]", {"u_bath", "u_sys", "n_sys"});
      GridPoint g{0.0, 0.0, n_sys};
      read_if(p, "u_bath", g.u_bath);
      read_if(p, "u_sys", g.u_sys);
      read_if(p, "n_sys", g.n_sys);
      points.push_back(g);
    }
  } else if (sweep.contains("homogeneous")) {
    for (int n : sizes) {
      for (double u : number_list(sweep.at("homogeneous"), "homogeneous")) points.push_back({u, u, n});
    }
  } else if (sweep.contains("s")) {
    for (int n : sizes) {
      for (double s : number_list(sweep.at("s"), "s")) {
        const Couplings c = s_line(s);
        points.push_back({c.u_bath, c.u_sys, n});
      }
    }
  } else {
    if (!sweep.contains("u_bath") || !sweep.contains("u_sys")) {
      throw InvalidInput("config: grid sweep needs both u_bath and u_sys");
    }
    const auto ub = number_list(sweep.at("u_bath"), "u_bath");
    const auto us = number_list(sweep.at("u_sys"), "u_sys");
    for (int n : sizes) {
      for (double b : ub) {
        for (double s : us) points.push_back({b, s, n});
      }
    }
  }
  return points;
}

void apply_json(ExperimentConfig& c, const json& j) {
  require_keys(j, "config",
               {"preset", "name", "chain", "run", "ground_state", "analysis", "sweep", "seed", "output_dir", "workers"});
  read_if(j, "name", c.name);
  read_if(j, "seed", c.seed);
  read_if(j, "output_dir", c.output_dir);
  read_if(j, "workers", c.workers);
  if (j.contains("chain")) {
    const json& ch = j.at("chain");
    require_keys(ch, "chain", {"n_sys", "n_bath", "hopping", "u_bath", "u_sys"});
    read_if(ch, "n_sys", c.chain.n_sys);
    read_if(ch, "n_bath", c.chain.n_bath);
    read_if(ch, "hopping", c.chain.hopping);
    read_if(ch, "u_bath", c.chain.u_bath);
    read_if(ch, "u_sys", c.chain.u_sys);
  }
  if (j.contains("run")) {
    const json& r = j.at("run");
    require_keys(r, "run", {"dt", "t_max", "t_max_frac", "max_bond", "svd_cutoff", "record_stride", "discard_alarm",
                            "checkpoint_interval_s"});
    if (r.contains("t_max") && r.contains("t_max_frac")) {
      throw InvalidInput("config: give either run.t_max or run.t_max_frac");
    }
    read_if(r, "dt", c.run.dt);
    if (r.contains("t_max")) {
      read_if(r, "t_max", c.run.t_max);
      c.t_max_frac.reset();
    }
    if (r.contains("t_max_frac")) {
      double f = 0.0;
      read_if(r, "t_max_frac", f);
      c.t_max_frac = f;
    }
    read_if(r, "max_bond", c.run.trunc.max_bond);
    read_if(r, "svd_cutoff", c.run.trunc.svd_cutoff);
    read_if(r, "record_stride", c.run.record_stride);
    read_if(r, "discard_alarm", c.run.discard_alarm);
    read_if(r, "checkpoint_interval_s", c.checkpoint_interval_s);
  }
  if (j.contains("ground_state")) {
    const json& g = j.at("ground_state");
    require_keys(g, "ground_state", {"tol", "allow_odd", "max_bond", "svd_cutoff"});
    read_if(g, "tol", c.ground_state.tol);
    read_if(g, "allow_odd", c.ground_state.allow_odd);
    read_if(g, "max_bond", c.ground_state.trunc.max_bond);
    read_if(g, "svd_cutoff", c.ground_state.trunc.svd_cutoff);
  }
  if (j.contains("analysis")) {
    const json& a = j.at("analysis");
    require_keys(a, "analysis", {"probe_frac", "tau2_frac", "t_frac", "fit_lo_frac", "fit_hi_frac", "fourier_start",
                                 "window", "prominence"});
    read_if(a, "probe_frac", c.analysis.probe_frac);
    read_if(a, "tau2_frac", c.analysis.tau2_frac);
    read_if(a, "t_frac", c.analysis.t_frac);
    read_if(a, "fit_lo_frac", c.analysis.fit_lo_frac);
    read_if(a, "fit_hi_frac", c.analysis.fit_hi_frac);
    read_if(a, "fourier_start", c.analysis.fourier_start);
    read_if(a, "prominence", c.analysis.prominence);
    if (a.contains("window")) {
      std::string w;
      read_if(a, "window", w);
      c.analysis.window = window_from(w);
    }
  }
  if (j.contains("sweep")) {
    c.sweep = j.at("sweep").is_null() ? std::vector<GridPoint>{} : parse_sweep(j.at("sweep"), c.chain.n_sys);
  }
}

json simulation_json(const ExperimentConfig& c) {
  return json{
      {"chain",
       {{"n_sys", c.chain.n_sys},
        {"n_bath", c.chain.n_bath},
        {"hopping", c.chain.hopping},
        {"u_bath", c.chain.u_bath},
        {"u_sys", c.chain.u_sys}}},
      {"run",
       {{"dt", c.run.dt},
        {"t_max", c.run.t_max},
        {"max_bond", c.run.trunc.max_bond},
        {"svd_cutoff", c.run.trunc.svd_cutoff},
        {"record_stride", c.run.record_stride},
        {"discard_alarm", c.run.discard_alarm}}},
      {"ground_state",
       {{"tol", c.ground_state.tol},
        {"allow_odd", c.ground_state.allow_odd},
        {"max_bond", c.ground_state.trunc.max_bond},
        {"svd_cutoff", c.ground_state.trunc.svd_cutoff}}},
  };
}

json analysis_json(const AnalysisParams& a) {
  return {{"probe_frac", a.probe_frac},       {"tau2_frac", a.tau2_frac},
          {"t_frac", a.t_frac},               {"fit_lo_frac", a.fit_lo_frac},
          {"fit_hi_frac", a.fit_hi_frac},     {"fourier_start", a.fourier_start},
          {"window", window_name(a.window)}, {"prominence", a.prominence}};
}

bool in_unit_interval(double f) { return f > 0.0 && f <= 1.0; }

double interpolate(const std::vector<double>& t, const std::vector<double>& v, double at) {
  if (t.empty() || at < t.front() || at > t.back() + 1e-9 * std::max(1.0, at)) return kNaN;
  const auto it = std::lower_bound(t.begin(), t.end(), at);
  if (it == t.end()) return v.back();
  const auto k = static_cast<std::size_t>(it - t.begin());
  if (k == 0 || *it == at) return v[k];
  const double w = (at - t[k - 1]) / (t[k] - t[k - 1]);
  return (1.0 - w) * v[k - 1] + w * v[k];
}

json fit_json(const FitReport& f) {
  return {{"amplitude", f.amplitude}, {"exponent", f.exponent}, {"residual", f.residual},
          {"window", {f.window.lo, f.window.hi}}, {"n_points", f.n_points}, {"n_dropped", f.n_dropped},
          {"flagged", f.flagged}};
}

FitReport fit_from(const json& j, DecayFamily family) {
  FitReport f;
  f.family = family;
  f.amplitude = j.at("amplitude").get<double>();
  f.exponent = j.at("exponent").get<double>();
  f.residual = j.at("residual").get<double>();
  f.window = {j.at("window").at(0).get<double>(), j.at("window").at(1).get<double>()};
  f.n_points = j.at("n_points").get<std::size_t>();
  f.n_dropped = j.at("n_dropped").get<std::size_t>();
  f.flagged = j.at("flagged").get<bool>();
  return f;
}

const char* preference_name(DecayPreference p) {
  switch (p) {
    case DecayPreference::power_law:
      return "power_law";
    case DecayPreference::exponential:
      return "exponential";
    default:
      return "indeterminate";
  }
}

DecayPreference preference_from(const std::string& s) {
  if (s == "power_law") return DecayPreference::power_law;
  if (s == "exponential") return DecayPreference::exponential;
  if (s == "indeterminate") return DecayPreference::indeterminate;
  throw FormatError("unknown decay preference '" + s + "'");
}

// JSON has no NaN; unavailable numbers are stored as null.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double number_from(const json& j) { return j.is_null() ? kNaN : j.get<double>(); }

void write_text(const std::filesystem::path& path, const std::string& text) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + tmp.string() + " for writing");
    out << text;
    if (!out) throw FormatError("failed to write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string gs_key(int n_sys, double hopping, double u_sys, const GroundStateParams& p) {
  return json{{"n_sys", n_sys},         {"hopping", hopping},
              {"u_sys", u_sys},         {"tol", p.tol},
              {"allow_odd", p.allow_odd}, {"max_bond", p.trunc.max_bond},
              {"svd_cutoff", p.trunc.svd_cutoff}}
      .dump();
}

}  // namespace

void AnalysisParams::validate() const {
  for (double f : {probe_frac, tau2_frac, t_frac, fit_lo_frac, fit_hi_frac}) {
    if (!in_unit_interval(f)) throw InvalidInput("analysis fractions must lie in (0, 1]");
  }
  if (!(tau2_frac < t_frac)) throw InvalidInput("analysis.tau2_frac must be below analysis.t_frac");
  if (!(fit_lo_frac < fit_hi_frac)) throw InvalidInput("analysis.fit_lo_frac must be below analysis.fit_hi_frac");
  if (!(fourier_start >= 0.0) || !std::isfinite(fourier_start)) {
    throw InvalidInput("analysis.fourier_start must be finite and non-negative");
  }
  if (!(prominence > 0.0)) throw InvalidInput("analysis.prominence must be positive");
}

void ExperimentConfig::validate() const {
  analysis.validate();
  run.validate();
  ground_state.trunc.validate();
  if (!(ground_state.tol > 0.0)) throw InvalidInput("ground_state.tol must be positive");
  if (t_max_frac && !(*t_max_frac > 0.0 && std::isfinite(*t_max_frac))) {
    throw InvalidInput("run.t_max_frac must be positive");
  }
  if (workers < 1) throw InvalidInput("workers must be at least 1");
  if (!(checkpoint_interval_s >= 0.0)) throw InvalidInput("run.checkpoint_interval_s must be non-negative");
  if (output_dir.empty()) throw InvalidInput("output_dir must not be empty");
  if (chain.n_bath < 0) throw InvalidInput("chain.n_bath must be non-negative");
  for (const GridPoint& p : grid_points(*this)) {
    if (!std::isfinite(p.u_bath) || !std::isfinite(p.u_sys)) throw InvalidInput("grid points must be finite");
    point_config(*this, p).chain.validate();
    if (p.n_sys % 2 != 0 && !ground_state.allow_odd) {
      throw InvalidInput("odd n_sys rejected; set ground_state.allow_odd to override");
    }
  }
}

std::vector<std::string> preset_names() { return {"fig2", "fig4", "fig6", "fig7", "fourier"}; }

ExperimentConfig preset_config(const std::string& name) {
  ExperimentConfig c;
  c.preset = name;
  c.name = name;
  c.run.dt = 0.05;
  c.run.trunc = {128, 1e-10};
  c.run.record_stride = 2;
  c.t_max_frac = 0.45;
  c.chain.hopping = 1.0;
  auto sizes = [](std::initializer_list<int> ns, std::initializer_list<double> ub, std::initializer_list<double> us) {
    std::vector<GridPoint> pts;
    for (int n : ns) {
      for (double b : ub) {
        for (double s : us) pts.push_back({b, s, n});
      }
    }
    return pts;
  };
  if (name == "fig2") {
    c.chain.n_sys = 8;
    c.sweep = sizes({8}, {0.5, 1.0, 1.3}, {0.5, 1.0, 1.3});
  } else if (name == "fig4") {
    c.chain.n_sys = 8;
    c.analysis.tau2_frac = 0.15;
    c.analysis.t_frac = 0.45;
    c.sweep = sizes({4, 6, 8, 10, 12}, {0.5}, {0.7, 1.0, 1.3});
  } else if (name == "fig6") {
    c.chain.n_sys = 8;
    c.analysis.tau2_frac = 0.3;
    c.analysis.t_frac = 0.45;
    c.sweep = sizes({4, 6, 8, 10, 12}, {0.7, 1.0, 1.3}, {0.5});
  } else if (name == "fig7") {
    c.chain.n_sys = 16;
    c.analysis.fit_lo_frac = 0.1;
    c.analysis.fit_hi_frac = 0.45;
    for (double s : {-0.3, -0.15, 0.0, 0.15, 0.3}) {
      const Couplings u = s_line(s);
      c.sweep.push_back({u.u_bath, u.u_sys, 16});
    }
  } else if (name == "fourier") {
    c.chain.n_sys = 20;
    c.t_max_frac.reset();
    c.run.t_max = 40.0;
    c.run.record_stride = 4;
    c.analysis.fourier_start = 10.0;
    for (double u : {0.5, 0.7, 0.9, 1.1, 1.3}) c.sweep.push_back({u, u, 20});
  } else {
    throw InvalidInput("unknown preset '" + name + "'");
  }
  c.chain.u_bath = c.sweep.front().u_bath;
  c.chain.u_sys = c.sweep.front().u_sys;
  return c;
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InvalidInput(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw InvalidInput("config must be a JSON object");
  ExperimentConfig c;
  if (j.contains("preset")) {
    if (!j.at("preset").is_string()) throw InvalidInput("config: preset must be a string");
    c = preset_config(j.at("preset").get<std::string>());
  }
  apply_json(c, j);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) { return parse_config(read_text(path)); }

std::string config_to_json(const ExperimentConfig& c) {
  json j = simulation_json(c);
  j["analysis"] = analysis_json(c.analysis);
  j["run"].erase("t_max");
  if (c.t_max_frac) {
    j["run"]["t_max_frac"] = *c.t_max_frac;
  } else {
    j["run"]["t_max"] = c.run.t_max;
  }
  j["run"]["checkpoint_interval_s"] = c.checkpoint_interval_s;
  if (!c.preset.empty()) j["preset"] = c.preset;
  j["name"] = c.name;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  j["workers"] = c.workers;
  if (!c.sweep.empty()) {
    json pts = json::array();
    for (const GridPoint& p : c.sweep) pts.push_back({{"u_bath", p.u_bath}, {"u_sys", p.u_sys}, {"n_sys", p.n_sys}});
    j["sweep"] = {{"points", pts}};
  }
  return j.dump(2);
}

std::vector<GridPoint> grid_points(const ExperimentConfig& c) {
  if (!c.sweep.empty()) return c.sweep;
  return {{c.chain.u_bath, c.chain.u_sys, c.chain.n_sys}};
}

ExperimentConfig point_config(const ExperimentConfig& c, const GridPoint& p) {
  ExperimentConfig out = c;
  out.sweep.clear();
  out.chain.n_sys = p.n_sys;
  out.chain.u_bath = p.u_bath;
  out.chain.u_sys = p.u_sys;
  if (c.chain.n_bath == 0) out.chain.n_bath = ChainSpec::default_bath_length(p.n_sys);
  if (c.t_max_frac) {
    out.run.t_max = *c.t_max_frac * out.chain.n_bath / out.chain.hopping;
    out.t_max_frac.reset();
  }
  return out;
}

std::string run_id(const ExperimentConfig& config) {
  const ExperimentConfig single = point_config(config, grid_points(config).front());
  return hex64(fnv1a(simulation_json(single).dump()));
}

RunRecord analyze_trajectory(const Trajectory& traj, const ChainSpec& spec, const AnalysisParams& params) {
  params.validate();
  const CurrentSeries series = current_series(traj, spec);
  RunRecord r;
  r.status = RunStatus::complete;
  r.n_sys = spec.n_sys;
  r.n_bath = spec.n_bath;
  r.u_bath = spec.u_bath;
  r.u_sys = spec.u_sys;
  r.hopping = spec.hopping;
  r.t_max = traj.times.empty() ? 0.0 : traj.times.back();
  const double scale = spec.n_bath / spec.hopping;
  std::vector<std::string> notes;

  r.probe_time = params.probe_frac * scale;
  r.q_probe = interpolate(series.times, series.q_junction, r.probe_time);
  if (std::isnan(r.q_probe)) notes.push_back("probe time beyond the trajectory");

  r.tau2 = params.tau2_frac * scale;
  r.t_end = params.t_frac * scale;
  // A window end that falls between the last record and t_max snaps to the last record.
  if (series.times.size() >= 2) {
    const double last = series.times.back();
    const double spacing = last - series.times[series.times.size() - 2];
    if (r.t_end > last && r.t_end - last < spacing * (1.0 + 1e-9)) r.t_end = last;
  }
  try {
    r.q_avg = time_average(series.times, series.q_junction, r.tau2, r.t_end);
  } catch (const InvalidInput& e) {
    notes.push_back(std::string("no time average: ") + e.what());
  }

  const FitWindow fw{params.fit_lo_frac * scale, std::min(params.fit_hi_frac * scale, r.t_max)};
  try {
    r.decay = classify_decay(series.times, series.q_junction, fw);
    if (r.decay->power_law.flagged) notes.push_back("decay fit dropped more than 10% of the window");
  } catch (const InvalidInput& e) {
    notes.push_back(std::string("no decay fit: ") + e.what());
  }

  try {
    const Spectrum s = spectrum(series.times, series.q_mid, params.fourier_start, params.window);
    r.peaks = extract_peaks(s, params.prominence);
  } catch (const InvalidInput& e) {
    notes.push_back(std::string("no spectrum: ") + e.what());
  }

  r.quality_warning = traj.quality_warning;
  r.discarded_weight = traj.discarded_weights.empty() ? 0.0 : traj.discarded_weights.back();
  r.continuity_residual_max = traj.continuity_residual_max;
  if (traj.quality_warning) notes.push_back("truncation quality warning");
  for (std::size_t k = 0; k < notes.size(); ++k) r.message += (k ? "; " : "") + notes[k];
  return r;
}

std::string record_to_json(const RunRecord& r) {
  json j{{"run_id", r.run_id},
         {"status", r.status == RunStatus::complete ? "complete" : "aborted"},
         {"message", r.message},
         {"n_sys", r.n_sys},
         {"n_bath", r.n_bath},
         {"u_bath", r.u_bath},
         {"u_sys", r.u_sys},
         {"hopping", r.hopping},
         {"t_max", r.t_max},
         {"gs_energy", number(r.gs_energy)},
         {"probe_time", r.probe_time},
         {"q_probe", number(r.q_probe)},
         {"tau2", r.tau2},
         {"t_end", r.t_end},
         {"q_avg", r.q_avg ? json(*r.q_avg) : json(nullptr)},
         {"quality_warning", r.quality_warning},
         {"discarded_weight", number(r.discarded_weight)},
         {"continuity_residual_max", number(r.continuity_residual_max)}};
  if (r.decay) {
    j["decay"] = {{"preferred", preference_name(r.decay->preferred)},
                  {"power_law", fit_json(r.decay->power_law)},
                  {"exponential", fit_json(r.decay->exponential)}};
  } else {
    j["decay"] = nullptr;
  }
  auto peak = [](const std::optional<Peak>& p) {
    return p ? json{{"frequency", p->frequency}, {"magnitude", p->magnitude}} : json(nullptr);
  };
  j["peaks"] = {{"low", peak(r.peaks.low)}, {"medium", peak(r.peaks.medium)}, {"high", peak(r.peaks.high)}};
  return j.dump(2);
}

RunRecord record_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    RunRecord r;
    r.run_id = j.at("run_id").get<std::string>();
    const std::string status = j.at("status").get<std::string>();
    if (status != "complete" && status != "aborted") throw FormatError("unknown run status '" + status + "'");
    r.status = status == "complete" ? RunStatus::complete : RunStatus::aborted;
    r.message = j.at("message").get<std::string>();
    r.n_sys = j.at("n_sys").get<int>();
    r.n_bath = j.at("n_bath").get<int>();
    r.u_bath = j.at("u_bath").get<double>();
    r.u_sys = j.at("u_sys").get<double>();
    r.hopping = j.at("hopping").get<double>();
    r.t_max = j.at("t_max").get<double>();
    r.gs_energy = number_from(j.at("gs_energy"));
    r.probe_time = j.at("probe_time").get<double>();
    r.q_probe = number_from(j.at("q_probe"));
    r.tau2 = j.at("tau2").get<double>();
    r.t_end = j.at("t_end").get<double>();
    if (!j.at("q_avg").is_null()) r.q_avg = j.at("q_avg").get<double>();
    r.quality_warning = j.at("quality_warning").get<bool>();
    r.discarded_weight = number_from(j.at("discarded_weight"));
    r.continuity_residual_max = number_from(j.at("continuity_residual_max"));
    if (!j.at("decay").is_null()) {
      const json& d = j.at("decay");
      r.decay = DecayClassification{preference_from(d.at("preferred").get<std::string>()),
                                    fit_from(d.at("power_law"), DecayFamily::power_law),
                                    fit_from(d.at("exponential"), DecayFamily::exponential)};
    }
    auto peak = [](const json& p) -> std::optional<Peak> {
      if (p.is_null()) return std::nullopt;
      return Peak{p.at("frequency").get<double>(), p.at("magnitude").get<double>()};
    };
    const json& p = j.at("peaks");
    r.peaks = {peak(p.at("low")), peak(p.at("medium")), peak(p.at("high"))};
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed run record: ") + e.what());
  }
}

GroundStateCache::GroundStateCache(std::filesystem::path directory) : dir_(std::move(directory)) {}

std::size_t GroundStateCache::computed() const {
  std::lock_guard lock(mutex_);
  return computed_;
}

std::shared_ptr<const GroundStateResult> GroundStateCache::get(int n_sys, double hopping, double u_sys,
                                                               const GroundStateParams& params) {
  const std::string key = gs_key(n_sys, hopping, u_sys, params);
  std::shared_ptr<std::mutex> key_lock;
  {
    std::lock_guard lock(mutex_);
    if (auto it = entries_.find(key); it != entries_.end()) return it->second;
    auto& slot = key_locks_[key];
    if (!slot) slot = std::make_shared<std::mutex>();
    key_lock = slot;
  }
  std::lock_guard compute_lock(*key_lock);
  {
    std::lock_guard lock(mutex_);
    if (auto it = entries_.find(key); it != entries_.end()) return it->second;
  }

  const std::string stem = hex64(fnv1a(key));
  const std::filesystem::path state_path = dir_.empty() ? dir_ : dir_ / (stem + ".mps");
  const std::filesystem::path meta_path = dir_.empty() ? dir_ : dir_ / (stem + ".json");
  std::shared_ptr<GroundStateResult> result;
  if (!dir_.empty() && std::filesystem::exists(meta_path) && std::filesystem::exists(state_path)) {
    const json meta = json::parse(read_text(meta_path));
    if (meta.at("key").get<std::string>() == key) {
      result = std::make_shared<GroundStateResult>(GroundStateResult{load_checkpoint(state_path), 0.0, true, 0, 0.0, true, {}});
      result->energy = meta.at("energy").get<double>();
      result->iterations = meta.at("iterations").get<int>();
      result->variance_estimate = meta.at("variance_estimate").get<double>();
      result->monotone = meta.at("monotone").get<bool>();
      result->rung_energies = meta.at("rung_energies").get<std::vector<double>>();
      result->converged = true;
    }
  }
  if (!result) {
    GroundStateOptions options;
    options.allow_odd = params.allow_odd;
    GroundStateResult gs = find_ground_state(n_sys, hopping, u_sys, params.trunc, params.tol, options);
    if (!gs.converged) {
      std::ostringstream msg;
      msg << "ground state did not converge (n_sys=" << n_sys << ", u_sys=" << u_sys << ", iterations=" << gs.iterations
          << ", energy=" << gs.energy << ", tol=" << params.tol << ")";
      throw ConvergenceError(msg.str());
    }
    result = std::make_shared<GroundStateResult>(std::move(gs));
    if (!dir_.empty()) {
      std::filesystem::create_directories(dir_);
      save_checkpoint(state_path, result->state);
      write_text(meta_path, json{{"key", key},
                                 {"energy", result->energy},
                                 {"iterations", result->iterations},
                                 {"variance_estimate", result->variance_estimate},
                                 {"monotone", result->monotone},
                                 {"rung_energies", result->rung_energies}}
                                .dump(2));
    }
    std::lock_guard lock(mutex_);
    ++computed_;
  }
  std::lock_guard lock(mutex_);
  entries_[key] = result;
  return result;
}

RunRecord reanalyze_run(const ExperimentConfig& input) {
  const ExperimentConfig config = point_config(input, grid_points(input).front());
  config.validate();
  const std::filesystem::path dir = run_directory(config);
  const auto record_path = dir / "analysis.json";
  const auto traj_path = dir / "trajectory.xcol";
  if (!std::filesystem::exists(record_path) || !std::filesystem::exists(traj_path)) {
    throw FormatError("no stored trajectory for run " + run_id(config));
  }
  const RunRecord stored = record_from_json(read_text(record_path));
  RunRecord rec = analyze_trajectory(trajectory_from_table(load_columnar(traj_path)), config.chain, config.analysis);
  rec.run_id = stored.run_id;
  rec.gs_energy = stored.gs_energy;
  if (!(rec == stored)) write_text(record_path, record_to_json(rec));
  return rec;
}

std::filesystem::path run_directory(const ExperimentConfig& config) {
  return std::filesystem::path(config.output_dir) / "runs" / run_id(config);
}

RunOutput run_single(const ExperimentConfig& input, GroundStateCache& cache,
                     const std::function<void(long)>& after_checkpoint) {
  const ExperimentConfig config = point_config(input, grid_points(input).front());
  config.validate();
  const std::string id = run_id(config);
  const std::filesystem::path dir = run_directory(config);
  const auto record_path = dir / "analysis.json";
  const auto traj_path = dir / "trajectory.xcol";

  if (std::filesystem::exists(record_path) && std::filesystem::exists(traj_path)) {
    const RunRecord stored = record_from_json(read_text(record_path));
    if (stored.status == RunStatus::complete && stored.run_id == id) {
      RunOutput out{reanalyze_run(config), trajectory_from_table(load_columnar(traj_path)), true};
      return out;
    }
  }
  std::filesystem::create_directories(dir);
  write_text(dir / "config.json", config_to_json(config));

  const ChainSpec& spec = config.chain;
  const auto gs = cache.get(spec.n_sys, spec.hopping, spec.u_sys, config.ground_state);

  // Checkpoints: state-<step>.mps and partial-<step>.xcol, published by
  // rewriting checkpoint.json.
  const auto pointer_path = dir / "checkpoint.json";
  std::optional<EvolutionCheckpoint> resume;
  if (std::filesystem::exists(pointer_path)) {
    const json ptr = json::parse(read_text(pointer_path));
    const long step = ptr.at("step").get<long>();
    const std::string tag = std::to_string(step);
    resume = EvolutionCheckpoint{load_checkpoint(dir / ("state-" + tag + ".mps")),
                                 trajectory_from_table(load_columnar(dir / ("partial-" + tag + ".xcol"))), step};
  }
  auto drop_checkpoints = [&](std::optional<long> keep) {
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      const std::string name = entry.path().filename().string();
      const bool ck = name.starts_with("state-") || name.starts_with("partial-");
      if (!ck) continue;
      if (keep) {
        const std::string tag = std::to_string(*keep);
        if (name == "state-" + tag + ".mps" || name == "partial-" + tag + ".xcol") continue;
      }
      std::filesystem::remove(entry.path());
    }
  };

  EvolveHooks hooks;
  hooks.checkpoint_interval_s = config.checkpoint_interval_s;
  hooks.on_checkpoint = [&](const EvolutionCheckpoint& ck) {
    const std::string tag = std::to_string(ck.step);
    save_checkpoint(dir / ("state-" + tag + ".mps"), ck.state);
    save_columnar(dir / ("partial-" + tag + ".xcol"), trajectory_table(ck.trajectory));
    write_text(pointer_path, json{{"step", ck.step}}.dump());
    drop_checkpoints(ck.step);
    if (after_checkpoint) after_checkpoint(ck.step);
  };

  MpsState start = initial_state(spec, gs->state);
  EvolutionResult evo = evolve(std::move(start), spec, config.run, hooks, resume);

  RunRecord rec = analyze_trajectory(evo.trajectory, spec, config.analysis);
  rec.run_id = id;
  rec.gs_energy = gs->energy;
  save_columnar(traj_path, trajectory_table(evo.trajectory));
  {
    std::ostringstream csv;
    write_current_series_csv(csv, current_series(evo.trajectory, spec));
    write_text(dir / "current_series.csv", csv.str());
  }
  write_text(record_path, record_to_json(rec));
  std::filesystem::remove(pointer_path);
  drop_checkpoints(std::nullopt);
  return {std::move(rec), std::move(evo.trajectory), false};
}

std::size_t SweepResult::n_aborted() const {
  return static_cast<std::size_t>(
      std::count_if(records.begin(), records.end(), [](const RunRecord& r) { return r.status != RunStatus::complete; }));
}

namespace {

RunRecord aborted_record(const ExperimentConfig& single, const std::string& why) {
  RunRecord rec;
  rec.run_id = run_id(single);
  rec.status = RunStatus::aborted;
  rec.message = why;
  rec.n_sys = single.chain.n_sys;
  rec.n_bath = single.chain.n_bath;
  rec.u_bath = single.chain.u_bath;
  rec.u_sys = single.chain.u_sys;
  rec.hopping = single.chain.hopping;
  rec.t_max = single.run.t_max;
  rec.gs_energy = kNaN;
  rec.q_probe = kNaN;
  rec.discarded_weight = kNaN;
  rec.continuity_residual_max = kNaN;
  return rec;
}

}  // namespace

std::vector<RunRecord> collect_records(const ExperimentConfig& config) {
  std::vector<RunRecord> out;
  for (const GridPoint& p : grid_points(config)) {
    const ExperimentConfig single = point_config(config, p);
    const auto path = run_directory(single) / "analysis.json";
    if (std::filesystem::exists(path)) {
      out.push_back(record_from_json(read_text(path)));
    } else {
      out.push_back(aborted_record(single, "not run"));
    }
  }
  return out;
}

SweepResult run_sweep(const ExperimentConfig& config, const SweepProgress& progress) {
  config.validate();
  const std::vector<GridPoint> points = grid_points(config);
  const std::filesystem::path out_dir(config.output_dir);
  std::filesystem::create_directories(out_dir);
  write_text(out_dir / "sweep_config.json", config_to_json(config));
  GroundStateCache cache(out_dir / "ground_states");

  SweepResult result;
  result.records.resize(points.size());
  std::vector<bool> finished(points.size(), false);
  std::mutex writer;
  std::atomic<std::size_t> next{0};
  std::size_t done = 0;

  auto publish = [&](std::size_t k, RunRecord rec) {
    std::lock_guard lock(writer);
    result.records[k] = std::move(rec);
    finished[k] = true;
    ++done;
    std::vector<RunRecord> so_far;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (finished[i]) so_far.push_back(result.records[i]);
    }
    export_records(out_dir / "sweep.csv", so_far, ExportFormat::csv);
    if (progress) progress(result.records[k], done, points.size());
  };

  auto work = [&] {
    for (std::size_t k = next++; k < points.size(); k = next++) {
      const ExperimentConfig single = point_config(config, points[k]);
      RunRecord rec;
      try {
        rec = run_single(single, cache).record;
      } catch (const std::exception& e) {
        rec = aborted_record(single, e.what());
      }
      publish(k, std::move(rec));
    }
  };

  const std::size_t n_workers = std::min<std::size_t>(static_cast<std::size_t>(config.workers), points.size());
  if (n_workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(work);
  }
  export_records(out_dir / "sweep.xcol", result.records, ExportFormat::columnar);
  return result;
}

// ---- sweep tables ----

namespace {

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols = {
      "run_id",         "status",          "n_sys",           "n_bath",        "u_bath",          "u_sys",
      "hopping",        "t_max",           "gs_energy",       "probe_time",    "q_probe",         "tau2",
      "t_end",          "q_avg",           "preferred",       "fit_lo",        "fit_hi",          "pl_amplitude",
      "pl_exponent",    "pl_residual",     "pl_n_points",     "pl_n_dropped",  "pl_flagged",      "exp_amplitude",
      "exp_exponent",   "exp_residual",    "exp_n_points",    "exp_n_dropped", "exp_flagged",     "low_frequency",
      "low_magnitude",  "medium_frequency", "medium_magnitude", "high_frequency", "high_magnitude", "quality_warning",
      "discarded_weight", "continuity_residual_max", "message"};
  return cols;
}

constexpr const char* kCsvSchema = "# xxz-sweep v1";

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// Flat string view of a record, keyed like csv_columns().
std::map<std::string, std::string> flatten(const RunRecord& r) {
  std::map<std::string, std::string> f;
  f["run_id"] = r.run_id;
  f["status"] = r.status == RunStatus::complete ? "complete" : "aborted";
  f["n_sys"] = std::to_string(r.n_sys);
  f["n_bath"] = std::to_string(r.n_bath);
  f["u_bath"] = fmt(r.u_bath);
  f["u_sys"] = fmt(r.u_sys);
  f["hopping"] = fmt(r.hopping);
  f["t_max"] = fmt(r.t_max);
  f["gs_energy"] = fmt(r.gs_energy);
  f["probe_time"] = fmt(r.probe_time);
  f["q_probe"] = fmt(r.q_probe);
  f["tau2"] = fmt(r.tau2);
  f["t_end"] = fmt(r.t_end);
  f["q_avg"] = r.q_avg ? fmt(*r.q_avg) : "";
  if (r.decay) {
    f["preferred"] = preference_name(r.decay->preferred);
    f["fit_lo"] = fmt(r.decay->power_law.window.lo);
    f["fit_hi"] = fmt(r.decay->power_law.window.hi);
    for (const auto& [prefix, fit] : {std::pair{"pl_", &r.decay->power_law}, std::pair{"exp_", &r.decay->exponential}}) {
      const std::string p = prefix;
      f[p + "amplitude"] = fmt(fit->amplitude);
      f[p + "exponent"] = fmt(fit->exponent);
      f[p + "residual"] = fmt(fit->residual);
      f[p + "n_points"] = std::to_string(fit->n_points);
      f[p + "n_dropped"] = std::to_string(fit->n_dropped);
      f[p + "flagged"] = fit->flagged ? "1" : "0";
    }
  }
  for (const auto& [name, peak] :
       {std::pair{"low", &r.peaks.low}, std::pair{"medium", &r.peaks.medium}, std::pair{"high", &r.peaks.high}}) {
    if (*peak) {
      f[std::string(name) + "_frequency"] = fmt((*peak)->frequency);
      f[std::string(name) + "_magnitude"] = fmt((*peak)->magnitude);
    }
  }
  f["quality_warning"] = r.quality_warning ? "1" : "0";
  f["discarded_weight"] = fmt(r.discarded_weight);
  f["continuity_residual_max"] = fmt(r.continuity_residual_max);
  f["message"] = r.message;
  return f;
}

double parse_double(const std::string& s, const std::string& column) {
  if (s.empty()) return kNaN;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) throw FormatError("bad number '" + s + "' in column " + column);
  return v;
}

long long parse_int(const std::string& s, const std::string& column) {
  if (s.empty()) throw FormatError("missing integer in column " + column);
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size()) throw FormatError("bad integer '" + s + "' in column " + column);
  return v;
}

RunRecord unflatten(const std::map<std::string, std::string>& f) {
  auto get = [&](const std::string& k) -> const std::string& {
    static const std::string empty;
    const auto it = f.find(k);
    return it == f.end() ? empty : it->second;
  };
  auto num = [&](const std::string& k) { return parse_double(get(k), k); };
  auto integer = [&](const std::string& k) { return parse_int(get(k), k); };
  RunRecord r;
  r.run_id = get("run_id");
  const std::string& status = get("status");
  if (status != "complete" && status != "aborted") throw FormatError("unknown run status '" + status + "'");
  r.status = status == "complete" ? RunStatus::complete : RunStatus::aborted;
  r.n_sys = static_cast<int>(integer("n_sys"));
  r.n_bath = static_cast<int>(integer("n_bath"));
  r.u_bath = num("u_bath");
  r.u_sys = num("u_sys");
  r.hopping = num("hopping");
  r.t_max = num("t_max");
  r.gs_energy = num("gs_energy");
  r.probe_time = num("probe_time");
  r.q_probe = num("q_probe");
  r.tau2 = num("tau2");
  r.t_end = num("t_end");
  if (!get("q_avg").empty()) r.q_avg = num("q_avg");
  if (!get("preferred").empty()) {
    DecayClassification d;
    d.preferred = preference_from(get("preferred"));
    const FitWindow w{num("fit_lo"), num("fit_hi")};
    for (auto [prefix, fit, family] : {std::tuple{"pl_", &d.power_law, DecayFamily::power_law},
                                       std::tuple{"exp_", &d.exponential, DecayFamily::exponential}}) {
      const std::string p = prefix;
      fit->family = family;
      fit->window = w;
      fit->amplitude = num(p + "amplitude");
      fit->exponent = num(p + "exponent");
      fit->residual = num(p + "residual");
      fit->n_points = static_cast<std::size_t>(integer(p + "n_points"));
      fit->n_dropped = static_cast<std::size_t>(integer(p + "n_dropped"));
      fit->flagged = integer(p + "flagged") != 0;
    }
    r.decay = d;
  }
  for (auto [name, peak] :
       {std::pair{"low", &r.peaks.low}, std::pair{"medium", &r.peaks.medium}, std::pair{"high", &r.peaks.high}}) {
    const std::string n = name;
    if (!get(n + "_frequency").empty()) *peak = Peak{num(n + "_frequency"), num(n + "_magnitude")};
  }
  r.quality_warning = integer("quality_warning") != 0;
  r.discarded_weight = num("discarded_weight");
  r.continuity_residual_max = num("continuity_residual_max");
  r.message = get("message");
  return r;
}

// Splits one CSV record, honoring quoted fields that may span lines.
bool read_csv_row(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  std::string field;
  bool quoted = false;
  bool any = false;
  char c;
  while (in.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      break;
    } else if (c != '\r') {
      field += c;
    }
  }
  if (!any) return false;
  if (quoted) throw FormatError("unterminated quoted field");
  fields.push_back(std::move(field));
  return true;
}

}  // namespace

void write_sweep_csv(std::ostream& out, const std::vector<RunRecord>& records) {
  const auto& cols = csv_columns();
  out << kCsvSchema << '\n';
  for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c];
  out << '\n';
  for (const RunRecord& r : records) {
    const auto f = flatten(r);
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const auto it = f.find(cols[c]);
      out << (c ? "," : "") << quote(it == f.end() ? "" : it->second);
    }
    out << '\n';
  }
}

std::vector<RunRecord> read_sweep_csv(std::istream& in) {
  std::string schema;
  if (!std::getline(in, schema)) throw FormatError("empty sweep file");
  if (!schema.empty() && schema.back() == '\r') schema.pop_back();
  if (schema != kCsvSchema) throw FormatError("unsupported sweep schema line '" + schema + "'");
  std::vector<std::string> header;
  if (!read_csv_row(in, header)) throw FormatError("missing sweep header");
  for (const std::string& c : csv_columns()) {
    if (std::find(header.begin(), header.end(), c) == header.end()) throw FormatError("missing column '" + c + "'");
  }
  std::vector<RunRecord> out;
  std::vector<std::string> row;
  while (read_csv_row(in, row)) {
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != header.size()) throw FormatError("row has " + std::to_string(row.size()) + " fields, expected " +
                                                       std::to_string(header.size()));
    std::map<std::string, std::string> f;
    for (std::size_t c = 0; c < header.size(); ++c) f[header[c]] = row[c];
    out.push_back(unflatten(f));
  }
  return out;
}

ColumnarTable sweep_table(const std::vector<RunRecord>& records) {
  static const std::set<std::string> text = {"run_id", "status", "preferred", "message"};
  static const std::set<std::string> ints = {"n_sys", "n_bath", "pl_n_points", "pl_n_dropped", "pl_flagged",
                                             "exp_n_points", "exp_n_dropped", "exp_flagged", "quality_warning"};
  std::vector<std::map<std::string, std::string>> flat;
  for (const RunRecord& r : records) flat.push_back(flatten(r));
  ColumnarTable t;
  t.add("schema_version", std::vector<std::int64_t>{1});
  for (const std::string& c : csv_columns()) {
    auto cell = [&](const std::map<std::string, std::string>& f) -> std::string {
      const auto it = f.find(c);
      return it == f.end() ? "" : it->second;
    };
    if (text.contains(c)) {
      std::vector<std::string> v;
      for (const auto& f : flat) v.push_back(cell(f));
      t.add(c, std::move(v));
    } else if (ints.contains(c)) {
      std::vector<std::int64_t> v;
      for (const auto& f : flat) v.push_back(cell(f).empty() ? -1 : parse_int(cell(f), c));
      t.add(c, std::move(v));
    } else {
      std::vector<double> v;
      for (const auto& f : flat) v.push_back(parse_double(cell(f), c));
      t.add(c, std::move(v));
    }
  }
  return t;
}

std::vector<RunRecord> sweep_from_table(const ColumnarTable& t) {
  if (!t.contains("schema_version") || t.integers("schema_version") != std::vector<std::int64_t>{1}) {
    throw FormatError("unsupported sweep table version");
  }
  const std::size_t n = t.strings("run_id").size();
  std::vector<RunRecord> out;
  for (std::size_t k = 0; k < n; ++k) {
    std::map<std::string, std::string> f;
    for (const std::string& c : csv_columns()) {
      const Column& col = t.at(c);
      if (col.element_count() != n) throw FormatError("column '" + c + "' has the wrong length");
      if (const auto* s = std::get_if<std::vector<std::string>>(&col.data)) {
        f[c] = (*s)[k];
      } else if (const auto* i = std::get_if<std::vector<std::int64_t>>(&col.data)) {
        f[c] = (*i)[k] < 0 ? "" : std::to_string((*i)[k]);
      } else {
        f[c] = fmt(std::get<std::vector<double>>(col.data)[k]);
      }
    }
    out.push_back(unflatten(f));
  }
  return out;
}

void export_records(const std::filesystem::path& path, const std::vector<RunRecord>& records, ExportFormat format) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (format == ExportFormat::columnar) {
    save_columnar(path, sweep_table(records));
    return;
  }
  std::ostringstream out;
  write_sweep_csv(out, records);
  write_text(path, out.str());
}

std::vector<RunRecord> import_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  char magic[8] = {};
  in.read(magic, sizeof(magic));
  const bool columnar = in.gcount() == 8 && std::string(magic, 8) == "XXZCOL01";
  in.clear();
  in.seekg(0);
  if (columnar) return sweep_from_table(read_columnar(in));
  return read_sweep_csv(in);
}

std::vector<SizeScaling> size_scaling(const std::vector<RunRecord>& records) {
  std::map<std::pair<double, double>, std::map<int, double>> groups;
  for (const RunRecord& r : records) {
    if (r.status == RunStatus::complete && r.q_avg) groups[{r.u_bath, r.u_sys}][r.n_sys] = *r.q_avg;
  }
  std::vector<SizeScaling> out;
  for (const auto& [key, by_size] : groups) {
    SizeScaling s;
    s.u_bath = key.first;
    s.u_sys = key.second;
    for (const auto& [n, q] : by_size) {
      s.sizes.push_back(n);
      s.averages.push_back(q);
    }
    if (s.sizes.size() >= 2) {
      try {
        s.power_law = finite_size_fit(s.sizes, s.averages, DecayFamily::power_law);
      } catch (const InvalidInput&) {
      }
      try {
        s.exponential = finite_size_fit(s.sizes, s.averages, DecayFamily::exponential);
      } catch (const InvalidInput&) {
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::optional<AlphaFit> homogeneous_alpha(const std::vector<RunRecord>& records) {
  std::vector<PeakObservation> obs;
  for (const RunRecord& r : records) {
    if (r.status != RunStatus::complete || r.u_bath != r.u_sys) continue;
    if (!r.peaks.low && !r.peaks.medium && !r.peaks.high) continue;
    obs.push_back({r.u_sys, r.hopping, r.peaks});
  }
  if (obs.empty()) return std::nullopt;
  try {
    return fit_alpha(obs);
  } catch (const InvalidInput&) {
    return std::nullopt;
  }
}

}  // namespace xxz
