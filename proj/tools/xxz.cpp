// Command-line front end: run, sweep, analyze, export, gs.
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "xxz/experiments.hpp"

using nlohmann::json;

namespace {

struct Overrides {
  std::string config_path;
  std::string preset;
  std::optional<int> n_sys;
  std::optional<int> n_bath;
  std::optional<double> hopping;
  std::optional<double> u_bath;
  std::optional<double> u_sys;
  std::optional<double> dt;
  std::optional<double> t_max;
  std::optional<double> t_max_frac;
  std::optional<long> max_bond;
  std::optional<double> svd_cutoff;
  std::optional<int> record_stride;
  std::optional<double> gs_tol;
  std::optional<int> workers;
  std::optional<std::string> output_dir;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("config", o.config_path, "JSON config file");
  cmd->add_option("--preset", o.preset, "Built-in preset")
      ->check(CLI::IsMember({"fig2", "fig4", "fig6", "fig7", "fourier"}));
  cmd->add_option("--n-sys", o.n_sys, "System sites");
  cmd->add_option("--n-bath", o.n_bath, "Sites per lead (0: 1.5 n_sys)");
  cmd->add_option("--hopping", o.hopping, "Hopping J");
  cmd->add_option("--u-bath", o.u_bath, "Lead ZZ coupling");
  cmd->add_option("--u-sys", o.u_sys, "System ZZ coupling");
  cmd->add_option("--dt", o.dt, "Time step");
  cmd->add_option("--t-max", o.t_max, "Final time");
  cmd->add_option("--t-max-frac", o.t_max_frac, "Final time as a fraction of N_B/J");
  cmd->add_option("--max-bond", o.max_bond, "Maximum bond dimension");
  cmd->add_option("--svd-cutoff", o.svd_cutoff, "Discarded weight per gate");
  cmd->add_option("--record-stride", o.record_stride, "Steps between records");
  cmd->add_option("--gs-tol", o.gs_tol, "Ground-state energy tolerance");
  cmd->add_option("--workers", o.workers, "Parallel grid points");
  cmd->add_option("--output-dir", o.output_dir, "Result directory");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw xxz::InvalidInput("cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Preset, then file, then flags; a point override on a sweep config drops the sweep.
xxz::ExperimentConfig resolve(const Overrides& o) {
  json j = json::object();
  if (!o.preset.empty()) j["preset"] = o.preset;
  if (!o.config_path.empty()) {
    json file;
    try {
      file = json::parse(read_file(o.config_path));
    } catch (const json::parse_error& e) {
      throw xxz::InvalidInput(o.config_path + ": " + e.what());
    }
    j.merge_patch(file);
  }
  if (j.empty()) throw xxz::InvalidInput("give a config file or --preset");
  const bool point = o.n_sys || o.u_bath || o.u_sys;
  if (point) j["sweep"] = nullptr;
  auto set = [&](const char* section, const char* key, const auto& value) {
    if (value) j[section][key] = *value;
  };
  set("chain", "n_sys", o.n_sys);
  set("chain", "n_bath", o.n_bath);
  set("chain", "hopping", o.hopping);
  set("chain", "u_bath", o.u_bath);
  set("chain", "u_sys", o.u_sys);
  set("run", "dt", o.dt);
  if (o.t_max) {
    if (j.contains("run")) j["run"].erase("t_max_frac");
    j["run"]["t_max"] = *o.t_max;
  }
  if (o.t_max_frac) {
    if (j.contains("run")) j["run"].erase("t_max");
    j["run"]["t_max_frac"] = *o.t_max_frac;
  }
  set("run", "max_bond", o.max_bond);
  set("run", "svd_cutoff", o.svd_cutoff);
  set("run", "record_stride", o.record_stride);
  set("ground_state", "tol", o.gs_tol);
  if (o.workers) j["workers"] = *o.workers;
  if (o.output_dir) j["output_dir"] = *o.output_dir;
  return xxz::parse_config(j.dump());
}

std::string num(double v, const char* fmt = "%.6g") {
  if (std::isnan(v)) return "-";
  char buf[32];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

std::string peak_text(const xxz::PeakSet& p) {
  std::string s;
  auto add = [&](const char* tag, const std::optional<xxz::Peak>& pk) {
    if (pk) s += std::string(s.empty() ? "" : " ") + tag + "=" + num(pk->frequency, "%.3f");
  };
  add("low", p.low);
  add("med", p.medium);
  add("high", p.high);
  return s.empty() ? "-" : s;
}

const char* preference(const xxz::RunRecord& r) {
  if (!r.decay) return "-";
  switch (r.decay->preferred) {
    case xxz::DecayPreference::power_law:
      return "power_law";
    case xxz::DecayPreference::exponential:
      return "exponential";
    default:
      return "tie";
  }
}

void print_table(const std::vector<xxz::RunRecord>& records) {
  std::printf("%-16s %6s %6s %5s %-9s %12s %12s %-12s %s\n", "run_id", "U_B", "U_S", "N_S", "status", "Q(probe)",
              "Q_avg", "decay", "peaks");
  for (const auto& r : records) {
    std::printf("%-16s %6.3f %6.3f %5d %-9s %12s %12s %-12s %s\n", r.run_id.c_str(), r.u_bath, r.u_sys, r.n_sys,
                r.status == xxz::RunStatus::complete ? "complete" : "aborted", num(r.q_probe).c_str(),
                r.q_avg ? num(*r.q_avg).c_str() : "-", preference(r), peak_text(r.peaks).c_str());
    if (!r.message.empty()) std::printf("    %s\n", r.message.c_str());
  }
}

void print_summaries(const std::vector<xxz::RunRecord>& records) {
  for (const auto& s : xxz::size_scaling(records)) {
    if (s.sizes.size() < 2) continue;
    std::printf("size scaling U_B=%.3f U_S=%.3f:", s.u_bath, s.u_sys);
    if (s.power_law) {
      std::printf(" power law gamma_size=%.4f (rms %.3g)", s.power_law->exponent, s.power_law->residual);
    }
    if (s.exponential) {
      std::printf(" exponential rate=%.4f (rms %.3g)", s.exponential->exponent, s.exponential->residual);
    }
    std::printf("\n");
  }
  if (const auto a = xxz::homogeneous_alpha(records)) {
    std::printf("frequency model: alpha_freq=%.4f over %zu peaks (rms %.3g)\n", a->alpha_freq, a->n_peaks,
                a->residual);
  }
}

int count_aborted(const std::vector<xxz::RunRecord>& records) {
  int n = 0;
  for (const auto& r : records) n += r.status != xxz::RunStatus::complete;
  return n;
}

int cmd_run(const Overrides& o) {
  const xxz::ExperimentConfig c = resolve(o);
  if (xxz::grid_points(c).size() != 1) {
    throw xxz::InvalidInput("config holds a sweep; use 'sweep' or pin a point with --u-bath/--u-sys/--n-sys");
  }
  xxz::GroundStateCache cache(std::filesystem::path(c.output_dir) / "ground_states");
  try {
    const xxz::RunOutput out = xxz::run_single(c, cache);
    std::cout << xxz::record_to_json(out.record) << '\n';
    std::cerr << (out.reused ? "reused " : "wrote ") << xxz::run_directory(c).string() << '\n';
  } catch (const xxz::ConvergenceError& e) {
    std::cerr << "aborted: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

int cmd_sweep(const Overrides& o) {
  const xxz::ExperimentConfig c = resolve(o);
  const auto result = xxz::run_sweep(c, [](const xxz::RunRecord& r, std::size_t done, std::size_t total) {
    std::cerr << "[" << done << "/" << total << "] U_B=" << r.u_bath << " U_S=" << r.u_sys << " N_S=" << r.n_sys
              << (r.status == xxz::RunStatus::complete ? " done" : " ABORTED: " + r.message) << '\n';
  });
  print_table(result.records);
  print_summaries(result.records);
  return result.n_aborted() > 0 ? 1 : 0;
}

int cmd_analyze(const Overrides& o, const std::string& out_path) {
  const xxz::ExperimentConfig c = resolve(o);
  std::vector<xxz::RunRecord> records;
  int missing = 0;
  for (const auto& p : xxz::grid_points(c)) {
    const xxz::ExperimentConfig single = xxz::point_config(c, p);
    try {
      records.push_back(xxz::reanalyze_run(single));
    } catch (const xxz::FormatError& e) {
      ++missing;
      std::cerr << "missing: U_B=" << p.u_bath << " U_S=" << p.u_sys << " N_S=" << p.n_sys << ": " << e.what()
                << '\n';
    }
  }
  print_table(records);
  print_summaries(records);
  if (!out_path.empty()) {
    const bool columnar = std::filesystem::path(out_path).extension() == ".xcol";
    xxz::export_records(out_path, records, columnar ? xxz::ExportFormat::columnar : xxz::ExportFormat::csv);
  }
  return missing + count_aborted(records) > 0 ? 1 : 0;
}

int cmd_export(const Overrides& o, const std::string& format, std::string out_path) {
  const xxz::ExperimentConfig c = resolve(o);
  const auto records = xxz::collect_records(c);
  const bool columnar = format == "columnar";
  if (out_path.empty()) {
    out_path = (std::filesystem::path(c.output_dir) / (columnar ? "sweep.xcol" : "sweep.csv")).string();
  }
  xxz::export_records(out_path, records, columnar ? xxz::ExportFormat::columnar : xxz::ExportFormat::csv);
  std::cerr << "wrote " << records.size() << " records to " << out_path << '\n';
  return count_aborted(records) > 0 ? 1 : 0;
}

int cmd_gs(const Overrides& o) {
  const xxz::ExperimentConfig c = resolve(o);
  xxz::GroundStateCache cache(std::filesystem::path(c.output_dir) / "ground_states");
  std::set<std::pair<int, double>> seen;
  int failed = 0;
  std::printf("%5s %6s %22s %8s %12s\n", "N_S", "U_S", "energy", "iters", "variance");
  for (const auto& p : xxz::grid_points(c)) {
    if (!seen.insert({p.n_sys, p.u_sys}).second) continue;
    try {
      const auto gs = cache.get(p.n_sys, c.chain.hopping, p.u_sys, c.ground_state);
      std::printf("%5d %6.3f %22.15f %8d %12.3g\n", p.n_sys, p.u_sys, gs->energy, gs->iterations,
                  gs->variance_estimate);
    } catch (const xxz::ConvergenceError& e) {
      ++failed;
      std::printf("%5d %6.3f %22s\n", p.n_sys, p.u_sys, "not converged");
      std::cerr << e.what() << '\n';
    }
  }
  return failed > 0 ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TEBD simulator for an XXZ chain between interacting leads"};
  app.require_subcommand(1);

  Overrides run_o, sweep_o, analyze_o, export_o, gs_o;
  std::string analyze_out, export_format = "csv", export_out;

  auto* run = app.add_subcommand("run", "Simulate and analyze one configuration");
  add_common(run, run_o);
  auto* sweep = app.add_subcommand("sweep", "Run every grid point of a sweep");
  add_common(sweep, sweep_o);
  auto* analyze = app.add_subcommand("analyze", "Re-run the analysis on stored trajectories");
  add_common(analyze, analyze_o);
  analyze->add_option("--out", analyze_out, "Write the records (.csv or .xcol)");
  auto* exp = app.add_subcommand("export", "Export stored records");
  add_common(exp, export_o);
  exp->add_option("--format", export_format, "csv or columnar")->check(CLI::IsMember({"csv", "columnar"}));
  exp->add_option("--out", export_out, "Output path");
  auto* gs = app.add_subcommand("gs", "Compute the system ground states only");
  add_common(gs, gs_o);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_o);
    if (sweep->parsed()) return cmd_sweep(sweep_o);
    if (analyze->parsed()) return cmd_analyze(analyze_o, analyze_out);
    if (exp->parsed()) return cmd_export(export_o, export_format, export_out);
    if (gs->parsed()) return cmd_gs(gs_o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
