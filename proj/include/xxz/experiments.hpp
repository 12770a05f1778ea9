#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "xxz/analysis.hpp"
#include "xxz/columnar.hpp"
#include "xxz/error.hpp"
#include "xxz/evolution.hpp"
#include "xxz/groundstate.hpp"
#include "xxz/model.hpp"
#include "xxz/trajectory.hpp"

namespace xxz {

// Time windows are fractions of N_B/J unless noted.
struct AnalysisParams {
  double probe_frac = 0.15;
  double tau2_frac = 0.15;
  double t_frac = 0.45;
  double fit_lo_frac = 0.1;
  double fit_hi_frac = 0.45;
  double fourier_start = 10.0;  // absolute, units of 1/J
  SpectralWindow window = SpectralWindow::hann;
  double prominence = 3.0;

  void validate() const;
  bool operator==(const AnalysisParams&) const = default;
};

struct GroundStateParams {
  double tol = 1e-10;
  bool allow_odd = false;
  TruncParams trunc{256, 1e-14};

  bool operator==(const GroundStateParams& o) const {
    return tol == o.tol && allow_odd == o.allow_odd && trunc.max_bond == o.trunc.max_bond &&
           trunc.svd_cutoff == o.trunc.svd_cutoff;
  }
};

struct GridPoint {
  double u_bath = 0.0;
  double u_sys = 0.0;
  int n_sys = 0;
  bool operator==(const GridPoint&) const = default;
};

struct ExperimentConfig {
  std::string preset;
  std::string name;
  ChainSpec chain;
  RunParams run;
  // When set, t_max = t_max_frac · N_B / J for every point.
  std::optional<double> t_max_frac;
  GroundStateParams ground_state;
  AnalysisParams analysis;
  std::vector<GridPoint> sweep;
  std::uint64_t seed = 0;
  std::string output_dir = "results";
  int workers = 1;
  double checkpoint_interval_s = 60.0;

  void validate() const;
};

std::vector<std::string> preset_names();
ExperimentConfig preset_config(const std::string& name);

// Reads a JSON config. A "preset" key seeds the defaults, remaining keys
// override; unknown keys are rejected.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const ExperimentConfig& config);

// Single-point config with the chain and t_max resolved and the sweep cleared.
ExperimentConfig point_config(const ExperimentConfig& config, const GridPoint& point);
std::vector<GridPoint> grid_points(const ExperimentConfig& config);

// FNV-1a 64 over the canonical chain, run and ground-state settings, in hex.
// Analysis windows are excluded; they are re-applied to stored trajectories.
std::string run_id(const ExperimentConfig& config);

enum class RunStatus { complete, aborted };

struct RunRecord {
  std::string run_id;
  RunStatus status = RunStatus::aborted;
  std::string message;
  int n_sys = 0;
  int n_bath = 0;
  double u_bath = 0.0;
  double u_sys = 0.0;
  double hopping = 1.0;
  double t_max = 0.0;
  double gs_energy = 0.0;
  double probe_time = 0.0;
  double q_probe = 0.0;
  double tau2 = 0.0;
  double t_end = 0.0;
  std::optional<double> q_avg;
  std::optional<DecayClassification> decay;
  PeakSet peaks;
  bool quality_warning = false;
  double discarded_weight = 0.0;
  double continuity_residual_max = 0.0;

  bool operator==(const RunRecord&) const = default;
};

// Observables and fits from a stored trajectory.
RunRecord analyze_trajectory(const Trajectory& traj, const ChainSpec& spec, const AnalysisParams& params);

std::string record_to_json(const RunRecord& record);
RunRecord record_from_json(const std::string& json_text);

class GroundStateCache {
 public:
  // Empty directory keeps the cache in memory only.
  explicit GroundStateCache(std::filesystem::path directory = {});

  // Converged ground state; throws ConvergenceError otherwise.
  std::shared_ptr<const GroundStateResult> get(int n_sys, double hopping, double u_sys,
                                               const GroundStateParams& params);
  std::size_t computed() const;

 private:
  std::filesystem::path dir_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<const GroundStateResult>> entries_;
  std::map<std::string, std::shared_ptr<std::mutex>> key_locks_;
  std::size_t computed_ = 0;
};

struct RunOutput {
  RunRecord record;
  Trajectory trajectory;
  bool reused = false;
};

std::filesystem::path run_directory(const ExperimentConfig& config);

// Ground state, initial state, evolution and analysis for a single-point
// config. Outputs land in <output_dir>/runs/<run_id>/; a completed run
// directory is reused and an interrupted one resumes from its checkpoint.
// after_checkpoint sees the step of each checkpoint once it is on disk.
RunOutput run_single(const ExperimentConfig& config, GroundStateCache& cache,
                     const std::function<void(long)>& after_checkpoint = {});

// Recomputes the analysis of a completed run from its stored trajectory with
// the config's analysis settings, updating analysis.json.
RunRecord reanalyze_run(const ExperimentConfig& config);

// Stored record of every grid point; points without one come back aborted.
std::vector<RunRecord> collect_records(const ExperimentConfig& config);

struct SweepResult {
  std::vector<RunRecord> records;  // grid order
  std::size_t n_aborted() const;
};

using SweepProgress = std::function<void(const RunRecord&, std::size_t done, std::size_t total)>;

// Runs every grid point on a bounded worker pool. Per-point failures are
// recorded as aborted records. The sweep table is rewritten after each point.
SweepResult run_sweep(const ExperimentConfig& config, const SweepProgress& progress = {});

// Sweep tables: versioned CSV and the columnar container.
void write_sweep_csv(std::ostream& out, const std::vector<RunRecord>& records);
std::vector<RunRecord> read_sweep_csv(std::istream& in);
ColumnarTable sweep_table(const std::vector<RunRecord>& records);
std::vector<RunRecord> sweep_from_table(const ColumnarTable& table);

enum class ExportFormat { csv, columnar };
void export_records(const std::filesystem::path& path, const std::vector<RunRecord>& records, ExportFormat format);
std::vector<RunRecord> import_records(const std::filesystem::path& path);

// Summary fits over completed records.
struct SizeScaling {
  double u_bath = 0.0;
  double u_sys = 0.0;
  std::vector<double> sizes;
  std::vector<double> averages;
  std::optional<FitReport> power_law;
  std::optional<FitReport> exponential;
};

std::vector<SizeScaling> size_scaling(const std::vector<RunRecord>& records);
std::optional<AlphaFit> homogeneous_alpha(const std::vector<RunRecord>& records);

}  // namespace xxz
