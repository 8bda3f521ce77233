#pragma once

#include "adjust/config.hpp"
#include "adjust/evaluation.hpp"
#include "adjust/phantoms.hpp"
#include "adjust/spectral.hpp"
#include "adjust/tomo.hpp"

#include <string>
#include <vector>

namespace adjust {

/// Everything a run needs that is derived from the configuration alone.
struct Scenario {
  MaterialMap phantom_hi;   ///< simulation-resolution phantom (2x)
  MaterialMap phantom;      ///< ground truth at reconstruction resolution
  ParallelGeometry geometry;
  std::vector<Index> channels;  ///< kept channel indices into the full binning
  ChannelBinning binning;       ///< centers of the kept channels
  SpectralDictionary dictionary;  ///< D x C'
  Matrix F_true;                  ///< M x C' spectra of the phantom materials
  SourceSpectrum source;          ///< C' entries
};

Scenario build_scenario(const RunConfig& cfg);

/// Reconstruction operator for the scenario's grid and geometry.
TomoOperator scenario_operator(const Scenario& s);

/// Noisy (or noiseless) log-corrected sinogram Y, J x C', and the full-count
/// matrix before the log.
struct Measurement {
  Matrix counts;
  Matrix Y;
};
Measurement simulate_measurement(const RunConfig& cfg, const Scenario& s);

struct MethodOutput {
  std::string method;
  Matrix A;
  Matrix F;
  Matrix R;  ///< adjust only
  std::vector<IterationRecord> history;
  std::string stop_reason;
  double wall_seconds = 0.0;
};

/// Runs one method on Y with the configured parameters. For adjust a history
/// row is appended to `history_path` after every iteration when it is nonempty.
MethodOutput run_method(const RunConfig& cfg, const std::string& method,
                        const TomoOperator& W, const Eigen::Ref<const Matrix>& T,
                        const Eigen::Ref<const Matrix>& Y, int materials,
                        const std::string& history_path = "");

struct MethodSummary {
  std::string method;
  MatchResult match;
  double wall_seconds = 0.0;
  std::string stop_reason;
  int iterations = 0;
};

struct ExperimentReport {
  std::string config_snapshot;  ///< JSON text of the effective config
  std::vector<MethodSummary> methods;
  std::vector<std::string> artifacts;  ///< paths relative to the run directory
};

// Command implementations. All write into cfg.output_dir.

/// Writes config.json, Y, counts, A_gt, F_true, T, channels and geometry files.
void cmd_simulate(const RunConfig& cfg);
/// Reads Y and T, writes A_<m>, F_<m> (and R_adjust), history_<m>.csv, run_<m>.json.
void cmd_reconstruct(const RunConfig& cfg, const std::string& method);
/// Scores every reconstruction present in `run_dir`; writes results.csv,
/// spectra_<m>.csv, PGM images and report.json.
ExperimentReport cmd_evaluate(const std::string& run_dir);
/// One history CSV per rho, all from the same start and data.
void cmd_sweep_rho(const RunConfig& cfg, const std::vector<double>& rhos);
/// simulate, reconstruct (every method, or only `method` when nonempty),
/// evaluate, sweep-rho.
ExperimentReport cmd_pipeline(const RunConfig& cfg, const std::string& method = "");

/// File-name friendly rendering of a rho value, e.g. 0.01 -> "0.01".
std::string rho_tag(double rho);

}  // namespace adjust
