#pragma once

#include <optional>
#include <string>

#include "rhlearn/simulation.hpp"

namespace rhlearn {

/// Fully validated description of one closed-loop experiment. The on-disk
/// format is flat `key = value` lines with dotted section prefixes; see the
/// README for the key reference.
struct ExperimentConfig {
  std::string plant_kind = "linear_sec6a";  // linear_sec6a | robot_arm | custom
  Vector initial_state;                     // empty selects the builtin default
  Matrix F, G, H;                           // custom plants only

  int m = 4;           // stacking depth
  int window = 8;      // estimator regression window
  int horizon = 20;    // controller horizon N

  double q_scale = 100.0;
  double r_scale = 10000.0;
  double qn_scale = 100.0;
  double alpha = 1.0;
  double eps_c0 = 1.0;
  double eps_c1 = 1000.0;
  double lambda_max = 0.5;
  int steps = 41;

  std::string theta0_kind = "canonical";  // canonical | explicit
  double theta0_scale = 1.0;
  Vector theta0_values;

  double settle_tol = 1e-3;   // threshold for the reported convergence step
  std::string output_path;    // CSV filename; empty derives it from the config name
};

/// Parses and validates a config. Errors carry the offending key.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

/// Canonical serialization; parse(serialize(c)) reproduces c exactly.
std::string serialize_config(const ExperimentConfig& cfg);

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double v);

/// Instantiated closed loop: plant, lifting, estimator and controller
/// configuration assembled from an experiment config.
struct ClosedLoopSetup {
  std::unique_ptr<Plant> plant;
  LiftingConfig lift;
  EstimatorConfig estimator;
  RhcConfig rhc;
  int steps = 0;
};

ClosedLoopSetup build_setup(const ExperimentConfig& cfg);

struct ExperimentResult {
  int exit_code = 0;          // 0 ok, 3 numerical failure
  std::string csv_path;
  std::string summary_path;
  std::string error;          // set when exit_code != 0
  int steps_completed = 0;
  std::optional<ConvergenceMetrics> metrics;
};

/// Runs the configured closed loop, streaming the trajectory CSV and writing
/// a summary file. `stem` names the outputs when the config does not.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir,
                                const std::string& stem = "experiment");

/// CSV header for the given signal dimensions:
/// k, y_1..y_p, v_1..v_q, eps, gamma_over_eps, v1_value, est_residual,
/// lambda_used, controllable.
std::string csv_header(int output_dim, int input_dim);
std::string csv_row(const StepRecord& rec);

}  // namespace rhlearn
