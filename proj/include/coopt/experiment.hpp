#pragma once

#include <string>
#include <vector>

#include "coopt/config.hpp"
#include "coopt/learned.hpp"
#include "coopt/oracle.hpp"

namespace coopt {

/// Parses a JSON document; throws ConfigError on schema problems and
/// AssumptionViolation when the model breaks a standing assumption.
ExperimentConfig parse_config(const std::string& json_text);

/// Reads and parses @p path.
ExperimentConfig load_config(const std::string& path);

/// The bundled four-agent setup (compiled in).
ExperimentConfig bundled_config();

/// Numerical checks of stabilizability, the regulator rank condition, the
/// spanning tree and rho(E) <= 1. Throws AssumptionViolation naming the
/// first failure.
void check_assumptions(const MasModel& mas);

/// Dispatches to the off-policy or Q-learning pipeline.
LearnedGains run_learning(const ExperimentConfig& config);

/// Model-based reference quantities of one follower.
struct OracleAgent {
  AreSolution are;
  Mat H;  ///< h_from_p(P*, ..., gamma = 1)
  Mat X, U, T;
};

std::vector<OracleAgent> compute_oracle(const ExperimentConfig& config);

/// One line of the learned-versus-oracle error table. NaN marks a column
/// that does not apply to the phase.
struct ErrorRow {
  int agent = 0;
  std::string phase;  ///< "stabilizing", "optimal" or "regulator"
  int iteration = 0;
  double P_err = kNaN, K_err = kNaN, H_err = kNaN, chi_err = kNaN;
};

/// Stabilizing rows compare P~^k with the model-based evaluation of the same
/// (K^k, gamma^k); optimal rows compare P^j, K^j, H^j with the Riccati
/// solution; regulator rows compare vec([X^n; U^n]) with the direct solve.
std::vector<ErrorRow> compare_with_oracle(const ExperimentConfig& config,
                                          const LearnedGains& learned,
                                          bool include_regulator = true);

void write_error_table(const std::vector<ErrorRow>& rows,
                       const std::string& path);

struct ExperimentReport {
  LearnedGains learned;
  TrajectoryLog closed_loop;
  std::vector<OracleAgent> oracle;
  std::vector<double> rho_stab;   ///< rho(A - B K_stab) from the config model
  std::vector<double> rho_final;  ///< rho(A - B K^*) from the config model
  std::vector<double> P_err, H_err, regulator_residual;
  bool all_schur = false;
};

/// Learns, verifies every gain against the config model, runs the closed
/// loop from the end of the data window and, when @p out_dir is non-empty,
/// writes CSV histories plus summary.json there.
ExperimentReport run_experiment(const ExperimentConfig& config,
                                const std::string& out_dir);

/// 0 success, 2 configuration, 3 rank condition, 4 iteration failure.
int exit_code_for(const std::exception& e);

}  // namespace coopt
