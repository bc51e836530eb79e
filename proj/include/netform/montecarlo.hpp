#pragma once

#include "netform/equilibrium.hpp"
#include "netform/estimate.hpp"
#include "netform/model.hpp"
#include "netform/simulate.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace netform {

struct ExperimentConfig {
  int n = 50;
  int reps = 25;
  int R = 200;                 // simulation draws for the moment and instruments
  int equilibrium_draws = 0;   // draws for the finite-n equilibrium; <= 0 means R
  CoefficientSet theta_dgp;    // free mask marks the estimated entries
  TypeSpace ts;
  ShockDistribution dist;
  std::vector<EstimatorMode> modes{EstimatorMode::FiniteFinite};
  std::uint64_t base_seed = 1;
  EquilibriumOptions limit_options;
  EquilibriumOptions finite_options;
  EstimationConfig estimation;  // coef, ts, dist and R are overwritten from the fields above
  int oracle_check_max_n = 12;
  int threads = 1;
  int fault_rep = -1;  // this replication gets an unattainable equilibrium tolerance

  void validate() const;
};

struct ModeOutcome {
  EstimatorMode mode = EstimatorMode::FiniteFinite;
  bool ok = false;
  std::string error;
  std::optional<EstimationResult> result;
};

struct RepOutcome {
  int rep = 0;
  bool ok = false;  // data generated; estimation outcomes are per mode
  std::string error;
  LinkProbMatrix p_limit;
  LinkProbMatrix p_finite;
  double finite_residual = 0.0;
  int oracle_mismatches = -1;  // -1 when the oracle check was skipped
  std::vector<ModeOutcome> modes;
};

struct ModeSummary {
  EstimatorMode mode = EstimatorMode::FiniteFinite;
  std::vector<std::string> names;
  Vector mean;
  Vector sd;          // sample SD across reps
  Vector mean_se;     // average sandwich std error, where available
  int reps_used = 0;
  int failures = 0;
  std::vector<int> excluded;
};

struct ExperimentReport {
  int n = 0;
  int reps = 0;
  std::uint64_t base_seed = 0;
  Vector truth;
  std::vector<std::string> names;
  double limit_tolerance = 0.0;
  double finite_tolerance = 0.0;
  std::vector<RepOutcome> outcomes;
  std::vector<ModeSummary> summaries;
};

// Replication streams: RandomStream(base_seed).child(rep), split by purpose tag.
RandomStream replication_stream(std::uint64_t base_seed, int rep);

struct GeneratedData {
  NetworkData data;
  EquilibriumSolveReport limit;
  EquilibriumSolveReport finite;
};

// Population draw, limiting then finite-n equilibrium, and network generation
// for one replication.  Throws on solver non-convergence.
GeneratedData generate_replication_data(const ExperimentConfig& cfg, int rep);

RepOutcome run_replication(const ExperimentConfig& cfg, int rep);
ExperimentReport run_experiment(const ExperimentConfig& cfg);

// mode,n,parameter,mean,sd,reps_used
void write_report_csv(std::ostream& out, const ExperimentReport& report);
// one row per rep and mode with the raw estimates
void write_replications_csv(std::ostream& out, const ExperimentReport& report);
void write_report_table(std::ostream& out, const ExperimentReport& report);

}  // namespace netform
