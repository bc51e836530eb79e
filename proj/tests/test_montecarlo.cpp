#include "fixtures.hpp"

#include "netform/montecarlo.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace netform;

namespace {

std::string csv(const ExperimentReport& r) {
  std::ostringstream out;
  write_report_csv(out, r);
  write_replications_csv(out, r);
  return out.str();
}

ExperimentConfig small_friends(int reps) {
  ExperimentConfig cfg = fixture::experiment(fixture::friends_design(), 20, reps, 99);
  cfg.R = 30;
  cfg.modes = {EstimatorMode::LimitLimit};
  cfg.estimation.simplex.max_iter = 150;
  cfg.estimation.compute_variance = false;
  return cfg;
}

}  // namespace

TEST_CASE("config validation") {
  ExperimentConfig cfg = small_friends(1);
  cfg.reps = 0;
  CHECK_THROWS(cfg.validate());
  cfg = small_friends(1);
  cfg.R = 0;
  CHECK_THROWS(cfg.validate());
  cfg = small_friends(1);
  cfg.n = 3;
  CHECK_THROWS_WITH(cfg.validate(), "n must be >= 4");
}

TEST_CASE("a single replication is reproducible") {
  ExperimentConfig cfg = small_friends(1);
  ExperimentReport a = run_experiment(cfg);
  ExperimentReport b = run_experiment(cfg);
  CHECK(csv(a) == csv(b));
  REQUIRE(a.outcomes.size() == 1);
  CHECK(a.outcomes[0].ok);
}

TEST_CASE("report is independent of thread count and replication order") {
  ExperimentConfig cfg = small_friends(4);
  cfg.threads = 1;
  ExperimentReport serial = run_experiment(cfg);
  cfg.threads = 3;
  ExperimentReport threaded = run_experiment(cfg);
  CHECK(csv(serial) == csv(threaded));
  // replication 2 run alone matches its row in the full run
  RepOutcome alone = run_replication(cfg, 2);
  CHECK(alone.modes[0].result->theta == serial.outcomes[2].modes[0].result->theta);
}

TEST_CASE("small networks are checked against the exhaustive oracle") {
  ExperimentConfig cfg = small_friends(2);
  cfg.n = 10;
  ExperimentReport r = run_experiment(cfg);
  for (const auto& o : r.outcomes) CHECK(o.oracle_mismatches == 0);
  cfg.n = 20;
  cfg.oracle_check_max_n = 12;
  ExperimentReport big = run_experiment(cfg);
  for (const auto& o : big.outcomes) CHECK(o.oracle_mismatches == -1);
}

TEST_CASE("an injected solver failure is reported and excluded") {
  ExperimentConfig cfg = small_friends(3);
  cfg.fault_rep = 1;
  ExperimentReport r = run_experiment(cfg);
  CHECK(r.outcomes[0].ok);
  CHECK_FALSE(r.outcomes[1].ok);
  CHECK(r.outcomes[1].error.find("did not converge") != std::string::npos);
  CHECK(r.outcomes[2].ok);
  REQUIRE(r.summaries.size() == 1);
  CHECK(r.summaries[0].reps_used == 2);
  CHECK(r.summaries[0].failures == 1);
  CHECK(r.summaries[0].excluded == std::vector<int>{1});
  std::ostringstream table;
  write_report_table(table, r);
  CHECK(table.str().find("excluded reps: 1") != std::string::npos);
  std::ostringstream reps;
  write_replications_csv(reps, r);
  CHECK(reps.str().find("1,none,failed") != std::string::npos);
}

TEST_CASE("report CSV layout") {
  ExperimentConfig cfg = small_friends(2);
  ExperimentReport r = run_experiment(cfg);
  std::ostringstream out;
  write_report_csv(out, r);
  std::istringstream lines(out.str());
  std::string line;
  std::getline(lines, line);
  CHECK(line == "mode,n,parameter,mean,sd,reps_used");
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == 5);  // one mode, five parameters
  CHECK(r.summaries[0].sd.allFinite());
}

TEST_CASE("probit Monte Carlo: limit-limit estimates are centred on the truth") {
  ExperimentConfig cfg = fixture::experiment(fixture::probit_design(), 40, 12, 5);
  cfg.modes = {EstimatorMode::LimitLimit};
  ExperimentReport r = run_experiment(cfg);
  const ModeSummary& s = r.summaries[0];
  REQUIRE(s.reps_used == 12);
  for (int k = 0; k < 3; ++k) CHECK(std::abs(s.mean(k) - r.truth(k)) < 3.0 * s.sd(k) / std::sqrt(12.0));
}
