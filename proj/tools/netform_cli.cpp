#include "netform/config.hpp"
#include "netform/estimate.hpp"
#include "netform/montecarlo.hpp"
#include "netform/parallel.hpp"
#include "netform/simulate.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

constexpr const char* kVersion = "0.1.0";

enum Exit { kOk = 0, kConfigError = 2, kDataError = 3, kNonConvergence = 4 };

struct Manifest {
  std::string command;
  std::string config;
  std::uint64_t seed = 0;
  std::vector<std::string> artifacts;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void write(const std::string& path, const std::string& status) const {
    std::ofstream out(path);
    out << "command = " << command << '\n';
    out << "config = " << config << '\n';
    out << "seed = " << seed << '\n';
    out << "artifacts = ";
    for (std::size_t k = 0; k < artifacts.size(); ++k) out << (k ? ", " : "") << artifacts[k];
    out << '\n';
    out << "status = " << status << '\n';
    out << "wall_clock_seconds = "
        << std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() << '\n';
    out << "version = " << kVersion << '\n';
  }
};

std::string sibling(const std::string& out, const std::string& suffix) {
  std::filesystem::path p(out);
  return (p.parent_path() / (p.stem().string() + suffix)).string();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  return f;
}

void print_matrix(std::ostream& out, const netform::Matrix& m) {
  for (Eigen::Index s = 0; s < m.rows(); ++s) {
    for (Eigen::Index t = 0; t < m.cols(); ++t) out << (t ? " " : "") << std::fixed << std::setprecision(8) << m(s, t);
    out << '\n';
  }
}

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  int threads = netform::default_threads();
};

netform::RunConfig load(const Common& c) {
  netform::RunConfig rc = netform::load_run_config(c.config);
  if (c.seed) rc.experiment.base_seed = *c.seed;
  rc.experiment.threads = c.threads;
  return rc;
}

void warn_missing_pairs(const netform::Population& pop) {
  const int T = pop.num_types();
  for (int s = 0; s < T; ++s)
    for (int t = 0; t < T; ++t)
      if (pop.counts[s] == 0 || pop.available(s, t) == 0)
        std::cerr << "warning: no ordered pairs with types (" << s << "," << t
                  << "); the first step cannot estimate that link frequency\n";
}

int cmd_simulate(const Common& c, bool oracle) {
  netform::RunConfig rc = load(c);
  auto& ex = rc.experiment;
  Manifest man{"simulate", c.config, ex.base_seed, {}};
  const std::string manifest = sibling(c.out, ".manifest");
  netform::GeneratedData gen;
  try {
    gen = netform::generate_replication_data(ex, 0);
  } catch (const netform::NonConvergence& e) {
    std::cerr << "error: " << e.what() << '\n';
    man.artifacts.push_back(manifest);
    man.write(manifest, "non-convergence");
    return kNonConvergence;
  }
  warn_missing_pairs(gen.data.pop);
  if (oracle) {
    if (ex.n - 1 > 20) throw std::invalid_argument("--oracle-check needs n <= 21");
    int bad = netform::oracle_check(gen.data, ex.theta_dgp, gen.finite.p_star, ex.ts, ex.dist,
                                    netform::replication_stream(ex.base_seed, 0).child(netform::stream_tag::data_shocks));
    std::cout << "oracle check: " << bad << " of " << ex.n << " rows differ\n";
    if (bad) throw std::runtime_error("generated rows disagree with the brute-force oracle");
  }
  netform::save_edge_list(c.out, gen.data);
  man.artifacts = {c.out, manifest};
  man.write(manifest, "ok");
  std::cout << "wrote " << c.out << " (n = " << ex.n << ", edges = " << gen.data.adjacency.cast<int>().sum()
            << ")\n";
  return kOk;
}

int cmd_estimate(const Common& c, const std::string& data_path, const std::string& mode_text) {
  netform::RunConfig rc = load(c);
  auto& ex = rc.experiment;
  netform::EstimatorMode mode = mode_text.empty() ? ex.modes.front() : netform::mode_from_name(mode_text);
  netform::NetworkData data;
  try {
    data = netform::load_edge_list(data_path);
    data.validate();
    if (data.pop.num_types() != ex.ts.size())
      throw std::runtime_error("data has " + std::to_string(data.pop.num_types()) + " types, config has " +
                               std::to_string(ex.ts.size()));
    (void)netform::first_step(data);
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  }
  netform::EstimationResult r =
      netform::solve_gmm(data, mode, ex.estimation, netform::replication_stream(ex.base_seed, 0));

  const std::string record = sibling(c.out, ".record");
  const std::string manifest = sibling(c.out, ".manifest");
  {
    auto f = open_out(c.out);
    netform::write_result_csv_header(f, r.names);
    netform::write_result_csv_row(f, r);
  }
  {
    auto f = open_out(record);
    netform::write_result_record(f, r);
  }
  netform::write_result_record(std::cout, r);
  Manifest man{"estimate", c.config, ex.base_seed, {c.out, record, manifest}};
  man.write(manifest, r.converged ? "ok" : "non-convergence");
  return r.converged ? kOk : kNonConvergence;
}

int cmd_mc(const Common& c, bool oracle) {
  netform::RunConfig rc = load(c);
  auto& ex = rc.experiment;
  if (oracle) {
    if (ex.n - 1 > 20) throw std::invalid_argument("--oracle-check needs n <= 21");
    ex.oracle_check_max_n = std::max(ex.oracle_check_max_n, ex.n);
  }
  netform::ExperimentReport report = netform::run_experiment(ex);
  const std::string reps = sibling(c.out, "_reps.csv");
  const std::string table = sibling(c.out, "_table.txt");
  const std::string manifest = sibling(c.out, ".manifest");
  {
    auto f = open_out(c.out);
    netform::write_report_csv(f, report);
  }
  {
    auto f = open_out(reps);
    netform::write_replications_csv(f, report);
  }
  {
    auto f = open_out(table);
    netform::write_report_table(f, report);
  }
  netform::write_report_table(std::cout, report);
  bool failed = false;
  for (const auto& o : report.outcomes) {
    if (!o.ok) {
      failed = true;
      std::cerr << "rep " << o.rep << " failed: " << o.error << '\n';
    }
    for (const auto& m : o.modes)
      if (!m.ok) {
        failed = true;
        std::cerr << "rep " << o.rep << " " << netform::mode_name(m.mode) << " failed: " << m.error << '\n';
      }
  }
  Manifest man{"mc", c.config, ex.base_seed, {c.out, reps, table, manifest}};
  man.write(manifest, failed ? "partial-failure" : "ok");
  return failed ? kNonConvergence : kOk;
}

int cmd_equilibrium(const Common& c, bool finite) {
  netform::RunConfig rc = load(c);
  auto& ex = rc.experiment;
  netform::EquilibriumSolveReport rep = netform::solve_equilibrium_limit(
      ex.theta_dgp, ex.ts, ex.dist, netform::LinkProbMatrix::constant(ex.ts.size(), 0.5), ex.limit_options);
  std::ostringstream text;
  if (finite && rep.converged) {
    const auto rs = netform::replication_stream(ex.base_seed, 0);
    netform::Population pop = netform::draw_population(ex.n, ex.ts, rs.child(netform::stream_tag::population));
    const int draws = ex.equilibrium_draws > 0 ? ex.equilibrium_draws : ex.R;
    rep = netform::solve_equilibrium_finite(ex.theta_dgp, pop, ex.ts, ex.dist, draws,
                                            rs.child(netform::stream_tag::equilibrium_crn), rep.p_star,
                                            ex.finite_options);
    text << "game = finite\nn = " << ex.n << "\ndraws = " << draws << '\n';
  } else {
    text << "game = limit\n";
  }
  text << "p_star =\n";
  print_matrix(text, rep.p_star.p);
  text << std::scientific << std::setprecision(3);
  text << "residual = " << rep.residual << "\ntolerance = " << rep.tolerance << '\n';
  text << "iterations = " << rep.iterations << "\nconverged = " << (rep.converged ? "true" : "false") << '\n';
  std::cout << text.str();
  if (!c.out.empty()) {
    auto f = open_out(c.out);
    f << text.str();
    const std::string manifest = sibling(c.out, ".manifest");
    Manifest man{finite ? "equilibrium --finite" : "equilibrium --limit", c.config, ex.base_seed, {c.out, manifest}};
    man.write(manifest, rep.converged ? "ok" : "non-convergence");
  }
  return rep.converged ? kOk : kNonConvergence;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Network formation games with friends-in-common utility: simulate, solve, estimate."};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  Common common;
  bool oracle = false;
  std::string data_path, mode_text;
  bool limit_flag = false, finite_flag = false;

  auto add_common = [&](CLI::App* sub, bool needs_out) {
    sub->add_option("--config", common.config, "configuration file")->required()->check(CLI::ExistingFile);
    auto* o = sub->add_option("--out", common.out, "output path");
    if (needs_out) o->required();
    sub->add_option("--seed", common.seed, "base seed (overrides montecarlo.seed)");
    sub->add_option("--threads", common.threads, "worker threads")->check(CLI::PositiveNumber);
  };

  auto* sim = app.add_subcommand("simulate", "solve the equilibrium and write one simulated network");
  add_common(sim, true);
  sim->add_flag("--oracle-check", oracle, "verify every row against the brute-force oracle");

  auto* est = app.add_subcommand("estimate", "two-step GMM estimate from an edge-list file");
  add_common(est, true);
  est->add_option("--data", data_path, "edge-list file")->required();
  est->add_option("--mode", mode_text, "finite-finite | finite-limit | limit-limit");

  auto* mc = app.add_subcommand("mc", "run a Monte Carlo experiment");
  add_common(mc, true);
  mc->add_flag("--oracle-check", oracle, "verify every generated row against the brute-force oracle");

  auto* eq = app.add_subcommand("equilibrium", "solve and print a symmetric equilibrium");
  add_common(eq, false);
  auto* lf = eq->add_flag("--limit", limit_flag, "limiting game");
  auto* ff = eq->add_flag("--finite", finite_flag, "finite-n game (population drawn from the seed)");
  lf->excludes(ff);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (*sim) return cmd_simulate(common, oracle);
    if (*est) return cmd_estimate(common, data_path, mode_text);
    if (*mc) return cmd_mc(common, oracle);
    if (*eq) return cmd_equilibrium(common, finite_flag);
  } catch (const netform::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const netform::MissingTypePair& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNonConvergence;
  }
  return kOk;
}
