#include "netform/montecarlo.hpp"

#include "netform/parallel.hpp"
#include "netform/simulate.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace netform {

void ExperimentConfig::validate() const {
  if (reps < 1) throw std::invalid_argument("reps must be >= 1");
  if (R < 1) throw std::invalid_argument("R must be >= 1");
  if (n < 4) throw std::invalid_argument("n must be >= 4");
  if (modes.empty()) throw std::invalid_argument("at least one estimator mode is required");
  ts.validate();
  theta_dgp.validate(ts.size(), ts.dim());
  if (theta_dgp.num_free() < 1) throw std::invalid_argument("the free mask selects no parameters");
}

RandomStream replication_stream(std::uint64_t base_seed, int rep) {
  return RandomStream(base_seed).child(static_cast<std::uint64_t>(rep));
}

GeneratedData generate_replication_data(const ExperimentConfig& cfg, int rep) {
  const RandomStream rs = replication_stream(cfg.base_seed, rep);
  GeneratedData out;
  Population pop = draw_population(cfg.n, cfg.ts, rs.child(stream_tag::population));
  out.limit = solve_equilibrium_limit(cfg.theta_dgp, cfg.ts, cfg.dist, LinkProbMatrix::constant(cfg.ts.size(), 0.5),
                                      cfg.limit_options);
  if (!out.limit.converged)
    throw NonConvergence("limiting equilibrium did not converge (residual " + std::to_string(out.limit.residual) + ")");
  EquilibriumOptions fin_opts = cfg.finite_options;
  if (rep == cfg.fault_rep) fin_opts.tol = 1e-300;
  const int draws = cfg.equilibrium_draws > 0 ? cfg.equilibrium_draws : cfg.R;
  out.finite = solve_equilibrium_finite(cfg.theta_dgp, pop, cfg.ts, cfg.dist, draws,
                                        rs.child(stream_tag::equilibrium_crn), out.limit.p_star, fin_opts);
  if (!out.finite.converged)
    throw NonConvergence("finite-n equilibrium did not converge (residual " + std::to_string(out.finite.residual) +
                         ")");
  out.data = generate_network(cfg.theta_dgp, out.finite.p_star, pop, cfg.ts, cfg.dist,
                              rs.child(stream_tag::data_shocks));
  out.data.seed = cfg.base_seed;
  return out;
}

RepOutcome run_replication(const ExperimentConfig& cfg, int rep) {
  RepOutcome out;
  out.rep = rep;
  const RandomStream rs = replication_stream(cfg.base_seed, rep);
  try {
    GeneratedData gen = generate_replication_data(cfg, rep);
    out.p_limit = gen.limit.p_star;
    out.p_finite = gen.finite.p_star;
    out.finite_residual = gen.finite.residual;
    const NetworkData& data = gen.data;
    if (cfg.n <= cfg.oracle_check_max_n) {
      out.oracle_mismatches = oracle_check(data, cfg.theta_dgp, gen.finite.p_star, cfg.ts, cfg.dist,
                                           rs.child(stream_tag::data_shocks));
      if (out.oracle_mismatches != 0)
        throw std::runtime_error(std::to_string(out.oracle_mismatches) + " rows differ from the brute-force oracle");
    }
    out.ok = true;

    EstimationConfig est = cfg.estimation;
    est.coef = cfg.theta_dgp;
    est.ts = cfg.ts;
    est.dist = cfg.dist;
    est.R = cfg.R;
    for (EstimatorMode mode : cfg.modes) {
      ModeOutcome mo;
      mo.mode = mode;
      try {
        mo.result = solve_gmm(data, mode, est, rs);
        mo.ok = std::isfinite(mo.result->moment_norm) && mo.result->theta.allFinite();
        if (!mo.ok) mo.error = "non-finite estimate";
      } catch (const std::exception& e) {
        mo.error = e.what();
      }
      out.modes.push_back(std::move(mo));
    }
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = e.what();
  }
  return out;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentReport report;
  report.n = cfg.n;
  report.reps = cfg.reps;
  report.base_seed = cfg.base_seed;
  report.truth = cfg.theta_dgp.pack_free();
  report.names = cfg.theta_dgp.free_names();
  report.limit_tolerance = cfg.limit_options.tol > 0.0 ? cfg.limit_options.tol : 1e-10;
  {
    const int draws = cfg.equilibrium_draws > 0 ? cfg.equilibrium_draws : cfg.R;
    report.finite_tolerance = cfg.finite_options.tol > 0.0
                                  ? cfg.finite_options.tol
                                  : std::max(1e-4, 1.0 / std::sqrt(static_cast<double>(draws) * cfg.n));
  }
  report.outcomes.resize(cfg.reps);
  parallel_for(cfg.reps, cfg.threads, [&](int rep) { report.outcomes[rep] = run_replication(cfg, rep); });

  // fold in rep order
  const int d = static_cast<int>(report.names.size());
  for (std::size_t m = 0; m < cfg.modes.size(); ++m) {
    ModeSummary sum;
    sum.mode = cfg.modes[m];
    sum.names = report.names;
    std::vector<Vector> kept;
    std::vector<Vector> ses;
    for (const RepOutcome& o : report.outcomes) {
      if (!o.ok || !o.modes[m].ok) {
        ++sum.failures;
        sum.excluded.push_back(o.rep);
        continue;
      }
      kept.push_back(o.modes[m].result->theta);
      if (o.modes[m].result->has_variance) ses.push_back(o.modes[m].result->std_errors);
    }
    sum.reps_used = static_cast<int>(kept.size());
    sum.mean = Vector::Constant(d, std::numeric_limits<double>::quiet_NaN());
    sum.sd = Vector::Constant(d, std::numeric_limits<double>::quiet_NaN());
    sum.mean_se = Vector::Constant(d, std::numeric_limits<double>::quiet_NaN());
    if (!kept.empty()) {
      sum.mean = Vector::Zero(d);
      for (const Vector& v : kept) sum.mean += v;
      sum.mean /= static_cast<double>(kept.size());
      if (kept.size() > 1) {
        Vector ss = Vector::Zero(d);
        for (const Vector& v : kept) ss += (v - sum.mean).cwiseAbs2();
        sum.sd = (ss / static_cast<double>(kept.size() - 1)).cwiseSqrt();
      }
    }
    if (!ses.empty()) {
      sum.mean_se = Vector::Zero(d);
      for (const Vector& v : ses) sum.mean_se += v;
      sum.mean_se /= static_cast<double>(ses.size());
    }
    report.summaries.push_back(std::move(sum));
  }
  return report;
}

namespace {

std::string num(double x, int digits = 6) {
  if (!std::isfinite(x)) return "NA";
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << x;
  return os.str();
}

}  // namespace

void write_report_csv(std::ostream& out, const ExperimentReport& report) {
  out << "mode,n,parameter,mean,sd,reps_used\n";
  for (const ModeSummary& s : report.summaries)
    for (std::size_t k = 0; k < s.names.size(); ++k)
      out << mode_name(s.mode) << ',' << report.n << ',' << s.names[k] << ',' << num(s.mean(k)) << ','
          << num(s.sd(k)) << ',' << s.reps_used << '\n';
}

void write_replications_csv(std::ostream& out, const ExperimentReport& report) {
  out << "rep,mode,status";
  for (const auto& nm : report.names) out << ',' << nm;
  for (const auto& nm : report.names) out << ",se_" << nm;
  out << ",moment_norm\n";
  for (const RepOutcome& o : report.outcomes) {
    if (!o.ok) {
      out << o.rep << ",none,failed";
      for (std::size_t k = 0; k < 2 * report.names.size() + 1; ++k) out << ",NA";
      out << '\n';
      continue;
    }
    for (const ModeOutcome& m : o.modes) {
      out << o.rep << ',' << mode_name(m.mode) << ',' << (m.ok ? "ok" : "failed");
      const bool has = m.result.has_value();
      for (std::size_t k = 0; k < report.names.size(); ++k) out << ',' << (has ? num(m.result->theta(k)) : "NA");
      for (std::size_t k = 0; k < report.names.size(); ++k)
        out << ',' << (has && m.result->has_variance ? num(m.result->std_errors(k)) : "NA");
      out << ',' << (has ? num(m.result->moment_norm, 10) : "NA") << '\n';
    }
  }
}

void write_report_table(std::ostream& out, const ExperimentReport& report) {
  const int w = 12;
  for (const ModeSummary& s : report.summaries) {
    out << "Estimator " << mode_name(s.mode) << "  (n = " << report.n << ", reps used " << s.reps_used << " of "
        << report.reps << ")\n";
    out << std::setw(6) << "n";
    for (const auto& nm : s.names) out << std::setw(w) << nm;
    out << '\n';
    out << std::setw(6) << report.n;
    for (Eigen::Index k = 0; k < s.mean.size(); ++k) out << std::setw(w) << num(s.mean(k), 3);
    out << '\n' << std::setw(6) << "";
    for (Eigen::Index k = 0; k < s.sd.size(); ++k) out << std::setw(w) << ("(" + num(s.sd(k), 3) + ")");
    out << '\n' << std::setw(6) << "DGP";
    for (Eigen::Index k = 0; k < report.truth.size(); ++k) out << std::setw(w) << num(report.truth(k), 3);
    out << '\n';
    if (!s.excluded.empty()) {
      out << "excluded reps:";
      for (int r : s.excluded) out << ' ' << r;
      out << '\n';
    }
    out << '\n';
  }
  out << "equilibrium tolerances: limit " << report.limit_tolerance << ", finite " << report.finite_tolerance
      << '\n';
}

}  // namespace netform
