#include "netform/estimate.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace netform {

std::string mode_name(EstimatorMode mode) {
  switch (mode) {
    case EstimatorMode::FiniteFinite: return "finite_finite";
    case EstimatorMode::FiniteLimit: return "finite_limit";
    case EstimatorMode::LimitLimit: return "limit_limit";
  }
  return "unknown";
}

EstimatorMode mode_from_name(std::string_view name) {
  std::string s(name);
  std::replace(s.begin(), s.end(), '-', '_');
  if (s == "finite_finite") return EstimatorMode::FiniteFinite;
  if (s == "finite_limit") return EstimatorMode::FiniteLimit;
  if (s == "limit_limit") return EstimatorMode::LimitLimit;
  throw std::invalid_argument("unknown estimator mode '" + std::string(name) + "'");
}

MissingTypePair::MissingTypePair(int s_, int t_)
    : std::runtime_error("no ordered pairs with types (" + std::to_string(s_) + "," + std::to_string(t_) +
                         "); link frequency undefined"),
      s(s_),
      t(t_) {}

SingularJacobian::SingularJacobian(double cond)
    : std::runtime_error("moment Jacobian in theta is singular (condition " + std::to_string(cond) +
                         "); the nonsingularity assumption fails and the sandwich is undefined"),
      condition(cond) {}

PairTally tally_pairs(const NetworkData& data) {
  const int T = data.pop.num_types();
  PairTally tally;
  tally.n = data.n();
  tally.links = Matrix::Zero(T, T);
  tally.pairs = Matrix::Zero(T, T);
  for (int s = 0; s < T; ++s)
    for (int t = 0; t < T; ++t)
      tally.pairs(s, t) = static_cast<double>(data.pop.counts[s]) * data.pop.available(s, t);
  for (int i = 0; i < data.n(); ++i)
    for (int j = 0; j < data.n(); ++j)
      if (data.adjacency(i, j)) tally.links(data.pop.type_of[i], data.pop.type_of[j]) += 1.0;
  return tally;
}

LinkProbMatrix first_step(const NetworkData& data) {
  PairTally tally = tally_pairs(data);
  const int T = data.pop.num_types();
  for (int s = 0; s < T; ++s)
    for (int t = 0; t < T; ++t)
      if (tally.pairs(s, t) == 0.0) throw MissingTypePair(s, t);
  return LinkProbMatrix(tally.links.cwiseQuotient(tally.pairs));
}

TypeSpace empirical_types(const TypeSpace& ts, const Population& pop) {
  if (pop.num_types() != ts.size()) throw std::invalid_argument("population and type space disagree on T");
  TypeSpace out = ts;
  for (int t = 0; t < ts.size(); ++t) out.limit_probs(t) = static_cast<double>(pop.counts[t]) / pop.n();
  return out;
}

CcpProvider CcpProvider::simulated(const Population& pop, const TypeSpace& ts, const ShockDistribution& dist, int R,
                                   const RandomStream& stream) {
  CcpProvider prov;
  prov.simulated_ = true;
  prov.pop_ = pop;
  prov.ts_ = ts;
  prov.dist_ = dist;
  prov.panel_ = ShockPanel(pop, dist, R, stream);
  return prov;
}

CcpProvider CcpProvider::limiting(const Population& pop, const TypeSpace& ts, const ShockDistribution& dist) {
  CcpProvider prov;
  prov.simulated_ = false;
  prov.pop_ = pop;
  prov.ts_ = empirical_types(ts, pop);
  prov.dist_ = dist;
  return prov;
}

LinkProbMatrix CcpProvider::operator()(const CoefficientSet& coef, const LinkProbMatrix& p) const {
  if (simulated_) return ccp_simulated(coef, p, pop_, ts_, panel_);
  return limiting_ccp_matrix(coef, p, ts_, dist_);
}

namespace {

Vector flatten(const Matrix& m) {
  // row-major: entry (s,t) at s*T+t
  const int T = static_cast<int>(m.rows());
  Vector out(T * T);
  for (int s = 0; s < T; ++s)
    for (int t = 0; t < T; ++t) out(s * T + t) = m(s, t);
  return out;
}

}  // namespace

InstrumentSet preliminary_instrument(const TypeSpace& ts, int d_theta) {
  const int T = ts.size();
  const int dx = ts.dim();
  // candidate features: 1, then x_s, |x_s - x_t|, x_t, x_s x_t per coordinate, then squares
  std::vector<Vector> rows;
  auto feature = [&](auto&& fn) {
    Vector r(T * T);
    for (int s = 0; s < T; ++s)
      for (int t = 0; t < T; ++t) r(s * T + t) = fn(ts.values[s], ts.values[t]);
    rows.push_back(r);
  };
  feature([](const Vector&, const Vector&) { return 1.0; });
  for (int k = 0; k < dx; ++k) {
    feature([k](const Vector& a, const Vector&) { return a(k); });
    feature([k](const Vector& a, const Vector& b) { return std::abs(a(k) - b(k)); });
    feature([k](const Vector&, const Vector& b) { return b(k); });
    feature([k](const Vector& a, const Vector& b) { return a(k) * b(k); });
  }
  for (int k = 0; k < dx; ++k) {
    feature([k](const Vector& a, const Vector&) { return a(k) * a(k); });
    feature([k](const Vector&, const Vector& b) { return b(k) * b(k); });
  }
  if (static_cast<int>(rows.size()) < d_theta)
    throw std::invalid_argument("not enough polynomial instruments for the free parameters");
  InstrumentSet w;
  w.kind = InstrumentKind::PreliminaryPolynomials;
  w.values.resize(d_theta, T * T);
  for (int k = 0; k < d_theta; ++k) w.values.row(k) = rows[k].transpose();
  return w;
}

Matrix ccp_jacobian_theta(const CoefficientSet& coef, const LinkProbMatrix& p, const CcpProvider& prov,
                          const DerivativeSteps& steps) {
  const Vector theta = coef.pack_free();
  const int T = p.types();
  Matrix jac(T * T, theta.size());
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    const double h = steps.for_provider(prov, theta(k));
    Vector up = theta, down = theta;
    up(k) += h;
    down(k) -= h;
    jac.col(k) = (flatten(prov(coef.with_free(up), p).p) - flatten(prov(coef.with_free(down), p).p)) / (2.0 * h);
  }
  return jac;
}

Matrix ccp_jacobian_p(const CoefficientSet& coef, const LinkProbMatrix& p, const CcpProvider& prov,
                      const DerivativeSteps& steps) {
  const int T = p.types();
  Matrix jac(T * T, T * T);
  for (int s = 0; s < T; ++s) {
    for (int t = 0; t < T; ++t) {
      const double h = steps.for_provider(prov, 0.0);
      LinkProbMatrix hi = p, lo = p;
      hi.p(s, t) = std::min(1.0, p(s, t) + h);
      lo.p(s, t) = std::max(0.0, p(s, t) - h);
      jac.col(s * T + t) = (flatten(prov(coef, hi).p) - flatten(prov(coef, lo).p)) / (hi.p(s, t) - lo.p(s, t));
    }
  }
  return jac;
}

InstrumentSet qmle_instrument(const CoefficientSet& coef, const LinkProbMatrix& p, const CcpProvider& prov,
                              const DerivativeSteps& steps, double p_floor, const LinkProbMatrix* prob_at_theta) {
  Matrix grad = ccp_jacobian_theta(coef, p, prov, steps);
  Vector prob = flatten(prob_at_theta ? prob_at_theta->p : prov(coef, p).p);
  prob = prob.cwiseMax(p_floor).cwiseMin(1.0 - p_floor);
  InstrumentSet w;
  w.kind = prov.is_simulated() ? InstrumentKind::QmleFinite : InstrumentKind::QmleLimiting;
  w.values = grad.transpose();
  for (Eigen::Index c = 0; c < w.values.cols(); ++c) w.values.col(c) /= prob(c) * (1.0 - prob(c));
  return w;
}

Vector moment_from_probs(const PairTally& tally, const InstrumentSet& w, const LinkProbMatrix& prob) {
  const int T = static_cast<int>(tally.pairs.rows());
  const double n = tally.n;
  Vector psi = Vector::Zero(w.values.rows());
  for (int s = 0; s < T; ++s)
    for (int t = 0; t < T; ++t)
      psi += w.values.col(s * T + t) * (tally.links(s, t) - tally.pairs(s, t) * prob(s, t));
  return psi / (n * (n - 1));
}

Vector moment(const CoefficientSet& coef, const LinkProbMatrix& p, const PairTally& tally, const InstrumentSet& w,
              const CcpProvider& prov) {
  return moment_from_probs(tally, w, prov(coef, p));
}

Vector preliminary_probit(const PairTally& tally, const LinkProbMatrix& p_hat, const CoefficientSet& coef,
                          const TypeSpace& ts_empirical, const ShockDistribution& dist) {
  const int T = ts_empirical.size();
  // gamma terms off; the remaining index is affine in the free betas
  CoefficientSet base = coef;
  base.gamma1 = coef.gamma1.with_constant(0.0);
  base.gamma2 = coef.gamma2.with_constant(0.0);
  FreeMask beta_only = coef.free;
  beta_only.gamma1 = beta_only.gamma2 = false;
  base.free = beta_only;
  const int k = base.num_free();

  auto index_at = [&](const Vector& b) {
    CoefficientSet c = base.with_free(b);
    Vector u(T * T);
    for (int s = 0; s < T; ++s)
      for (int t = 0; t < T; ++t) u(s * T + t) = limit_utility(s, t, p_hat, c, ts_empirical);
    return u;
  };
  const Vector offset = index_at(Vector::Zero(k));
  Matrix X(T * T, k);
  for (int j = 0; j < k; ++j) X.col(j) = index_at(Vector::Unit(k, j)) - offset;

  const Vector links = flatten(tally.links);
  const Vector pairs = flatten(tally.pairs);
  auto loglik = [&](const Vector& b) {
    Vector u = offset + X * b;
    double ll = 0.0;
    for (Eigen::Index c = 0; c < u.size(); ++c) {
      double pr = std::clamp(dist.cdf(u(c)), 1e-300, 1.0 - 1e-16);
      ll += links(c) * std::log(pr) + (pairs(c) - links(c)) * std::log1p(-pr);
    }
    return ll;
  };

  // Fisher scoring with step halving
  Vector b = Vector::Zero(k);
  double ll = loglik(b);
  for (int it = 0; it < 200; ++it) {
    Vector u = offset + X * b;
    Vector score = Vector::Zero(k);
    Matrix info = Matrix::Zero(k, k);
    for (Eigen::Index c = 0; c < u.size(); ++c) {
      if (pairs(c) == 0.0) continue;
      const double pr = std::clamp(dist.cdf(u(c)), 1e-12, 1.0 - 1e-12);
      const double f = dist.pdf(u(c));
      score += X.row(c).transpose() * (f * (links(c) - pairs(c) * pr) / (pr * (1.0 - pr)));
      info += pairs(c) * f * f / (pr * (1.0 - pr)) * X.row(c).transpose() * X.row(c);
    }
    Vector step = info.completeOrthogonalDecomposition().solve(score);
    double scale = 1.0;
    Vector next = b + step;
    double ll_next = loglik(next);
    while (!(ll_next >= ll) && scale > 1e-8) {
      scale *= 0.5;
      next = b + scale * step;
      ll_next = loglik(next);
    }
    if (!(ll_next >= ll)) break;
    const double moved = (next - b).cwiseAbs().maxCoeff();
    b = next;
    ll = ll_next;
    if (moved < 1e-12) break;
  }

  // back onto the full free vector with zeros in the gamma slots
  CoefficientSet fitted = base.with_free(b);
  fitted.free = coef.free;
  return fitted.pack_free();
}

namespace {

struct Providers {
  CcpProvider moment;
  CcpProvider instrument;
  bool shared = false;  // instrument provider identical to the moment provider
};

Providers make_providers(const NetworkData& data, EstimatorMode mode, const EstimationConfig& cfg,
                         const RandomStream& stream) {
  Providers out;
  const CcpProvider limit = CcpProvider::limiting(data.pop, cfg.ts, cfg.dist);
  switch (mode) {
    case EstimatorMode::FiniteFinite:
      out.moment = CcpProvider::simulated(data.pop, cfg.ts, cfg.dist, cfg.R, stream.child(stream_tag::moment_crn));
      // instrument draws independent of the moment draws
      out.instrument =
          CcpProvider::simulated(data.pop, cfg.ts, cfg.dist, cfg.R, stream.child(stream_tag::instrument_crn));
      break;
    case EstimatorMode::FiniteLimit:
      out.moment = CcpProvider::simulated(data.pop, cfg.ts, cfg.dist, cfg.R, stream.child(stream_tag::moment_crn));
      out.instrument = limit;
      break;
    case EstimatorMode::LimitLimit:
      out.moment = limit;
      out.instrument = limit;
      out.shared = true;
      break;
  }
  return out;
}

double condition_number(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& sv = svd.singularValues();
  const double lo = sv(sv.size() - 1);
  return lo > 0.0 ? sv(0) / lo : std::numeric_limits<double>::infinity();
}

}  // namespace

SandwichResult sandwich_variance(const CoefficientSet& theta_hat, const LinkProbMatrix& p_hat,
                                 const NetworkData& data, EstimatorMode mode, const EstimationConfig& cfg,
                                 const RandomStream& stream) {
  const Providers prov = make_providers(data, mode, cfg, stream);
  const PairTally tally = tally_pairs(data);
  const int T = data.pop.num_types();
  const int d = theta_hat.num_free();
  const double n = data.n();
  const double npairs = n * (n - 1);

  const InstrumentSet w = qmle_instrument(theta_hat, p_hat, prov.instrument, cfg.steps, cfg.p_floor);
  const Matrix dp_theta = ccp_jacobian_theta(theta_hat, p_hat, prov.moment, cfg.steps);
  const Matrix dp_p = ccp_jacobian_p(theta_hat, p_hat, prov.moment, cfg.steps);

  SandwichResult out;
  out.jacobian = Matrix::Zero(d, d);
  Matrix first_step_term = Matrix::Zero(d, T * T);
  for (int c = 0; c < T * T; ++c) {
    const double weight = tally.pairs(c / T, c % T) / npairs;
    out.jacobian += weight * w.values.col(c) * dp_theta.row(c);
    first_step_term += weight * w.values.col(c) * dp_p.row(c);
  }
  out.jacobian_condition = condition_number(out.jacobian);
  if (!(out.jacobian_condition <= cfg.jacobian_max_condition)) throw SingularJacobian(out.jacobian_condition);

  // augmented instruments: W - (avg W dP/dp') Q, Q picking out the pair's own cell
  Matrix w_aug = w.values;
  for (int c = 0; c < T * T; ++c) {
    const double share = tally.pairs(c / T, c % T) / npairs;
    if (share > 0.0) w_aug.col(c) -= first_step_term.col(c) / share;
  }

  const TypeSpace& ts = cfg.ts;
  Matrix meat = Matrix::Zero(d, d);
  for (int s = 0; s < T; ++s) {
    if (data.pop.counts[s] == 0) continue;
    AgentProblem prob = AgentProblem::for_type(s, data.pop, p_hat, theta_hat, ts);
    OmegaStar os = omega_star_finite(prob, cfg.dist, 0.5, cfg.omega_tol);
    out.omega_residual = std::max(out.omega_residual, os.gradient_residual);
    if (!os.converged) throw std::runtime_error("omega* did not converge for agent type " + std::to_string(s));

    const Matrix& Phi = prob.v.eigenvectors;
    const auto Lambda = prob.v.eigenvalues.asDiagonal();
    const double scale = 2.0 * (n - 1) / (n - 2);
    const Vector a = star_index(prob, os.omega);

    // J~omega = (1/(n-1)) sum_j W~_ij dP*_ij/domega'
    Matrix j_omega = Matrix::Zero(d, T);
    for (int t = 0; t < T; ++t) {
      if (prob.available[t] == 0) continue;
      Eigen::RowVectorXd dpstar = cfg.dist.pdf(a(t)) * scale * (Phi.row(t) * Lambda);
      j_omega += prob.available[t] / (n - 1) * w_aug.col(s * T + t) * dpstar;
    }
    // K = -(generalized inverse of dGamma*/domega') = -Lambda^+ inner^-1
    Vector lambda_pinv = Vector::Zero(T);
    for (int k = 0; k < T; ++k)
      if (!prob.v.zero[k]) lambda_pinv(k) = 1.0 / prob.v.eigenvalues(k);
    const Matrix K = -(lambda_pinv.asDiagonal() * os.inner.inverse());
    const Vector lam_omega = Lambda * os.omega;

    for (int t = 0; t < T; ++t) {
      if (prob.available[t] == 0) continue;
      const double pstar = cfg.dist.cdf(a(t));
      const Vector b = Lambda * Phi.row(t).transpose();
      // phi^m = g alpha - beta with g ~ Bernoulli(P*)
      const Vector alpha = w_aug.col(s * T + t) + j_omega * (K * b);
      const Vector beta = w_aug.col(s * T + t) * pstar + j_omega * (K * lam_omega);
      Matrix e = pstar * alpha * alpha.transpose() - pstar * (alpha * beta.transpose() + beta * alpha.transpose()) +
                 beta * beta.transpose();
      meat += tally.pairs(s, t) / npairs * e;
    }
  }

  const Matrix jinv = out.jacobian.inverse();
  out.sigma = jinv * meat * jinv.transpose();
  out.inflation = moment_is_simulated(mode) ? 1.0 + 1.0 / cfg.R : 1.0;
  out.sigma *= out.inflation;
  out.sigma = 0.5 * (out.sigma + out.sigma.transpose()).eval();
  out.std_errors = (out.sigma.diagonal() / npairs).cwiseMax(0.0).cwiseSqrt();
  return out;
}

EstimationResult solve_gmm(const NetworkData& data, EstimatorMode mode, const EstimationConfig& cfg,
                           const RandomStream& stream) {
  data.validate();
  const int T = cfg.ts.size();
  if (data.pop.num_types() != T) throw std::invalid_argument("data has a different number of types than the model");
  cfg.coef.validate(T, cfg.ts.dim());
  const int d = cfg.coef.num_free();
  if (d < 1) throw std::invalid_argument("no free parameters to estimate");

  EstimationResult res;
  res.mode = mode;
  res.names = cfg.coef.free_names();
  res.n = data.n();
  res.p_hat = first_step(data);
  const PairTally tally = tally_pairs(data);
  const Providers prov = make_providers(data, mode, cfg, stream);

  auto psi_at = [&](const Vector& theta) {
    CoefficientSet c = cfg.coef.with_free(theta);
    LinkProbMatrix prob = prov.moment(c, res.p_hat);
    InstrumentSet w =
        qmle_instrument(c, res.p_hat, prov.instrument, cfg.steps, cfg.p_floor, prov.shared ? &prob : nullptr);
    return moment_from_probs(tally, w, prob);
  };
  auto objective = [&](const Vector& theta) {
    try {
      return psi_at(theta).squaredNorm();
    } catch (const std::exception&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  std::vector<Vector> starts;
  if (cfg.preliminary_start) {
    res.preliminary =
        preliminary_probit(tally, res.p_hat, cfg.coef, empirical_types(cfg.ts, data.pop), cfg.dist);
    starts.push_back(res.preliminary);
  }
  for (const Vector& s : cfg.starts) {
    if (s.size() != d) throw std::invalid_argument("configured start has the wrong length");
    starts.push_back(s);
  }
  if (starts.empty()) starts.push_back(cfg.coef.pack_free());

  SimplexResult<double> best;
  for (const Vector& x0 : starts) {
    SimplexResult<double> run = nelder_mead<double>(objective, x0, cfg.simplex);
    int evals = run.evaluations, iters = run.iterations;
    for (int r = 0; r < cfg.restarts; ++r) {
      SimplexResult<double> again = nelder_mead<double>(objective, run.x, cfg.simplex);
      evals += again.evaluations;
      iters += again.iterations;
      if (!(again.f < run.f)) {
        run.converged = run.converged || again.converged;
        break;
      }
      run = again;
    }
    res.evaluations += evals;
    res.iterations += iters;
    ++res.starts_tried;
    if (run.f < best.f || best.x.size() == 0) {
      best = run;
      best.iterations = iters;
    }
  }

  res.theta = best.x;
  res.converged = best.converged && std::isfinite(best.f);
  res.moment = psi_at(res.theta);
  res.moment_norm = res.moment.norm();

  if (cfg.compute_variance) {
    try {
      SandwichResult sw = sandwich_variance(cfg.coef.with_free(res.theta), res.p_hat, data, mode, cfg, stream);
      res.sigma = sw.sigma;
      res.std_errors = sw.std_errors;
      res.jacobian_condition = sw.jacobian_condition;
      res.inflation = sw.inflation;
      res.has_variance = true;
    } catch (const SingularJacobian& e) {
      res.jacobian_condition = e.condition;
      res.variance_error = e.what();
    } catch (const std::exception& e) {
      res.variance_error = e.what();
    }
  }
  return res;
}

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(10) << x;
  return os.str();
}

}  // namespace

void write_result_record(std::ostream& out, const EstimationResult& r) {
  out << "mode = " << mode_name(r.mode) << '\n';
  out << "n = " << r.n << '\n';
  for (std::size_t k = 0; k < r.names.size(); ++k) {
    out << "theta." << r.names[k] << " = " << fmt(r.theta(k)) << '\n';
    if (r.has_variance) out << "se." << r.names[k] << " = " << fmt(r.std_errors(k)) << '\n';
  }
  const int T = r.p_hat.types();
  for (int s = 0; s < T; ++s)
    for (int t = 0; t < T; ++t) out << "p_hat." << s << '.' << t << " = " << fmt(r.p_hat(s, t)) << '\n';
  out << "moment_norm = " << fmt(r.moment_norm) << '\n';
  out << "converged = " << (r.converged ? "true" : "false") << '\n';
  out << "iterations = " << r.iterations << '\n';
  out << "evaluations = " << r.evaluations << '\n';
  out << "starts = " << r.starts_tried << '\n';
  out << "variance = " << (r.has_variance ? "ok" : "unavailable") << '\n';
  if (!r.variance_error.empty()) out << "variance_error = " << r.variance_error << '\n';
  out << "jacobian_condition = " << fmt(r.jacobian_condition) << '\n';
  out << "inflation = " << fmt(r.inflation) << '\n';
}

void write_result_csv_header(std::ostream& out, const std::vector<std::string>& names) {
  out << "mode,n";
  for (const auto& nm : names) out << ",theta_" << nm;
  for (const auto& nm : names) out << ",se_" << nm;
  out << ",moment_norm,converged\n";
}

void write_result_csv_row(std::ostream& out, const EstimationResult& r) {
  out << mode_name(r.mode) << ',' << r.n;
  for (Eigen::Index k = 0; k < r.theta.size(); ++k) out << ',' << fmt(r.theta(k));
  for (Eigen::Index k = 0; k < r.theta.size(); ++k) out << ',' << (r.has_variance ? fmt(r.std_errors(k)) : "NA");
  out << ',' << fmt(r.moment_norm) << ',' << (r.converged ? 1 : 0) << '\n';
}

}  // namespace netform
