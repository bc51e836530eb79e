#include "netform/equilibrium.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace netform {

namespace {

// Orthogonal projector onto the span of the nonzero-eigenvalue eigenvectors.
Matrix range_projector(const VMatrix& v) {
  const int T = v.types();
  Matrix proj = Matrix::Zero(T, T);
  for (int k = 0; k < T; ++k)
    if (!v.zero[k]) proj += v.eigenvectors.col(k) * v.eigenvectors.col(k).transpose();
  return proj;
}

Vector nonzero_mask(const VMatrix& v) {
  Vector mask(v.types());
  for (int k = 0; k < v.types(); ++k) mask(k) = v.zero[k] ? 0.0 : 1.0;
  return mask;
}

}  // namespace

std::vector<double> draw_grouped_shocks(const Population& pop, int own_type, const ShockDistribution& dist,
                                        RandomStream stream) {
  std::vector<double> out;
  out.reserve(pop.n() - 1);
  for (int t = 0; t < pop.num_types(); ++t)
    for (int k = 0; k < pop.available(own_type, t); ++k) out.push_back(dist.sample(stream));
  return out;
}

ShockPanel::ShockPanel(const Population& pop, const ShockDistribution& dist, int draws, const RandomStream& stream)
    : draws_(draws) {
  if (draws < 1) throw std::invalid_argument("shock panel needs R >= 1");
  const int T = pop.num_types();
  panel_.resize(T);
  for (int s = 0; s < T; ++s) {
    if (pop.counts[s] == 0) continue;
    std::vector<int> avail(T);
    for (int t = 0; t < T; ++t) avail[t] = pop.available(s, t);
    panel_[s].reserve(draws);
    for (int r = 0; r < draws; ++r)
      panel_[s].emplace_back(avail, draw_grouped_shocks(pop, s, dist, stream.child(s, r)));
  }
}

namespace {

template <typename ShocksFor>
LinkProbMatrix tally_ccp(const CoefficientSet& coef, const LinkProbMatrix& p, const Population& pop,
                         const TypeSpace& ts, int R, ShocksFor&& shocks_for) {
  const int T = pop.num_types();
  LinkProbMatrix out = p;
  for (int s = 0; s < T; ++s) {
    if (pop.counts[s] == 0) continue;
    AgentProblem prob = AgentProblem::for_type(s, pop, p, coef, ts);
    std::vector<long long> linked(T, 0);
    for (int r = 0; r < R; ++r) {
      CountChoice choice = best_counts(prob, shocks_for(s, r));
      for (int t = 0; t < T; ++t) linked[t] += choice.counts[t];
    }
    for (int t = 0; t < T; ++t)
      if (prob.available[t] > 0)
        out.p(s, t) = static_cast<double>(linked[t]) / (static_cast<double>(R) * prob.available[t]);
  }
  return out;
}

}  // namespace

LinkProbMatrix ccp_simulated(const CoefficientSet& coef, const LinkProbMatrix& p, const Population& pop,
                             const TypeSpace& ts, const ShockPanel& panel) {
  return tally_ccp(coef, p, pop, ts, panel.draws(),
                   [&](int s, int r) -> const SortedShocks& { return panel.at(s, r); });
}

LinkProbMatrix ccp_simulated(const CoefficientSet& coef, const LinkProbMatrix& p, const Population& pop,
                             const TypeSpace& ts, const ShockDistribution& dist, int R, const RandomStream& stream) {
  if (R < 1) throw std::invalid_argument("ccp_simulated: R must be >= 1");
  const int T = pop.num_types();
  std::vector<std::vector<int>> avail(T, std::vector<int>(T));
  for (int s = 0; s < T; ++s)
    for (int t = 0; t < T; ++t) avail[s][t] = pop.available(s, t);
  // Draws are generated on demand so large R does not need a stored panel.
  return tally_ccp(coef, p, pop, ts, R, [&](int s, int r) {
    return SortedShocks(avail[s], draw_grouped_shocks(pop, s, dist, stream.child(s, r)));
  });
}

EquilibriumSolveReport solve_equilibrium_finite(const CoefficientSet& coef, const Population& pop,
                                                const TypeSpace& ts, const ShockDistribution& dist, int R,
                                                const RandomStream& stream, const LinkProbMatrix& init,
                                                const EquilibriumOptions& options) {
  init.validate();
  if (!(options.damping > 0.0 && options.damping <= 1.0)) throw std::invalid_argument("damping must be in (0,1]");
  ShockPanel panel(pop, dist, R, stream);
  EquilibriumSolveReport rep;
  rep.damping = options.damping;
  rep.tolerance = options.tol > 0.0 ? options.tol : std::max(1e-4, 1.0 / std::sqrt(static_cast<double>(R) * pop.n()));
  LinkProbMatrix p = init;
  rep.residual = std::numeric_limits<double>::infinity();
  for (int it = 0; it <= options.max_iter; ++it) {
    LinkProbMatrix mapped = ccp_simulated(coef, p, pop, ts, panel);
    rep.residual = (mapped.p - p.p).cwiseAbs().maxCoeff();
    rep.iterations = it;
    // the residual is checked at the point that is returned
    if (rep.residual <= rep.tolerance) {
      rep.converged = true;
      break;
    }
    if (it == options.max_iter) break;
    p = LinkProbMatrix((1.0 - options.damping) * p.p + options.damping * mapped.p);
  }
  rep.p_star = p;
  return rep;
}

LimitOmega limiting_omega(int own_type, const CoefficientSet& coef, const LinkProbMatrix& p, const TypeSpace& ts,
                          const ShockDistribution& dist, double damping, double tol, int max_iter) {
  const int T = ts.size();
  VMatrix v = limit_v(own_type, p, coef, ts);
  Vector u(T);
  for (int t = 0; t < T; ++t) u(t) = limit_utility(own_type, t, p, coef, ts);
  const Matrix proj = range_projector(v);

  auto target = [&](const Vector& w) {
    Vector index = u + 2.0 * v.v * w;
    Vector out(T);
    for (int t = 0; t < T; ++t) out(t) = ts.limit_probs(t) * dist.cdf(index(t));
    return Vector(proj * out);
  };

  LimitOmega out;
  Vector w = Vector::Zero(T);
  for (int it = 1; it <= max_iter; ++it) {
    Vector next = (1.0 - damping) * w + damping * target(w);
    const double step = (next - w).cwiseAbs().maxCoeff();
    w = std::move(next);
    out.iterations = it;
    if (step <= tol) break;
  }
  out.omega_tilde = w;
  out.residual = (v.v * (target(w) - w)).cwiseAbs().maxCoeff();
  out.converged = out.residual <= 1e-10;
  return out;
}

double limiting_ccp(int s, int t, const CoefficientSet& coef, const LinkProbMatrix& p, const TypeSpace& ts,
                    const ShockDistribution& dist) {
  LimitOmega w = limiting_omega(s, coef, p, ts, dist);
  VMatrix v = limit_v(s, p, coef, ts);
  return dist.cdf(limit_utility(s, t, p, coef, ts) + 2.0 * v.v.row(t).dot(w.omega_tilde));
}

LinkProbMatrix limiting_ccp_matrix(const CoefficientSet& coef, const LinkProbMatrix& p, const TypeSpace& ts,
                                   const ShockDistribution& dist) {
  const int T = ts.size();
  LinkProbMatrix out(Matrix(T, T));
  for (int s = 0; s < T; ++s) {
    LimitOmega w = limiting_omega(s, coef, p, ts, dist);
    VMatrix v = limit_v(s, p, coef, ts);
    Vector shift = 2.0 * v.v * w.omega_tilde;
    for (int t = 0; t < T; ++t) out.p(s, t) = dist.cdf(limit_utility(s, t, p, coef, ts) + shift(t));
  }
  return out;
}

EquilibriumSolveReport solve_equilibrium_limit(const CoefficientSet& coef, const TypeSpace& ts,
                                               const ShockDistribution& dist, const LinkProbMatrix& init,
                                               const EquilibriumOptions& options) {
  init.validate();
  if (!(options.damping > 0.0 && options.damping <= 1.0)) throw std::invalid_argument("damping must be in (0,1]");
  EquilibriumSolveReport rep;
  rep.damping = options.damping;
  rep.tolerance = options.tol > 0.0 ? options.tol : 1e-10;
  LinkProbMatrix p = init;
  for (int it = 1; it <= options.max_iter; ++it) {
    LinkProbMatrix mapped = limiting_ccp_matrix(coef, p, ts, dist);
    // stop on a small step; the reported residual is re-evaluated below
    LinkProbMatrix next((1.0 - options.damping) * p.p + options.damping * mapped.p);
    const double step = (next.p - p.p).cwiseAbs().maxCoeff();
    p = std::move(next);
    rep.iterations = it;
    if (step <= 0.1 * rep.tolerance * options.damping) break;
  }
  rep.p_star = p;
  rep.residual = (limiting_ccp_matrix(coef, p, ts, dist).p - p.p).cwiseAbs().maxCoeff();
  rep.converged = rep.residual <= rep.tolerance;
  return rep;
}

Vector star_index(const AgentProblem& prob, const Vector& omega) {
  const double n = prob.n;
  return prob.utility +
         (2.0 * (n - 1) / (n - 2)) * (prob.v.eigenvectors * prob.v.eigenvalues.asDiagonal() * omega);
}

double pi_star_objective(const AgentProblem& prob, const Vector& omega, const ShockDistribution& dist) {
  const double n = prob.n;
  Vector a = star_index(prob, omega);
  double total = 0.0;
  for (int t = 0; t < prob.num_types(); ++t) total += prob.available[t] * dist.partial_expectation(a(t));
  return total - (n - 1) * (n - 1) / (n - 2) * omega.dot(prob.v.eigenvalues.asDiagonal() * omega);
}

PiStarGradient pi_star_gradient(const AgentProblem& prob, const Vector& omega, const ShockDistribution& dist) {
  const int T = prob.num_types();
  const double n = prob.n;
  const auto& Phi = prob.v.eigenvectors;
  const auto Lambda = prob.v.eigenvalues.asDiagonal();
  Vector a = star_index(prob, omega);

  PiStarGradient out;
  out.gamma = -(Lambda * omega);
  Matrix acc = Matrix::Zero(T, T);
  for (int t = 0; t < T; ++t) {
    if (prob.available[t] == 0) continue;
    Vector phi_z = Phi.row(t).transpose();  // Phi' Z_j for a type-t partner
    out.gamma += prob.available[t] / (n - 1) * dist.cdf(a(t)) * (Lambda * phi_z);
    acc += prob.available[t] * dist.pdf(a(t)) * (Lambda * phi_z) * phi_z.transpose();
  }
  out.inner = (2.0 / (n - 2)) * acc - Matrix::Identity(T, T);
  out.jacobian = out.inner * Lambda;
  return out;
}

OmegaStar omega_star_finite(const AgentProblem& prob, const ShockDistribution& dist, double damping, double tol,
                            int max_iter) {
  const int T = prob.num_types();
  const Vector mask = nonzero_mask(prob.v);
  const auto& Phi = prob.v.eigenvectors;

  auto target = [&](const Vector& omega) {
    Vector a = star_index(prob, omega);
    Vector out = Vector::Zero(T);
    for (int t = 0; t < T; ++t) out += prob.available[t] * dist.cdf(a(t)) * Phi.row(t).transpose();
    return Vector(out.cwiseProduct(mask) / static_cast<double>(prob.n - 1));
  };

  OmegaStar out;
  Vector omega = Vector::Zero(T);
  for (int it = 1; it <= max_iter; ++it) {
    Vector next = (1.0 - damping) * omega + damping * target(omega);
    const double step = (next - omega).cwiseAbs().maxCoeff();
    omega = std::move(next);
    out.iterations = it;
    if (step <= 1e-3 * tol) break;
  }
  PiStarGradient g = pi_star_gradient(prob, omega, dist);
  out.omega = omega;
  out.gradient_residual = g.gamma.cwiseAbs().maxCoeff();
  out.jacobian = g.jacobian;
  out.inner = g.inner;
  Eigen::JacobiSVD<Matrix> svd(g.inner);
  const auto& sv = svd.singularValues();
  out.inner_condition = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : std::numeric_limits<double>::infinity();
  out.converged = out.gradient_residual <= tol;
  return out;
}

}  // namespace netform
