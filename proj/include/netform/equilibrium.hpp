#pragma once

#include "netform/bestresponse.hpp"
#include "netform/model.hpp"
#include "netform/rng.hpp"

#include <stdexcept>
#include <vector>

namespace netform {

class NonConvergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EquilibriumOptions {
  double damping = 0.5;
  // <= 0 selects the default: 1e-10 for the limiting game and
  // max(1e-4, 1/sqrt(R n)) for the simulated finite-n game.
  double tol = 0.0;
  int max_iter = 1000;
};

struct EquilibriumSolveReport {
  LinkProbMatrix p_star;
  double residual = 0.0;
  int iterations = 0;
  double damping = 0.5;
  double tolerance = 0.0;
  bool converged = false;
};

// Shocks for one draw of a representative type-s agent, grouped by partner
// type.  Draw r of type s always comes from stream.child(s, r).
std::vector<double> draw_grouped_shocks(const Population& pop, int own_type, const ShockDistribution& dist,
                                        RandomStream stream);

// Fixed simulation draws reused across every evaluation (common random numbers).
class ShockPanel {
 public:
  ShockPanel() = default;
  ShockPanel(const Population& pop, const ShockDistribution& dist, int draws, const RandomStream& stream);

  int draws() const { return draws_; }
  const SortedShocks& at(int own_type, int r) const { return panel_[own_type][r]; }
  bool has_type(int own_type) const { return !panel_[own_type].empty(); }

 private:
  int draws_ = 0;
  std::vector<std::vector<SortedShocks>> panel_;
};

// Simulated P_n(s, t): average share of type-t partners linked by a type-s
// agent over R best responses.  Rows or columns without agents carry the
// input beliefs through unchanged.
LinkProbMatrix ccp_simulated(const CoefficientSet& coef, const LinkProbMatrix& p, const Population& pop,
                             const TypeSpace& ts, const ShockPanel& panel);
LinkProbMatrix ccp_simulated(const CoefficientSet& coef, const LinkProbMatrix& p, const Population& pop,
                             const TypeSpace& ts, const ShockDistribution& dist, int R, const RandomStream& stream);

EquilibriumSolveReport solve_equilibrium_finite(const CoefficientSet& coef, const Population& pop,
                                                const TypeSpace& ts, const ShockDistribution& dist, int R,
                                                const RandomStream& stream, const LinkProbMatrix& init,
                                                const EquilibriumOptions& options = {});

struct LimitOmega {
  Vector omega_tilde;  // transformed scale, Phi * omega
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

LimitOmega limiting_omega(int own_type, const CoefficientSet& coef, const LinkProbMatrix& p, const TypeSpace& ts,
                          const ShockDistribution& dist, double damping = 0.5, double tol = 1e-12,
                          int max_iter = 100000);

double limiting_ccp(int s, int t, const CoefficientSet& coef, const LinkProbMatrix& p, const TypeSpace& ts,
                    const ShockDistribution& dist);
LinkProbMatrix limiting_ccp_matrix(const CoefficientSet& coef, const LinkProbMatrix& p, const TypeSpace& ts,
                                   const ShockDistribution& dist);

EquilibriumSolveReport solve_equilibrium_limit(const CoefficientSet& coef, const TypeSpace& ts,
                                               const ShockDistribution& dist, const LinkProbMatrix& init,
                                               const EquilibriumOptions& options = {});

// Link index a_t = U_t + (2(n-1)/(n-2)) (Phi Lambda omega)_t per partner type.
Vector star_index(const AgentProblem& prob, const Vector& omega);

// Pi*(omega): expected Legendre objective of a representative agent.
double pi_star_objective(const AgentProblem& prob, const Vector& omega, const ShockDistribution& dist);

struct PiStarGradient {
  Vector gamma;     // Gamma*(omega)
  Matrix jacobian;  // d Gamma* / d omega'
  Matrix inner;     // (2/(n-2)) sum f Lambda Phi' Z Z' Phi - I
};

// Gamma* is the gradient of Pi* divided by 2(n-1)^2/(n-2).
PiStarGradient pi_star_gradient(const AgentProblem& prob, const Vector& omega, const ShockDistribution& dist);

struct OmegaStar {
  Vector omega;
  double gradient_residual = 0.0;
  Matrix jacobian;
  Matrix inner;
  double inner_condition = 0.0;
  int iterations = 0;
  bool converged = false;
};

OmegaStar omega_star_finite(const AgentProblem& prob, const ShockDistribution& dist, double damping = 0.5,
                            double tol = 1e-8, int max_iter = 100000);

}  // namespace netform
