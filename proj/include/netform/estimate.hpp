#pragma once

#include "netform/equilibrium.hpp"
#include "netform/model.hpp"
#include "netform/nelder_mead.hpp"
#include "netform/rng.hpp"
#include "netform/simulate.hpp"

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace netform {

enum class EstimatorMode { FiniteFinite, FiniteLimit, LimitLimit };

std::string mode_name(EstimatorMode mode);
// Accepts finite_finite / finite-finite and so on.
EstimatorMode mode_from_name(std::string_view name);
inline bool moment_is_simulated(EstimatorMode m) { return m != EstimatorMode::LimitLimit; }

class MissingTypePair : public std::runtime_error {
 public:
  MissingTypePair(int s, int t);
  int s, t;
};

class SingularJacobian : public std::runtime_error {
 public:
  explicit SingularJacobian(double condition);
  double condition;
};

// Ordered-pair counts by type pair: links(s,t) directed edges, pairs(s,t)
// ordered pairs i != j with types (s,t).
struct PairTally {
  Matrix links;
  Matrix pairs;
  int n = 0;
};

PairTally tally_pairs(const NetworkData& data);
LinkProbMatrix first_step(const NetworkData& data);

// Conditional link probabilities P(theta, p) by type pair, either simulated
// from the finite-n game on a fixed shock panel or from the limiting game.
class CcpProvider {
 public:
  static CcpProvider simulated(const Population& pop, const TypeSpace& ts, const ShockDistribution& dist, int R,
                               const RandomStream& stream);
  // Limiting probabilities with the network's empirical type shares.
  static CcpProvider limiting(const Population& pop, const TypeSpace& ts, const ShockDistribution& dist);

  LinkProbMatrix operator()(const CoefficientSet& coef, const LinkProbMatrix& p) const;
  bool is_simulated() const { return simulated_; }
  int draws() const { return panel_.draws(); }
  const TypeSpace& types() const { return ts_; }

 private:
  bool simulated_ = false;
  Population pop_;
  TypeSpace ts_;
  ShockDistribution dist_;
  ShockPanel panel_;
};

enum class InstrumentKind { PreliminaryPolynomials, QmleFinite, QmleLimiting };

// Instruments are functions of the type pair; column s*T+t holds W for
// every ordered pair with types (s,t).
struct InstrumentSet {
  InstrumentKind kind = InstrumentKind::QmleLimiting;
  Matrix values;  // d_theta x T^2
};

InstrumentSet preliminary_instrument(const TypeSpace& ts, int d_theta);

struct DerivativeSteps {
  double relative = 1e-4;   // closed-form providers: h = relative * max(1, |theta_k|)
  double simulated = 0.05;  // simulated providers, same scaling
  double for_provider(const CcpProvider& prov, double x) const {
    return (prov.is_simulated() ? simulated : relative) * std::max(1.0, std::abs(x));
  }
};

// dP/dtheta' by central differences; row s*T+t, one column per free parameter.
Matrix ccp_jacobian_theta(const CoefficientSet& coef, const LinkProbMatrix& p, const CcpProvider& prov,
                          const DerivativeSteps& steps);
// dP/dp' by differences clipped to [0,1]; T^2 x T^2.
Matrix ccp_jacobian_p(const CoefficientSet& coef, const LinkProbMatrix& p, const CcpProvider& prov,
                      const DerivativeSteps& steps);

InstrumentSet qmle_instrument(const CoefficientSet& coef, const LinkProbMatrix& p, const CcpProvider& prov,
                              const DerivativeSteps& steps, double p_floor = 1e-6,
                              const LinkProbMatrix* prob_at_theta = nullptr);

// (1/(n(n-1))) sum_i sum_{j != i} W_ij (G_ij - P_ij).
Vector moment_from_probs(const PairTally& tally, const InstrumentSet& w, const LinkProbMatrix& prob);
Vector moment(const CoefficientSet& coef, const LinkProbMatrix& p, const PairTally& tally, const InstrumentSet& w,
              const CcpProvider& prov);

struct EstimationConfig {
  CoefficientSet coef;  // fixed entries and free mask; free entries are starting values only
  TypeSpace ts;
  ShockDistribution dist;
  int R = 200;
  double p_floor = 1e-6;
  DerivativeSteps steps;
  SimplexOptions simplex;
  std::vector<Vector> starts;     // extra starting points (free-parameter vectors)
  bool preliminary_start = true;  // start from the probit fit of the limiting model with gamma = 0
  int restarts = 1;               // simplex restarts from each terminal point
  bool compute_variance = true;
  double omega_tol = 1e-8;
  double jacobian_max_condition = 1e10;
};

struct SandwichResult {
  Matrix sigma;
  Vector std_errors;
  Matrix jacobian;  // J^theta
  double jacobian_condition = 0.0;
  double inflation = 1.0;
  double omega_residual = 0.0;  // worst gradient residual of omega* over agent types
};

struct EstimationResult {
  EstimatorMode mode = EstimatorMode::LimitLimit;
  std::vector<std::string> names;
  Vector theta;
  Vector preliminary;
  LinkProbMatrix p_hat;
  Vector moment;
  double moment_norm = 0.0;
  bool converged = false;
  int iterations = 0;
  int evaluations = 0;
  int starts_tried = 0;
  int n = 0;
  bool has_variance = false;
  std::string variance_error;
  Matrix sigma;
  Vector std_errors;
  double jacobian_condition = 0.0;
  double inflation = 1.0;
};

// Probit fit of the limiting model with all gamma terms set to zero; gamma
// entries of the returned free vector are zero.
Vector preliminary_probit(const PairTally& tally, const LinkProbMatrix& p_hat, const CoefficientSet& coef,
                          const TypeSpace& ts_empirical, const ShockDistribution& dist);

// Empirical type shares of a population on a given support.
TypeSpace empirical_types(const TypeSpace& ts, const Population& pop);

EstimationResult solve_gmm(const NetworkData& data, EstimatorMode mode, const EstimationConfig& config,
                           const RandomStream& stream);

// Rebuilds the providers from the same stream as solve_gmm.
SandwichResult sandwich_variance(const CoefficientSet& theta_hat, const LinkProbMatrix& p_hat,
                                 const NetworkData& data, EstimatorMode mode, const EstimationConfig& config,
                                 const RandomStream& stream);

void write_result_record(std::ostream& out, const EstimationResult& r);
void write_result_csv_header(std::ostream& out, const std::vector<std::string>& names);
void write_result_csv_row(std::ostream& out, const EstimationResult& r);

}  // namespace netform
