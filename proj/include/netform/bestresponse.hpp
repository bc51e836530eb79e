#pragma once

#include "netform/model.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace netform {

using LinkVector = std::vector<std::uint8_t>;
using CountVector = std::vector<int>;

// Private shocks eps_ij of one agent, indexed by partner position (partners in
// increasing agent order, the agent itself skipped).
struct ShockVector {
  std::vector<double> eps;
};

// Everything agent i's link decision depends on.  Under a symmetric
// equilibrium the utilities and V are functions of types only.
struct AgentProblem {
  int n = 0;
  int own_type = 0;
  std::vector<int> target_types;  // type of each partner position, length n-1
  std::vector<int> available;     // partners per type
  Vector utility;                 // U_nij by partner type
  VMatrix v;

  int num_types() const { return static_cast<int>(available.size()); }
  void validate() const;

  // Agent i of a population at beliefs p.
  static AgentProblem for_agent(int i, const Population& pop, const LinkProbMatrix& p, const CoefficientSet& coef,
                                const TypeSpace& ts);
  // A representative agent of type s; partners are ordered by type block.
  static AgentProblem for_type(int s, const Population& pop, const LinkProbMatrix& p, const CoefficientSet& coef,
                               const TypeSpace& ts);
  // Direct construction from utilities and V (partners ordered as given).
  static AgentProblem from_parts(int own_type, std::vector<int> target_types, Vector utility, const Matrix& v);
};

struct FixedPoint {
  LinkVector links;
  CountVector counts;
};

struct BestResponse {
  LinkVector links;
  CountVector counts;
  Vector omega;
  double realized_eu = 0.0;
  int num_fixed_points = 0;
  // Whether the maximizer solves the threshold system; always true when V has
  // a nonnegative diagonal.
  bool is_fixed_point = true;
  // Other count vectors attaining exactly the same expected utility.
  int ties = 0;
};

// Shocks of one agent split by partner type, sorted ascending, with prefix
// sums.  The optimal links of each type are always a lowest-shock prefix.
class SortedShocks {
 public:
  SortedShocks() = default;
  SortedShocks(const AgentProblem& prob, const ShockVector& shocks);
  // Blocks already grouped by type (block t holds available[t] shocks).
  SortedShocks(std::span<const int> available, std::span<const double> grouped);

  int num_types() const { return static_cast<int>(offsets_.size()) - 1; }
  std::span<const double> sorted(int t) const {
    return {values_.data() + offsets_[t], static_cast<std::size_t>(offsets_[t + 1] - offsets_[t])};
  }
  // Sum of the k smallest shocks of type t.
  double prefix(int t, int k) const { return prefix_[offsets_[t] + t + k]; }
  // Number of type-t shocks <= cut.
  int count_at_most(int t, double cut) const;

 private:
  void build();
  std::vector<int> offsets_;
  std::vector<double> values_;
  std::vector<double> prefix_;
};

struct CountChoice {
  CountVector counts;
  double eu = 0.0;
  int ties = 0;
};

// Exact maximizer of the expected utility over count vectors given sorted
// shocks; scans every m with 0 <= m_t <= available_t.
CountChoice best_counts(const AgentProblem& prob, const SortedShocks& shocks);

// Per-partner cut values U_nij + (2/(n-2)) (V m)_{t_j}.
Vector thresholds(const AgentProblem& prob, const CountVector& m);
// Same, one value per partner type.
Vector type_thresholds(const AgentProblem& prob, const CountVector& m);
// g_ij = 1 iff cut_j >= eps_ij.
LinkVector implied_links(const AgentProblem& prob, const CountVector& m, const ShockVector& shocks);
CountVector link_counts(const AgentProblem& prob, const LinkVector& links);

std::vector<FixedPoint> enumerate_fixed_points(const AgentProblem& prob, const ShockVector& shocks);

// sum_j g_j (U_j + (1/(n-2)) sum_k g_k Z_j'V Z_k - eps_j), evaluated pair by pair.
double realized_expected_utility(const AgentProblem& prob, const LinkVector& links, const ShockVector& shocks);

// omega = Phi' m / (n-1) with zero-eigenvalue components set to zero.
Vector omega_from_counts(const AgentProblem& prob, const CountVector& m);

BestResponse best_response(const AgentProblem& prob, const ShockVector& shocks);

// Exhaustive argmax over all 2^(n-1) link vectors.  Requires n-1 <= 20.
LinkVector brute_force_oracle(const AgentProblem& prob, const ShockVector& shocks);

// Pi_i(omega): the Legendre-transformed objective.
double pi_objective(const AgentProblem& prob, const Vector& omega, const ShockVector& shocks);

}  // namespace netform
