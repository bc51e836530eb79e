#include "netform/bestresponse.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <stdexcept>
#include <string>

namespace netform {

void AgentProblem::validate() const {
  const int T = num_types();
  if (n < 3) throw std::invalid_argument("agent problem needs n >= 3");
  if (utility.size() != T || v.types() != T) throw std::invalid_argument("agent problem dimensions disagree");
  if (!target_types.empty() && static_cast<int>(target_types.size()) != n - 1)
    throw std::invalid_argument("agent problem needs n-1 partner types");
  int total = 0;
  for (int a : available) total += a;
  if (total != n - 1) throw std::invalid_argument("partner counts must sum to n-1");
}

AgentProblem AgentProblem::for_agent(int i, const Population& pop, const LinkProbMatrix& p, const CoefficientSet& coef,
                                     const TypeSpace& ts) {
  AgentProblem prob = for_type(pop.type_of[i], pop, p, coef, ts);
  prob.target_types.clear();
  for (int j = 0; j < pop.n(); ++j)
    if (j != i) prob.target_types.push_back(pop.type_of[j]);
  return prob;
}

AgentProblem AgentProblem::for_type(int s, const Population& pop, const LinkProbMatrix& p, const CoefficientSet& coef,
                                    const TypeSpace& ts) {
  const int T = pop.num_types();
  if (s < 0 || s >= T || pop.counts[s] == 0)
    throw std::invalid_argument("for_type: no agent of type " + std::to_string(s));
  AgentProblem prob;
  prob.n = pop.n();
  prob.own_type = s;
  prob.available.resize(T);
  for (int t = 0; t < T; ++t) prob.available[t] = pop.available(s, t);
  prob.v = v_matrix(s, pop, p, coef);
  prob.utility.resize(T);
  for (int t = 0; t < T; ++t) prob.utility(t) = base_utility_exp(s, t, pop, p, coef, ts, prob.v);
  for (int t = 0; t < T; ++t) prob.target_types.insert(prob.target_types.end(), prob.available[t], t);
  return prob;
}

AgentProblem AgentProblem::from_parts(int own_type, std::vector<int> target_types, Vector utility, const Matrix& v) {
  AgentProblem prob;
  prob.n = static_cast<int>(target_types.size()) + 1;
  prob.own_type = own_type;
  prob.available.assign(utility.size(), 0);
  for (int t : target_types) ++prob.available.at(t);
  prob.target_types = std::move(target_types);
  prob.utility = std::move(utility);
  prob.v = VMatrix::from(v);
  prob.validate();
  return prob;
}

SortedShocks::SortedShocks(const AgentProblem& prob, const ShockVector& shocks) {
  if (shocks.eps.size() != prob.target_types.size()) throw std::invalid_argument("shock vector has wrong length");
  const int T = prob.num_types();
  offsets_.assign(T + 1, 0);
  for (int t = 0; t < T; ++t) offsets_[t + 1] = offsets_[t] + prob.available[t];
  values_.resize(offsets_[T]);
  std::vector<int> fill(offsets_.begin(), offsets_.end() - 1);
  for (std::size_t j = 0; j < shocks.eps.size(); ++j) values_[fill[prob.target_types[j]]++] = shocks.eps[j];
  build();
}

SortedShocks::SortedShocks(std::span<const int> available, std::span<const double> grouped) {
  const int T = static_cast<int>(available.size());
  offsets_.assign(T + 1, 0);
  for (int t = 0; t < T; ++t) offsets_[t + 1] = offsets_[t] + available[t];
  if (grouped.size() != static_cast<std::size_t>(offsets_[T])) throw std::invalid_argument("grouped shocks have wrong length");
  values_.assign(grouped.begin(), grouped.end());
  build();
}

void SortedShocks::build() {
  const int T = num_types();
  prefix_.assign(values_.size() + T, 0.0);
  for (int t = 0; t < T; ++t) {
    std::sort(values_.begin() + offsets_[t], values_.begin() + offsets_[t + 1]);
    double acc = 0.0;
    std::size_t base = offsets_[t] + t;
    prefix_[base] = 0.0;
    for (int k = offsets_[t]; k < offsets_[t + 1]; ++k) {
      acc += values_[k];
      prefix_[base + (k - offsets_[t]) + 1] = acc;
    }
  }
}

int SortedShocks::count_at_most(int t, double cut) const {
  auto block = sorted(t);
  return static_cast<int>(std::upper_bound(block.begin(), block.end(), cut) - block.begin());
}

CountChoice best_counts(const AgentProblem& prob, const SortedShocks& shocks) {
  const int T = prob.num_types();
  const double inv = 1.0 / (prob.n - 2);
  const Matrix& V = prob.v.v;
  CountVector m(T, 0);
  CountChoice best;
  best.eu = -std::numeric_limits<double>::infinity();

  if (T == 2) {
    // the common case, kept free of the odometer bookkeeping
    const double v00 = V(0, 0) * inv, v01 = 2.0 * V(0, 1) * inv, v11 = V(1, 1) * inv;
    const double u0 = prob.utility(0), u1 = prob.utility(1);
    int b0 = 0, b1 = 0, ties = 0;
    for (int m0 = 0; m0 <= prob.available[0]; ++m0) {
      const double a0 = m0 * u0 - shocks.prefix(0, m0) + v00 * m0 * m0;
      const double c01 = v01 * m0;
      for (int m1 = 0; m1 <= prob.available[1]; ++m1) {
        const double eu = a0 + m1 * u1 - shocks.prefix(1, m1) + (c01 + v11 * m1) * m1;
        if (eu > best.eu) {
          best.eu = eu;
          b0 = m0;
          b1 = m1;
          ties = 0;
        } else if (eu == best.eu) {
          ++ties;
        }
      }
    }
    best.counts = {b0, b1};
    best.ties = ties;
    return best;
  }

  Eigen::VectorXd mv(T);
  while (true) {
    double lin = 0.0;
    for (int t = 0; t < T; ++t) {
      lin += m[t] * prob.utility(t) - shocks.prefix(t, m[t]);
      mv(t) = m[t];
    }
    const double eu = lin + inv * mv.dot(V * mv);
    if (eu > best.eu) {
      best.eu = eu;
      best.counts = m;
      best.ties = 0;
    } else if (eu == best.eu) {
      ++best.ties;
    }
    int k = T - 1;
    while (k >= 0 && m[k] == prob.available[k]) m[k--] = 0;
    if (k < 0) break;
    ++m[k];
  }
  return best;
}

Vector type_thresholds(const AgentProblem& prob, const CountVector& m) {
  const int T = prob.num_types();
  Vector mv(T);
  for (int t = 0; t < T; ++t) mv(t) = m[t];
  return prob.utility + (2.0 / (prob.n - 2)) * (prob.v.v * mv);
}

Vector thresholds(const AgentProblem& prob, const CountVector& m) {
  Vector cut_t = type_thresholds(prob, m);
  Vector cut(prob.target_types.size());
  for (std::size_t j = 0; j < prob.target_types.size(); ++j) cut(j) = cut_t(prob.target_types[j]);
  return cut;
}

LinkVector implied_links(const AgentProblem& prob, const CountVector& m, const ShockVector& shocks) {
  Vector cut = thresholds(prob, m);
  LinkVector g(prob.target_types.size());
  for (std::size_t j = 0; j < g.size(); ++j) g[j] = cut(j) >= shocks.eps[j] ? 1 : 0;
  return g;
}

CountVector link_counts(const AgentProblem& prob, const LinkVector& links) {
  CountVector m(prob.num_types(), 0);
  for (std::size_t j = 0; j < links.size(); ++j) m[prob.target_types[j]] += links[j];
  return m;
}

std::vector<FixedPoint> enumerate_fixed_points(const AgentProblem& prob, const ShockVector& shocks) {
  const int T = prob.num_types();
  SortedShocks sorted(prob, shocks);
  std::vector<FixedPoint> out;
  CountVector m(T, 0);
  while (true) {
    Vector cut = type_thresholds(prob, m);
    bool consistent = true;
    for (int t = 0; t < T && consistent; ++t) consistent = sorted.count_at_most(t, cut(t)) == m[t];
    if (consistent) out.push_back({implied_links(prob, m, shocks), m});
    int k = T - 1;
    while (k >= 0 && m[k] == prob.available[k]) m[k--] = 0;
    if (k < 0) break;
    ++m[k];
  }
  // A nonnegative diagonal guarantees the expected-utility maximizer is
  // among the solutions, so an empty set there is a bug.
  if (out.empty() && !prob.v.has_negative_diagonal())
    throw std::logic_error("enumerate_fixed_points: no self-consistent link vector found");
  return out;
}

double realized_expected_utility(const AgentProblem& prob, const LinkVector& links, const ShockVector& shocks) {
  const double inv = 1.0 / (prob.n - 2);
  double total = 0.0;
  for (std::size_t j = 0; j < links.size(); ++j) {
    if (!links[j]) continue;
    double pair = 0.0;
    for (std::size_t k = 0; k < links.size(); ++k)
      if (links[k]) pair += prob.v.v(prob.target_types[j], prob.target_types[k]);
    total += prob.utility(prob.target_types[j]) + inv * pair - shocks.eps[j];
  }
  return total;
}

Vector omega_from_counts(const AgentProblem& prob, const CountVector& m) {
  const int T = prob.num_types();
  Vector mv(T);
  for (int t = 0; t < T; ++t) mv(t) = m[t];
  Vector omega = prob.v.eigenvectors.transpose() * mv / static_cast<double>(prob.n - 1);
  for (int t = 0; t < T; ++t)
    if (prob.v.zero[t]) omega(t) = 0.0;
  return omega;
}

BestResponse best_response(const AgentProblem& prob, const ShockVector& shocks) {
  SortedShocks sorted(prob, shocks);
  CountChoice choice = best_counts(prob, sorted);

  BestResponse out;
  out.counts = choice.counts;
  out.ties = choice.ties;
  Vector cut = type_thresholds(prob, choice.counts);
  // The maximizer takes the lowest-shock prefix within each type.  Ties in
  // shock values are measure zero; the threshold rule resolves them.
  out.links.assign(prob.target_types.size(), 0);
  for (std::size_t j = 0; j < shocks.eps.size(); ++j) {
    const int t = prob.target_types[j];
    const int m_t = choice.counts[t];
    out.links[j] = m_t > 0 && shocks.eps[j] <= sorted.sorted(t)[m_t - 1] ? 1 : 0;
  }
  out.is_fixed_point = true;
  for (int t = 0; t < prob.num_types(); ++t)
    out.is_fixed_point = out.is_fixed_point && sorted.count_at_most(t, cut(t)) == choice.counts[t];
  out.omega = omega_from_counts(prob, choice.counts);
  out.realized_eu = realized_expected_utility(prob, out.links, shocks);
  out.num_fixed_points = static_cast<int>(enumerate_fixed_points(prob, shocks).size());
  return out;
}

LinkVector brute_force_oracle(const AgentProblem& prob, const ShockVector& shocks) {
  const int slots = prob.n - 1;
  if (slots > 20) throw std::invalid_argument("brute_force_oracle: at most 20 partners");
  const int T = prob.num_types();
  const double inv = 1.0 / (prob.n - 2);
  const Matrix& V = prob.v.v;

  // Gray-code walk; each step flips one partner and updates the linear part
  // and the type counts.
  LinkVector g(slots, 0), best = g;
  Vector m = Vector::Zero(T);
  double lin = 0.0;
  double best_eu = 0.0;
  const std::uint64_t total = std::uint64_t{1} << slots;
  for (std::uint64_t step = 1; step < total; ++step) {
    const int j = std::countr_zero(step);
    const int t = prob.target_types[j];
    const double sign = g[j] ? -1.0 : 1.0;
    g[j] ^= 1;
    lin += sign * (prob.utility(t) - shocks.eps[j]);
    m(t) += sign;
    const double eu = lin + inv * m.dot(V * m);
    if (eu > best_eu) {
      best_eu = eu;
      best = g;
    }
  }
  return best;
}

double pi_objective(const AgentProblem& prob, const Vector& omega, const ShockVector& shocks) {
  const double n = prob.n;
  const Vector shift = (2.0 * (n - 1) / (n - 2)) * (prob.v.eigenvectors * prob.v.eigenvalues.asDiagonal() * omega);
  double total = 0.0;
  for (std::size_t j = 0; j < prob.target_types.size(); ++j) {
    const int t = prob.target_types[j];
    total += std::max(prob.utility(t) + shift(t) - shocks.eps[j], 0.0);
  }
  return total - (n - 1) * (n - 1) / (n - 2) * omega.dot(prob.v.eigenvalues.asDiagonal() * omega);
}

}  // namespace netform
