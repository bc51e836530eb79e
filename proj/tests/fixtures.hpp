#pragma once

#include "netform/bestresponse.hpp"
#include "netform/model.hpp"
#include "netform/montecarlo.hpp"

#include <random>
#include <vector>

namespace fixture {

using namespace netform;

inline TypeSpace binary_types() { return TypeSpace::scalar({0.0, 1.0}, {0.5, 0.5}); }

// Binary covariate design with indirect friends and friends in common.
inline CoefficientSet friends_design() {
  CoefficientSet c = CoefficientSet::zeros(2, 1);
  c.beta1 = -1.0;
  c.beta2(0) = 1.0;
  c.beta3(0) = -2.0;
  c.beta5 = TypeTable::constant(2, 1.0);
  c.gamma1 = TypeTable::constant(2, 1.0);
  c.free.beta1 = true;
  c.free.beta2 = {true};
  c.free.beta3 = {true};
  c.free.beta5 = true;
  c.free.gamma1 = true;
  return c;
}

// Same design with no interaction terms: links are independent probits.
inline CoefficientSet probit_design() {
  CoefficientSet c = CoefficientSet::zeros(2, 1);
  c.beta1 = -1.0;
  c.beta2(0) = 1.0;
  c.beta3(0) = -2.0;
  c.free.beta1 = true;
  c.free.beta2 = {true};
  c.free.beta3 = {true};
  return c;
}

inline ExperimentConfig experiment(const CoefficientSet& coef, int n, int reps, std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.n = n;
  cfg.reps = reps;
  cfg.R = 200;
  cfg.theta_dgp = coef;
  cfg.ts = binary_types();
  cfg.base_seed = seed;
  return cfg;
}

// Random symmetric V of the requested kind.
enum class VKind { Psd, Singular, Indefinite, Zero };

inline Matrix random_v(int T, VKind kind, std::mt19937_64& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  Matrix a(T, T);
  for (int r = 0; r < T; ++r)
    for (int c = 0; c < T; ++c) a(r, c) = z(rng);
  switch (kind) {
    case VKind::Psd:
      return a * a.transpose() / T;
    case VKind::Singular: {
      Vector v = a.col(0);
      return v * v.transpose() / T;
    }
    case VKind::Indefinite: {
      Matrix s = (a + a.transpose()) / 2.0;
      if (T == 1 && s(0, 0) > 0) s(0, 0) = -s(0, 0);
      return s;
    }
    case VKind::Zero:
      break;
  }
  return Matrix::Zero(T, T);
}

struct Instance {
  AgentProblem prob;
  ShockVector shocks;
};

inline Instance random_instance(int n, int T, VKind kind, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> type(0, T - 1);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<int> targets(n - 1);
  for (int& t : targets) t = type(rng);
  Vector u(T);
  for (int t = 0; t < T; ++t) u(t) = 0.5 * z(rng);
  Instance inst{AgentProblem::from_parts(type(rng), targets, u, random_v(T, kind, rng)), {}};
  inst.shocks.eps.resize(n - 1);
  for (double& e : inst.shocks.eps) e = z(rng);
  return inst;
}

}  // namespace fixture
