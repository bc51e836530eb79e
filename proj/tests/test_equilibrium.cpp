#include "fixtures.hpp"
#include "oracles.hpp"

#include "netform/equilibrium.hpp"
#include "netform/simulate.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace netform;

namespace {

const ShockDistribution kNormal{};

LinkProbMatrix probit_matrix(const CoefficientSet& c, const TypeSpace& ts) {
  Matrix p(ts.size(), ts.size());
  for (int s = 0; s < ts.size(); ++s)
    for (int t = 0; t < ts.size(); ++t)
      p(s, t) = oracle::normal_cdf(c.beta1 + ts.values[s].dot(c.beta2) + (ts.values[s] - ts.values[t]).cwiseAbs().dot(c.beta3));
  return LinkProbMatrix(p);
}

Population balanced(int n) {
  std::vector<int> types(n);
  for (int k = 0; k < n; ++k) types[k] = k % 2;
  return Population::from_types(types, 2);
}

}  // namespace

TEST_CASE("simulated choice probabilities reduce to probits without interactions") {
  TypeSpace ts = fixture::binary_types();
  CoefficientSet c = fixture::probit_design();
  Population pop = balanced(20);
  const int R = 4000;
  LinkProbMatrix sim = ccp_simulated(c, LinkProbMatrix::constant(2, 0.5), pop, ts, kNormal, R, RandomStream(1));
  LinkProbMatrix exact = probit_matrix(c, ts);
  // each draw contributes about ten Bernoulli trials per cell, so 3/sqrt(R) is generous
  CHECK((sim.p - exact.p).cwiseAbs().maxCoeff() < 3.0 / std::sqrt(R));

  LinkProbMatrix again = ccp_simulated(c, LinkProbMatrix::constant(2, 0.5), pop, ts, kNormal, R, RandomStream(1));
  CHECK(again.p == sim.p);
}

TEST_CASE("limiting solver without utility terms stops at one half") {
  TypeSpace ts = fixture::binary_types();
  CoefficientSet c = CoefficientSet::zeros(2, 1);
  auto rep = solve_equilibrium_limit(c, ts, kNormal, LinkProbMatrix::constant(2, 0.2));
  CHECK(rep.converged);
  CHECK((rep.p_star.p.array() - 0.5).abs().maxCoeff() < 1e-10);
}

TEST_CASE("both solvers return the probit matrix when nothing depends on p") {
  TypeSpace ts = fixture::binary_types();
  CoefficientSet c = fixture::probit_design();
  auto lim = solve_equilibrium_limit(c, ts, kNormal, LinkProbMatrix::constant(2, 0.5));
  CHECK(lim.converged);
  CHECK((lim.p_star.p - probit_matrix(c, ts).p).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(limiting_ccp(1, 0, c, lim.p_star, ts, kNormal) == doctest::Approx(probit_matrix(c, ts).p(1, 0)));

  // the simulated map ignores p, so the solver stops once the damping has shrunk the gap
  Population pop = balanced(30);
  auto fin = solve_equilibrium_finite(c, pop, ts, kNormal, 200, RandomStream(5), lim.p_star);
  CHECK(fin.converged);
  LinkProbMatrix mapped = ccp_simulated(c, fin.p_star, pop, ts, kNormal, 200, RandomStream(5));
  CHECK((mapped.p - fin.p_star.p).cwiseAbs().maxCoeff() <= fin.tolerance);
}

TEST_CASE("limiting equilibrium of the friends design") {
  TypeSpace ts = fixture::binary_types();
  CoefficientSet c = fixture::friends_design();
  auto a = solve_equilibrium_limit(c, ts, kNormal, LinkProbMatrix::constant(2, 0.5));
  REQUIRE(a.converged);
  CHECK(a.residual <= 1e-10);
  // re-evaluate the map independently of the solver's bookkeeping
  CHECK((limiting_ccp_matrix(c, a.p_star, ts, kNormal).p - a.p_star.p).cwiseAbs().maxCoeff() <= 1e-10);

  EquilibriumOptions slow;
  slow.damping = 0.2;
  slow.max_iter = 5000;
  auto b = solve_equilibrium_limit(c, ts, kNormal, LinkProbMatrix::constant(2, 0.5), slow);
  REQUIRE(b.converged);
  CHECK((a.p_star.p - b.p_star.p).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("limiting omega") {
  TypeSpace ts = fixture::binary_types();
  SUBCASE("no interaction gives zero") {
    auto w = limiting_omega(0, fixture::probit_design(), LinkProbMatrix::constant(2, 0.4), ts, kNormal);
    CHECK(w.omega_tilde.isZero(0.0));
    CHECK(w.converged);
  }
  SUBCASE("friends design solves the first-order condition, checked on a grid") {
    CoefficientSet c = fixture::friends_design();
    auto eq = solve_equilibrium_limit(c, ts, kNormal, LinkProbMatrix::constant(2, 0.5));
    for (int s = 0; s < 2; ++s) {
      auto w = limiting_omega(s, c, eq.p_star, ts, kNormal);
      REQUIRE(w.converged);
      VMatrix v = limit_v(s, eq.p_star, c, ts);
      Vector u(2);
      for (int t = 0; t < 2; ++t) u(t) = limit_utility(s, t, eq.p_star, c, ts);
      auto foc = [&](double a, double b) {
        Vector x{{a, b}};
        Vector idx = u + 2.0 * v.v * x;
        Vector e{{0.5 * oracle::normal_cdf(idx(0)), 0.5 * oracle::normal_cdf(idx(1))}};
        return (v.v * (e - x)).norm();
      };
      double best = 1e300, ba = 0, bb = 0;
      for (int i = 0; i <= 1000; ++i)
        for (int j = 0; j <= 1000; ++j) {
          const double r = foc(i * 1e-3, j * 1e-3);
          if (r < best) best = r, ba = i * 1e-3, bb = j * 1e-3;
        }
      CHECK(std::abs(ba - w.omega_tilde(0)) <= 1.5e-3);
      CHECK(std::abs(bb - w.omega_tilde(1)) <= 1.5e-3);
      CHECK(foc(w.omega_tilde(0), w.omega_tilde(1)) < 1e-10);
    }
  }
}

TEST_CASE("limiting probabilities are symmetric for symmetric parameters") {
  TypeSpace ts = fixture::binary_types();
  CoefficientSet c = CoefficientSet::zeros(2, 1);
  c.beta1 = -0.3;
  c.beta3(0) = -1.0;
  c.gamma1 = TypeTable::constant(2, 0.8);
  LinkProbMatrix p(Matrix{{0.4, 0.2}, {0.2, 0.4}});
  LinkProbMatrix q = limiting_ccp_matrix(c, p, ts, kNormal);
  CHECK(std::abs(q.p(0, 1) - q.p(1, 0)) < 1e-14);
  CHECK(std::abs(q.p(0, 0) - q.p(1, 1)) < 1e-14);
}

TEST_CASE("finite equilibrium of the friends design at n = 50") {
  TypeSpace ts = fixture::binary_types();
  CoefficientSet c = fixture::friends_design();
  auto lim = solve_equilibrium_limit(c, ts, kNormal, LinkProbMatrix::constant(2, 0.5));
  Population pop = draw_population(50, ts, RandomStream(17));
  const int R = 200;
  auto a = solve_equilibrium_finite(c, pop, ts, kNormal, R, RandomStream(18), lim.p_star);
  REQUIRE(a.converged);
  CHECK(a.residual <= 2.0 / std::sqrt(R));
  CHECK(a.residual <= a.tolerance);
  LinkProbMatrix mapped = ccp_simulated(c, a.p_star, pop, ts, kNormal, R, RandomStream(18));
  CHECK((mapped.p - a.p_star.p).cwiseAbs().maxCoeff() == doctest::Approx(a.residual));
  auto b = solve_equilibrium_finite(c, pop, ts, kNormal, R, RandomStream(18), lim.p_star);
  CHECK(a.p_star.p == b.p_star.p);
}

TEST_CASE("non-convergence is flagged and the last iterate returned") {
  TypeSpace ts = fixture::binary_types();
  CoefficientSet c = fixture::friends_design();
  Population pop = draw_population(30, ts, RandomStream(2));
  EquilibriumOptions opt;
  opt.tol = 1e-300;
  opt.max_iter = 5;
  auto r = solve_equilibrium_finite(c, pop, ts, kNormal, 50, RandomStream(3), LinkProbMatrix::constant(2, 0.5), opt);
  CHECK_FALSE(r.converged);
  CHECK(r.iterations == 5);
  CHECK(r.p_star.p.allFinite());
}

TEST_CASE("Legendre gradient and its Jacobian match finite differences") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.05, 0.95);
  TypeSpace ts = TypeSpace::scalar({0.0, 1.0, 2.0}, {0.3, 0.3, 0.4});
  int points = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const int T = 2 + rep % 2;
    TypeSpace tsT = T == 2 ? fixture::binary_types() : ts;
    CoefficientSet c = CoefficientSet::zeros(T, 1);
    c.beta1 = 0.5 * z(rng);
    c.beta3(0) = 0.5 * z(rng);
    c.gamma1 = TypeTable::constant(T, rep % 3 == 0 ? -0.7 : 0.9);
    c.gamma2 = TypeTable::constant(T, 0.3 * z(rng));
    Matrix pm(T, T);
    for (int s = 0; s < T; ++s)
      for (int t = 0; t < T; ++t) pm(s, t) = unif(rng);
    std::vector<int> types(12 + rep % 20);
    for (std::size_t k = 0; k < types.size(); ++k) types[k] = static_cast<int>(k % T);
    Population pop = Population::from_types(types, T);
    AgentProblem prob = AgentProblem::for_type(rep % T, pop, LinkProbMatrix(pm), c, tsT);
    Vector omega(T);
    for (int t = 0; t < T; ++t) omega(t) = 0.3 * z(rng);

    const double n = prob.n;
    const double scale = 2.0 * (n - 1) * (n - 1) / (n - 2);
    PiStarGradient g = pi_star_gradient(prob, omega, kNormal);
    const double h = 1e-5;
    for (int k = 0; k < T; ++k) {
      Vector e = Vector::Unit(T, k) * h;
      const double fd = (pi_star_objective(prob, omega + e, kNormal) - pi_star_objective(prob, omega - e, kNormal)) /
                        (2 * h) / scale;
      CHECK(std::abs(fd - g.gamma(k)) < 1e-6);
      Vector col = (pi_star_gradient(prob, omega + e, kNormal).gamma - pi_star_gradient(prob, omega - e, kNormal).gamma) /
                   (2 * h);
      CHECK((col - g.jacobian.col(k)).cwiseAbs().maxCoeff() < 1e-5);
    }
    ++points;
  }
  CHECK(points == 100);
}

TEST_CASE("omega star") {
  TypeSpace ts = fixture::binary_types();
  SUBCASE("zero without interaction") {
    Population pop = balanced(20);
    AgentProblem prob = AgentProblem::for_type(0, pop, LinkProbMatrix::constant(2, 0.3), fixture::probit_design(), ts);
    PiStarGradient g = pi_star_gradient(prob, Vector::Zero(2), kNormal);
    CHECK(g.gamma.isZero(0.0));
    OmegaStar w = omega_star_finite(prob, kNormal);
    CHECK(w.omega.isZero(0.0));
  }
  SUBCASE("friends design at n = 50") {
    CoefficientSet c = fixture::friends_design();
    auto lim = solve_equilibrium_limit(c, ts, kNormal, LinkProbMatrix::constant(2, 0.5));
    Population pop = draw_population(50, ts, RandomStream(23));
    for (int s = 0; s < 2; ++s) {
      AgentProblem prob = AgentProblem::for_type(s, pop, lim.p_star, c, ts);
      OmegaStar w = omega_star_finite(prob, kNormal);
      REQUIRE(w.converged);
      CHECK(w.gradient_residual <= 1e-8);
      CHECK(std::abs(w.inner.determinant()) > 1e-6);
      CHECK(w.inner_condition < 1e6);
      // coarse grid then a local grid refinement of the objective
      Vector best = Vector::Zero(2);
      double top = -1e300;
      for (int i = -20; i <= 40; ++i)
        for (int j = -20; j <= 40; ++j) {
          Vector x{{i * 0.025, j * 0.025}};
          const double f = pi_star_objective(prob, x, kNormal);
          if (f > top) top = f, best = x;
        }
      for (double step : {0.005, 0.001, 0.0002, 0.00004}) {
        Vector centre = best;
        for (int i = -6; i <= 6; ++i)
          for (int j = -6; j <= 6; ++j) {
            Vector x = centre + Vector{{i * step, j * step}};
            const double f = pi_star_objective(prob, x, kNormal);
            if (f > top) top = f, best = x;
          }
      }
      CHECK((best - w.omega).cwiseAbs().maxCoeff() < 1e-3);
    }
  }
}

TEST_CASE("finite choice probabilities approach the limit as n grows") {
  TypeSpace ts = fixture::binary_types();
  CoefficientSet c = fixture::friends_design();
  auto lim = solve_equilibrium_limit(c, ts, kNormal, LinkProbMatrix::constant(2, 0.5));
  LinkProbMatrix target = limiting_ccp_matrix(c, lim.p_star, ts, kNormal);
  const int R = 2000;
  std::vector<double> gaps;
  for (int n : {20, 200}) {
    Population pop = balanced(n);
    LinkProbMatrix sim = ccp_simulated(c, lim.p_star, pop, ts, kNormal, R, RandomStream(31));
    gaps.push_back((sim.p - target.p).cwiseAbs().maxCoeff());
  }
  CHECK(gaps[1] < gaps[0]);
  CHECK(gaps[1] < 0.02 + 3.0 / std::sqrt(R));
}
