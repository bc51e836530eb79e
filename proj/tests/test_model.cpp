#include "fixtures.hpp"
#include "oracles.hpp"

#include "netform/model.hpp"
#include "netform/rng.hpp"
#include "netform/simulate.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace netform;

TEST_CASE("utility with all coefficients zero is zero") {
  TypeSpace ts = fixture::binary_types();
  CoefficientSet c = CoefficientSet::zeros(2, 1);
  Population pop = Population::from_types({0, 1, 1, 0, 1}, 2);
  LinkProbMatrix p(Matrix::Constant(2, 2, 0.3));
  VMatrix v = v_matrix(0, pop, p, c);
  for (int i = 0; i < pop.n(); ++i)
    for (int j = 0; j < pop.n(); ++j)
      if (i != j) CHECK(base_utility_exp_agents(i, j, pop, p, c, ts, v) == 0.0);
  CHECK(limit_utility(0, 1, p, c, ts) == 0.0);
}

TEST_CASE("constant indirect-friends table collapses the average") {
  TypeSpace ts = fixture::binary_types();
  CoefficientSet c = CoefficientSet::zeros(2, 1);
  c.beta1 = 1.0;
  c.beta5 = TypeTable::constant(2, 1.0);
  LinkProbMatrix p = LinkProbMatrix::constant(2, 0.5);
  for (int n : {3, 4, 9}) {
    std::vector<int> types(n);
    for (int k = 0; k < n; ++k) types[k] = k % 2;
    Population pop = Population::from_types(types, 2);
    VMatrix v = v_matrix(0, pop, p, c);
    CHECK(base_utility_exp_agents(0, 1, pop, p, c, ts, v) == doctest::Approx(1.5).epsilon(1e-14));
  }
  CHECK(limit_utility(1, 0, p, c, ts) == doctest::Approx(1.5));
}

TEST_CASE("utility matches agent-by-agent summation") {
  TypeSpace ts = TypeSpace::scalar({0.0, 1.0, 2.5}, {0.3, 0.3, 0.4});
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(0.05, 0.95);
  std::normal_distribution<double> z(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    CoefficientSet c = CoefficientSet::zeros(3, 1);
    c.beta1 = z(rng);
    c.beta2(0) = z(rng);
    c.beta3(0) = z(rng);
    c.beta4_recip = z(rng);
    std::vector<double> b5(27), g1(27), g2(27);
    for (double& x : b5) x = z(rng);
    // gamma tables symmetric in the last two indices
    for (int a = 0; a < 3; ++a)
      for (int s = 0; s < 3; ++s)
        for (int t = s; t < 3; ++t) {
          g1[(a * 3 + s) * 3 + t] = g1[(a * 3 + t) * 3 + s] = z(rng);
          g2[(a * 3 + s) * 3 + t] = g2[(a * 3 + t) * 3 + s] = z(rng);
        }
    c.beta5 = TypeTable::full(3, b5);
    c.gamma1 = TypeTable::full(3, g1);
    c.gamma2 = TypeTable::full(3, g2);
    Matrix pm(3, 3);
    for (int s = 0; s < 3; ++s)
      for (int t = 0; t < 3; ++t) pm(s, t) = unif(rng);
    LinkProbMatrix p(pm);
    std::vector<int> types(10);
    for (int k = 0; k < 10; ++k) types[k] = static_cast<int>(rng() % 3);
    types[0] = 0, types[1] = 1, types[2] = 2, types[3] = 1, types[4] = 2, types[5] = 0;
    Population pop = Population::from_types(types, 3);
    for (int i = 0; i < 10; ++i) {
      VMatrix v = v_matrix(pop.type_of[i], pop, p, c);
      for (int j = 0; j < 10; ++j) {
        if (i == j) continue;
        // the oracle needs a second partner of j's type for the gamma2 exclusion
        int same = pop.available(pop.type_of[i], pop.type_of[j]) - 1;
        if (same < 1) continue;
        CHECK(base_utility_exp_agents(i, j, pop, p, c, ts, v) ==
              doctest::Approx(oracle::utility_by_agents(i, j, pop, p, c, ts)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("utility at the friends design matches direct summation for n = 10") {
  TypeSpace ts = fixture::binary_types();
  CoefficientSet c = fixture::friends_design();
  Population pop = Population::from_types({0, 1, 1, 0, 0, 1, 0, 1, 1, 1}, 2);
  LinkProbMatrix p(Matrix{{0.42, 0.17}, {0.23, 0.61}});
  for (int i = 0; i < pop.n(); ++i) {
    VMatrix v = v_matrix(pop.type_of[i], pop, p, c);
    for (int j = 0; j < pop.n(); ++j)
      if (i != j)
        CHECK(base_utility_exp_agents(i, j, pop, p, c, ts, v) ==
              doctest::Approx(oracle::utility_by_agents(i, j, pop, p, c, ts)).epsilon(1e-13));
  }
}

TEST_CASE("utility depends only on type counts") {
  TypeSpace ts = fixture::binary_types();
  CoefficientSet c = fixture::friends_design();
  c.gamma2 = TypeTable::constant(2, 0.7);
  LinkProbMatrix p(Matrix{{0.42, 0.17}, {0.23, 0.61}});
  Population a = Population::from_types({0, 1, 0, 0, 1, 1, 0}, 2);
  Population b = Population::from_types({0, 1, 1, 1, 0, 0, 0}, 2);
  VMatrix va = v_matrix(0, a, p, c), vb = v_matrix(0, b, p, c);
  CHECK(base_utility_exp_agents(0, 1, a, p, c, ts, va) == base_utility_exp_agents(0, 1, b, p, c, ts, vb));
  CHECK(va.v == vb.v);
}

TEST_CASE("friends-in-common matrix for a two-type example") {
  CoefficientSet c = CoefficientSet::zeros(2, 1);
  c.gamma1 = TypeTable::constant(2, 1.0);
  Population pop = Population::from_types({0, 0, 1, 1, 0}, 2);
  LinkProbMatrix p(Matrix{{0.6, 0.2}, {0.4, 0.5}});
  VMatrix v = v_matrix(0, pop, p, c);
  CHECK(v.v(0, 0) == doctest::Approx(0.36).epsilon(1e-15));
  CHECK(v.v(0, 1) == doctest::Approx(0.08).epsilon(1e-15));
  CHECK(v.v(1, 0) == doctest::Approx(0.08).epsilon(1e-15));
  CHECK(v.v(1, 1) == doctest::Approx(0.25).epsilon(1e-15));
  Matrix rebuilt = v.eigenvectors * v.eigenvalues.asDiagonal() * v.eigenvectors.transpose();
  CHECK((rebuilt - v.v).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((v.eigenvectors.transpose() * v.eigenvectors - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-10);
  for (int k = 0; k < 2; ++k)
    CHECK((v.v * v.eigenvectors.col(k) - v.eigenvalues(k) * v.eigenvectors.col(k)).norm() < 1e-10);
  CHECK(v.eigenvalues(0) >= v.eigenvalues(1));

  // scaling gamma1 scales V entrywise
  c.gamma1 = TypeTable::constant(2, 2.5);
  VMatrix v2 = v_matrix(1, pop, p, c);
  CHECK((v2.v - 2.5 * v.v).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("zero interaction gives a zero matrix with zero eigenvalues") {
  CoefficientSet c = CoefficientSet::zeros(2, 1);
  Population pop = Population::from_types({0, 1, 1, 0}, 2);
  VMatrix v = v_matrix(0, pop, LinkProbMatrix::constant(2, 0.4), c);
  CHECK(v.v.isZero(0.0));
  CHECK(v.eigenvalues.isZero(0.0));
  CHECK(v.zero[0]);
  CHECK(v.zero[1]);
}

TEST_CASE("off-diagonal V has eigenvalues plus and minus v") {
  const double x = 0.08;
  VMatrix v = VMatrix::from(Matrix{{0.0, x}, {x, 0.0}});
  CHECK(v.eigenvalues(0) == doctest::Approx(x).epsilon(1e-14));
  CHECK(v.eigenvalues(1) == doctest::Approx(-x).epsilon(1e-14));
  const double r = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(std::abs(v.eigenvectors(0, 0)) - r) < 1e-12);
  CHECK(std::abs(v.eigenvectors(0, 0) - v.eigenvectors(1, 0)) < 1e-12);
  CHECK(std::abs(v.eigenvectors(0, 1) + v.eigenvectors(1, 1)) < 1e-12);
  // largest-magnitude entry of each column is positive
  for (int k = 0; k < 2; ++k) {
    Eigen::Index r0;
    v.eigenvectors.col(k).cwiseAbs().maxCoeff(&r0);
    CHECK(v.eigenvectors(r0, k) > 0.0);
  }
}

TEST_CASE("symmetric eigendecomposition") {
  SUBCASE("identity") {
    auto e = eigendecompose_sym(Matrix::Identity(3, 3));
    CHECK(e.values.isApprox(Vector::Ones(3)));
    CHECK((e.vectors.cwiseAbs() - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-14);
  }
  SUBCASE("rank one") {
    Vector z(3);
    z << 1.0, -2.0, 0.5;
    VMatrix v = VMatrix::from(1.7 * z * z.transpose());
    CHECK(v.eigenvalues(0) == doctest::Approx(1.7 * z.squaredNorm()).epsilon(1e-12));
    CHECK_FALSE(v.zero[0]);
    CHECK(v.zero[1]);
    CHECK(v.zero[2]);
  }
  SUBCASE("asymmetric input is rejected") {
    CHECK_THROWS_AS(eigendecompose_sym(Matrix{{1.0, 0.2}, {0.3, 1.0}}), std::invalid_argument);
  }
  SUBCASE("random matrices reconstruct") {
    std::mt19937_64 rng(5);
    for (int T = 1; T <= 6; ++T) {
      Matrix m = fixture::random_v(T, fixture::VKind::Indefinite, rng);
      auto e = eigendecompose_sym(m);
      CHECK((e.vectors * e.values.asDiagonal() * e.vectors.transpose() - m).cwiseAbs().maxCoeff() < 1e-10);
      for (int k = 1; k < T; ++k) CHECK(e.values(k - 1) >= e.values(k));
    }
  }
}

TEST_CASE("limiting utility and V") {
  TypeSpace ts = fixture::binary_types();
  CoefficientSet c = CoefficientSet::zeros(2, 1);
  c.beta5 = TypeTable::constant(2, 3.0);
  LinkProbMatrix p(Matrix{{0.6, 0.2}, {0.4, 0.5}});
  // sum_u pi_u p(t,u) times the constant
  CHECK(limit_utility(0, 1, p, c, ts) == doctest::Approx(3.0 * (0.5 * 0.4 + 0.5 * 0.5)));
  CHECK(limit_utility(1, 0, p, c, ts) == doctest::Approx(3.0 * (0.5 * 0.6 + 0.5 * 0.2)));

  c.gamma1 = TypeTable::constant(2, 1.0);
  Population pop = Population::from_types({0, 1, 0, 1}, 2);
  CHECK(limit_v(0, p, c, ts).v.isApprox(v_matrix(0, pop, p, c).v));

  CoefficientSet g = CoefficientSet::zeros(2, 1);
  g.gamma2 = TypeTable::constant(2, 1.0);
  Matrix expect = Matrix::Constant(2, 2, 0.3 * 0.3);
  CHECK((limit_v(1, LinkProbMatrix::constant(2, 0.3), g, ts).v - expect).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("finite utility approaches its limit as n grows") {
  TypeSpace ts = fixture::binary_types();
  CoefficientSet c = fixture::friends_design();
  c.gamma2 = TypeTable::constant(2, 0.5);
  LinkProbMatrix p(Matrix{{0.42, 0.17}, {0.23, 0.61}});
  std::vector<double> gaps;
  for (int n : {50, 500, 5000}) {
    double worst = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
      Population pop = draw_population(n, ts, RandomStream(99).child(n, rep));
      for (int s = 0; s < 2; ++s) {
        VMatrix v = v_matrix(s, pop, p, c);
        VMatrix vl = limit_v(s, p, c, ts);
        for (int t = 0; t < 2; ++t) {
          double fin = base_utility_exp(s, t, pop, p, c, ts, v);
          worst = std::max(worst, std::abs(fin - limit_utility(s, t, p, c, ts)));
          worst = std::max(worst, std::abs(v.v(s, t) - vl.v(s, t)));
        }
      }
    }
    gaps.push_back(worst);
  }
  CHECK(gaps[1] < gaps[0]);
  CHECK(gaps[2] < gaps[1]);
  CHECK(gaps[2] < 0.05);
}

TEST_CASE("partial expectation of the normal shock") {
  ShockDistribution normal;
  CHECK(partial_expectation(0.0, normal) == doctest::Approx(0.3989423).epsilon(1e-7));
  CHECK(partial_expectation(0.0, normal) == doctest::Approx(oracle::partial_expectation_quadrature(0.0)).epsilon(1e-10));
  for (double c : {-3.0, -1.2, 0.4, 2.2})
    CHECK(partial_expectation(c, normal) == doctest::Approx(oracle::partial_expectation_quadrature(c)).epsilon(1e-9));
  CHECK(partial_expectation(40.0, normal) == doctest::Approx(40.0));
  const double h = 1e-5;
  double prev = -1.0, prev_slope = -1.0;
  for (double c = -4.0; c <= 4.0 + 1e-9; c += 0.25) {
    const double d = (partial_expectation(c + h, normal) - partial_expectation(c - h, normal)) / (2 * h);
    CHECK(std::abs(d - normal.cdf(c)) < 1e-6);
    const double v = partial_expectation(c, normal);
    CHECK(v >= prev);
    CHECK(d >= prev_slope - 1e-9);
    prev = v;
    prev_slope = d;
  }
}

TEST_CASE("partial expectation of the logistic shock") {
  ShockDistribution logistic = ShockDistribution::from_name("logistic");
  const double h = 1e-5;
  for (double c = -4.0; c <= 4.0; c += 0.5) {
    const double d = (partial_expectation(c + h, logistic) - partial_expectation(c - h, logistic)) / (2 * h);
    CHECK(std::abs(d - logistic.cdf(c)) < 1e-6);
  }
  CHECK(partial_expectation(0.0, logistic) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("coefficient packing round trip") {
  CoefficientSet c = fixture::friends_design();
  CHECK(c.num_free() == 5);
  CHECK(c.free_names() == std::vector<std::string>{"beta1", "beta2", "beta3", "beta5", "gamma1"});
  Vector theta(5);
  theta << 0.1, 0.2, 0.3, 0.4, 0.5;
  CoefficientSet d = c.with_free(theta);
  CHECK(d.pack_free() == theta);
  CHECK(d.beta5.constant_value() == 0.4);
  CHECK(d.gamma1(1, 0, 1) == 0.5);
}

TEST_CASE("invalid inputs are rejected") {
  TypeSpace ts = fixture::binary_types();
  CoefficientSet c = CoefficientSet::zeros(2, 1);
  c.gamma2 = TypeTable::constant(2, 1.0);
  Population small = Population::from_types({0, 1, 1}, 2);
  CHECK_THROWS(v_matrix(0, small, LinkProbMatrix::constant(2, 0.5), c));
  CHECK_THROWS(LinkProbMatrix(Matrix::Constant(2, 2, 1.5)).validate());
  CHECK_THROWS(TypeSpace::scalar({0.0, 1.0}, {0.7, 0.7}));
}
