#include "netform/nelder_mead.hpp"
#include "netform/parallel.hpp"
#include "netform/rng.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <atomic>
#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

using namespace netform;

TEST_CASE("streams are reproducible and children are independent of parent position") {
  RandomStream a(42), b(42);
  for (int k = 0; k < 10; ++k) CHECK(a() == b());
  RandomStream fresh(42);
  CHECK(a.child(3).key() == fresh.child(3).key());
  CHECK(fresh.child(3).key() != fresh.child(4).key());
  CHECK(fresh.child(1, 2).key() == fresh.child(1).child(2).key());
  CHECK(fresh.child("moment").key() == RandomStream(42).child("moment").key());
  CHECK(RandomStream(1).key() != RandomStream(2).key());
}

TEST_CASE("stream output is roughly uniform") {
  RandomStream s(7);
  std::vector<int> bins(16, 0);
  const int draws = 160000;
  for (int k = 0; k < draws; ++k) ++bins[s() >> 60];
  for (int c : bins) CHECK(std::abs(c - draws / 16) < 5 * std::sqrt(draws / 16.0));
}

TEST_CASE("sibling streams do not collide") {
  std::set<std::uint64_t> seen;
  RandomStream root(3);
  for (std::uint64_t k = 0; k < 1000; ++k) {
    RandomStream c = root.child(k);
    seen.insert(c());
  }
  CHECK(seen.size() == 1000);
}

TEST_CASE("simplex minimizes a quadratic and the Rosenbrock valley") {
  auto quad = [](const Eigen::VectorXd& x) {
    return (x - Eigen::Vector3d(1.0, -2.0, 0.5)).squaredNorm();
  };
  SimplexOptions opt;
  opt.x_tol = 1e-8;
  opt.f_tol = 1e-14;
  auto r = nelder_mead<double>(quad, Eigen::VectorXd::Zero(3), opt);
  CHECK(r.converged);
  CHECK((r.x - Eigen::Vector3d(1.0, -2.0, 0.5)).cwiseAbs().maxCoeff() < 1e-6);

  auto rosen = [](const Eigen::VectorXd& x) {
    return 100.0 * std::pow(x(1) - x(0) * x(0), 2) + std::pow(1.0 - x(0), 2);
  };
  opt.max_iter = 5000;
  auto q = nelder_mead<double>(rosen, Eigen::Vector2d(-1.2, 1.0), opt);
  CHECK((q.x - Eigen::Vector2d(1.0, 1.0)).norm() < 1e-4);
}

TEST_CASE("simplex treats non-finite values as worse than anything") {
  auto f = [](const Eigen::VectorXd& x) {
    if (x(0) < 0.0) return std::nan("");
    return (x(0) - 0.3) * (x(0) - 0.3);
  };
  auto r = nelder_mead<double>(f, Eigen::VectorXd::Constant(1, 0.05), SimplexOptions{});
  CHECK(r.x(0) == doctest::Approx(0.3).epsilon(1e-4));
}

TEST_CASE("parallel_for visits every index once and rethrows") {
  std::vector<std::atomic<int>> hits(257);
  parallel_for(257, 4, [&](int k) { ++hits[k]; });
  for (auto& h : hits) CHECK(h.load() == 1);
  CHECK_THROWS_AS(parallel_for(10, 3, [](int k) {
                    if (k == 7) throw std::runtime_error("boom");
                  }),
                  std::runtime_error);
}
