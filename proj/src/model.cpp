#include "netform/model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace netform {

void TypeSpace::validate() const {
  const int T = size();
  if (T < 1) throw std::invalid_argument("type space needs at least one type");
  const int dx = dim();
  for (const auto& x : values)
    if (x.size() != dx) throw std::invalid_argument("type values have inconsistent dimension");
  for (int s = 0; s < T; ++s)
    for (int t = s + 1; t < T; ++t)
      if ((values[s] - values[t]).cwiseAbs().maxCoeff() == 0.0)
        throw std::invalid_argument("type values must be distinct");
  if (limit_probs.size() != T) throw std::invalid_argument("limit_probs must have one entry per type");
  if ((limit_probs.array() < 0.0).any()) throw std::invalid_argument("limit_probs must be nonnegative");
  if (std::abs(limit_probs.sum() - 1.0) > 1e-12) throw std::invalid_argument("limit_probs must sum to 1");
}

TypeSpace TypeSpace::scalar(const std::vector<double>& support, const std::vector<double>& probs) {
  TypeSpace ts;
  for (double x : support) ts.values.push_back(Vector::Constant(1, x));
  ts.limit_probs = Eigen::Map<const Vector>(probs.data(), static_cast<Eigen::Index>(probs.size()));
  ts.validate();
  return ts;
}

void Population::validate() const {
  std::vector<int> tally(counts.size(), 0);
  for (int t : type_of) {
    if (t < 0 || t >= num_types()) throw std::invalid_argument("agent type index out of range");
    ++tally[t];
  }
  if (tally != counts) throw std::invalid_argument("population counts do not match type assignments");
}

Population Population::from_types(std::vector<int> type_of, int num_types) {
  Population pop;
  pop.type_of = std::move(type_of);
  pop.counts.assign(num_types, 0);
  for (int t : pop.type_of) {
    if (t < 0 || t >= num_types) throw std::invalid_argument("agent type index out of range");
    ++pop.counts[t];
  }
  return pop;
}

TypeTable TypeTable::constant(int T, double value) {
  TypeTable tab;
  tab.T_ = T;
  tab.is_constant_ = true;
  tab.value_ = value;
  return tab;
}

TypeTable TypeTable::full(int T, std::vector<double> entries) {
  if (entries.size() != static_cast<std::size_t>(T) * T * T)
    throw std::invalid_argument("type table needs T^3 entries");
  TypeTable tab;
  tab.T_ = T;
  tab.is_constant_ = false;
  tab.data_ = std::move(entries);
  return tab;
}

bool TypeTable::symmetric_in_last_two(double tol) const {
  if (is_constant_) return true;
  for (int t = 0; t < T_; ++t)
    for (int s = 0; s < T_; ++s)
      for (int u = s + 1; u < T_; ++u)
        if (std::abs((*this)(t, s, u) - (*this)(t, u, s)) > tol) return false;
  return true;
}

bool TypeTable::all_zero() const {
  if (is_constant_) return value_ == 0.0;
  for (double x : data_)
    if (x != 0.0) return false;
  return true;
}

CoefficientSet CoefficientSet::zeros(int T, int dx) {
  CoefficientSet c;
  c.beta2 = Vector::Zero(dx);
  c.beta3 = Vector::Zero(dx);
  c.beta5 = TypeTable::constant(T, 0.0);
  c.gamma1 = TypeTable::constant(T, 0.0);
  c.gamma2 = TypeTable::constant(T, 0.0);
  c.free.beta2.assign(dx, false);
  c.free.beta3.assign(dx, false);
  return c;
}

void CoefficientSet::validate(int T, int dx) const {
  if (beta2.size() != dx || beta3.size() != dx) throw std::invalid_argument("beta2/beta3 must have length d_x");
  for (const TypeTable* tab : {&beta5, &gamma1, &gamma2})
    if (tab->types() != T) throw std::invalid_argument("coefficient tables must be indexed by T types");
  if (!gamma1.symmetric_in_last_two() || !gamma2.symmetric_in_last_two())
    throw std::invalid_argument("gamma tables must be symmetric in the types of j and k");
  if (free.beta2.size() != static_cast<std::size_t>(dx) || free.beta3.size() != static_cast<std::size_t>(dx))
    throw std::invalid_argument("free mask for beta2/beta3 must have length d_x");
  if ((free.beta5 && !beta5.is_constant()) || (free.gamma1 && !gamma1.is_constant()) ||
      (free.gamma2 && !gamma2.is_constant()))
    throw std::invalid_argument("only constant coefficient tables can be estimated");
}

int CoefficientSet::num_free() const { return static_cast<int>(free_names().size()); }

std::vector<std::string> CoefficientSet::free_names() const {
  std::vector<std::string> names;
  const bool multi = beta2.size() > 1;
  if (free.beta1) names.emplace_back("beta1");
  for (std::size_t k = 0; k < free.beta2.size(); ++k)
    if (free.beta2[k]) names.push_back(multi ? "beta2[" + std::to_string(k) + "]" : "beta2");
  for (std::size_t k = 0; k < free.beta3.size(); ++k)
    if (free.beta3[k]) names.push_back(multi ? "beta3[" + std::to_string(k) + "]" : "beta3");
  if (free.beta4_recip) names.emplace_back("beta4_recip");
  if (free.beta5) names.emplace_back("beta5");
  if (free.gamma1) names.emplace_back("gamma1");
  if (free.gamma2) names.emplace_back("gamma2");
  return names;
}

Vector CoefficientSet::pack_free() const {
  std::vector<double> out;
  if (free.beta1) out.push_back(beta1);
  for (std::size_t k = 0; k < free.beta2.size(); ++k)
    if (free.beta2[k]) out.push_back(beta2(k));
  for (std::size_t k = 0; k < free.beta3.size(); ++k)
    if (free.beta3[k]) out.push_back(beta3(k));
  if (free.beta4_recip) out.push_back(beta4_recip);
  if (free.beta5) out.push_back(beta5.constant_value());
  if (free.gamma1) out.push_back(gamma1.constant_value());
  if (free.gamma2) out.push_back(gamma2.constant_value());
  return Eigen::Map<Vector>(out.data(), static_cast<Eigen::Index>(out.size()));
}

CoefficientSet CoefficientSet::with_free(const Vector& theta) const {
  if (theta.size() != num_free()) throw std::invalid_argument("parameter vector length does not match free mask");
  CoefficientSet c = *this;
  Eigen::Index k = 0;
  if (free.beta1) c.beta1 = theta(k++);
  for (std::size_t d = 0; d < free.beta2.size(); ++d)
    if (free.beta2[d]) c.beta2(d) = theta(k++);
  for (std::size_t d = 0; d < free.beta3.size(); ++d)
    if (free.beta3[d]) c.beta3(d) = theta(k++);
  if (free.beta4_recip) c.beta4_recip = theta(k++);
  if (free.beta5) c.beta5 = beta5.with_constant(theta(k++));
  if (free.gamma1) c.gamma1 = gamma1.with_constant(theta(k++));
  if (free.gamma2) c.gamma2 = gamma2.with_constant(theta(k++));
  return c;
}

double ShockDistribution::cdf(double x) const {
  const double z = x / scale;
  if (family == Family::StandardNormal) return 0.5 * std::erfc(-z / std::numbers::sqrt2);
  return 1.0 / (1.0 + std::exp(-z));
}

double ShockDistribution::pdf(double x) const {
  const double z = x / scale;
  if (family == Family::StandardNormal) return std::exp(-0.5 * z * z) / (scale * std::sqrt(2.0 * std::numbers::pi));
  const double e = std::exp(-std::abs(z));
  return e / (scale * (1.0 + e) * (1.0 + e));
}

double ShockDistribution::partial_expectation(double c) const {
  if (family == Family::StandardNormal) return c * cdf(c) + scale * scale * pdf(c);
  // scale * softplus(c / scale), written to avoid overflow
  const double z = c / scale;
  return scale * (std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))));
}

std::string ShockDistribution::name() const {
  return family == Family::StandardNormal ? "standard_normal" : "logistic";
}

ShockDistribution ShockDistribution::from_name(const std::string& name, double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("shock scale must be positive");
  ShockDistribution d;
  d.scale = scale;
  if (name == "standard_normal" || name == "normal") d.family = Family::StandardNormal;
  else if (name == "logistic") d.family = Family::Logistic;
  else throw std::invalid_argument("unknown shock family '" + name + "'");
  return d;
}

void LinkProbMatrix::validate() const {
  if (p.rows() != p.cols() || p.rows() < 1) throw std::invalid_argument("link probability matrix must be T x T");
  if (!p.allFinite() || (p.array() < 0.0).any() || (p.array() > 1.0).any())
    throw std::invalid_argument("link probabilities must lie in [0,1]");
}

SymEigen<double> eigendecompose_sym(const Matrix& m) { return jacobi_eigen(m); }

VMatrix VMatrix::from(const Matrix& v) {
  VMatrix out;
  out.v = v;
  auto eig = eigendecompose_sym(v);
  out.eigenvalues = eig.values;
  out.eigenvectors = eig.vectors;
  out.zero = eig.zero;
  return out;
}

VMatrix v_matrix(int own_type, const Population& pop, const LinkProbMatrix& p, const CoefficientSet& coef) {
  const int T = pop.num_types();
  const int n = pop.n();
  const bool uses_gamma2 = !coef.gamma2.all_zero();
  if (uses_gamma2 && n < 4) throw std::invalid_argument("v_matrix: gamma2 terms need n >= 4");
  Matrix v(T, T);
  for (int s = 0; s < T; ++s) {
    for (int t = s; t < T; ++t) {
      double value = p(s, t) * p(t, s) * coef.gamma1(own_type, s, t);
      if (uses_gamma2) {
        double sum = 0.0;
        for (int u = 0; u < T; ++u) {
          int others = pop.counts[u] - (own_type == u) - (s == u) - (t == u);
          sum += std::max(others, 0) * p(s, u) * p(t, u);
        }
        value += sum / (n - 3) * coef.gamma2(own_type, s, t);
      }
      v(s, t) = value;
      v(t, s) = value;
    }
  }
  return VMatrix::from(v);
}

double base_utility_exp(int own_type, int target_type, const Population& pop, const LinkProbMatrix& p,
                        const CoefficientSet& coef, const TypeSpace& ts, const VMatrix& v) {
  const int n = pop.n();
  if (n < 3) throw std::invalid_argument("base_utility_exp: needs n >= 3");
  const int s = own_type, t = target_type;
  const Vector& xs = ts.values[s];
  const Vector& xt = ts.values[t];
  double u = coef.beta1 + xs.dot(coef.beta2) + (xs - xt).cwiseAbs().dot(coef.beta3) + p(t, s) * coef.beta4_recip;
  double indirect = 0.0;
  for (int w = 0; w < pop.num_types(); ++w) {
    int others = pop.counts[w] - (s == w) - (t == w);
    indirect += std::max(others, 0) * p(t, w) * coef.beta5(s, t, w);
  }
  u += indirect / (n - 2);
  u -= v.v(t, t) / (n - 2);
  return u;
}

double base_utility_exp_agents(int i, int j, const Population& pop, const LinkProbMatrix& p,
                               const CoefficientSet& coef, const TypeSpace& ts, const VMatrix& v) {
  if (i == j) throw std::invalid_argument("base_utility_exp: i and j must differ");
  return base_utility_exp(pop.type_of[i], pop.type_of[j], pop, p, coef, ts, v);
}

double limit_utility(int s, int t, const LinkProbMatrix& p, const CoefficientSet& coef, const TypeSpace& ts) {
  const Vector& xs = ts.values[s];
  const Vector& xt = ts.values[t];
  double u = coef.beta1 + xs.dot(coef.beta2) + (xs - xt).cwiseAbs().dot(coef.beta3) + p(t, s) * coef.beta4_recip;
  for (int w = 0; w < ts.size(); ++w) u += ts.limit_probs(w) * p(t, w) * coef.beta5(s, t, w);
  return u;
}

VMatrix limit_v(int own_type, const LinkProbMatrix& p, const CoefficientSet& coef, const TypeSpace& ts) {
  const int T = ts.size();
  Matrix v(T, T);
  for (int s = 0; s < T; ++s) {
    for (int t = s; t < T; ++t) {
      double value = p(s, t) * p(t, s) * coef.gamma1(own_type, s, t);
      double avg = 0.0;
      for (int u = 0; u < T; ++u) avg += ts.limit_probs(u) * p(s, u) * p(t, u);
      value += avg * coef.gamma2(own_type, s, t);
      v(s, t) = value;
      v(t, s) = value;
    }
  }
  return VMatrix::from(v);
}

double partial_expectation(double c, const ShockDistribution& dist) { return dist.partial_expectation(c); }

}  // namespace netform
