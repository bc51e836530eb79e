#pragma once

#include "netform/sym_eigen.hpp"

#include <Eigen/Dense>

#include <random>
#include <string>
#include <vector>

namespace netform {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// The T discrete covariate values and the i.i.d. type distribution used by
// the limiting game.
struct TypeSpace {
  std::vector<Vector> values;
  Vector limit_probs;

  int size() const { return static_cast<int>(values.size()); }
  int dim() const { return values.empty() ? 0 : static_cast<int>(values.front().size()); }
  void validate() const;

  // Scalar covariate with the given support and probabilities.
  static TypeSpace scalar(const std::vector<double>& support, const std::vector<double>& probs);
};

// A fixed characteristic profile: the type of each agent and the per-type
// tallies.  Type indices are zero based.
struct Population {
  std::vector<int> type_of;
  std::vector<int> counts;

  int n() const { return static_cast<int>(type_of.size()); }
  int num_types() const { return static_cast<int>(counts.size()); }
  // Number of potential partners of type t for an agent of type own.
  int available(int own, int t) const { return counts[t] - (own == t ? 1 : 0); }
  void validate() const;

  static Population from_types(std::vector<int> type_of, int num_types);
};

// T x T x T table indexed by (type of i, type of j, type of k).  Either a
// single broadcast constant or a full table.
class TypeTable {
 public:
  TypeTable() = default;
  static TypeTable constant(int T, double value);
  static TypeTable full(int T, std::vector<double> entries);

  double operator()(int t, int s, int u) const {
    return is_constant_ ? value_ : data_[(static_cast<std::size_t>(t) * T_ + s) * T_ + u];
  }
  int types() const { return T_; }
  bool is_constant() const { return is_constant_; }
  double constant_value() const { return value_; }
  // True when entry (t, s, u) equals (t, u, s) for all indices.
  bool symmetric_in_last_two(double tol = 0.0) const;
  bool all_zero() const;
  TypeTable with_constant(double value) const { return constant(T_, value); }

 private:
  int T_ = 0;
  bool is_constant_ = true;
  double value_ = 0.0;
  std::vector<double> data_;
};

// Which utility parameters are estimated.  Table-valued coefficients can only
// be free in constant (broadcast) form.
struct FreeMask {
  bool beta1 = false;
  std::vector<bool> beta2;
  std::vector<bool> beta3;
  bool beta4_recip = false;
  bool beta5 = false;
  bool gamma1 = false;
  bool gamma2 = false;
};

struct CoefficientSet {
  double beta1 = 0.0;
  Vector beta2;
  Vector beta3;
  double beta4_recip = 0.0;
  TypeTable beta5;
  TypeTable gamma1;
  TypeTable gamma2;
  FreeMask free;

  static CoefficientSet zeros(int T, int dx);
  void validate(int T, int dx) const;

  int num_free() const;
  std::vector<std::string> free_names() const;
  Vector pack_free() const;
  CoefficientSet with_free(const Vector& theta) const;
  bool has_friends_in_common() const { return !gamma1.all_zero() || !gamma2.all_zero(); }
};

// Distribution of the private link shocks.  The scale is held fixed.
struct ShockDistribution {
  enum class Family { StandardNormal, Logistic };
  Family family = Family::StandardNormal;
  double scale = 1.0;

  double cdf(double x) const;
  double pdf(double x) const;
  // E[(c - eps)_+]; its derivative in c is cdf(c).
  double partial_expectation(double c) const;

  template <typename Engine>
  double sample(Engine& engine) const {
    if (family == Family::StandardNormal) {
      std::normal_distribution<double> normal(0.0, scale);
      return normal(engine);
    }
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double u = unif(engine);
    while (u <= 0.0) u = unif(engine);
    return scale * std::log(u / (1.0 - u));
  }

  std::string name() const;
  static ShockDistribution from_name(const std::string& name, double scale = 1.0);
};

// p(s, t): probability that a type-s agent links to a type-t agent.
struct LinkProbMatrix {
  Matrix p;

  LinkProbMatrix() = default;
  explicit LinkProbMatrix(Matrix values) : p(std::move(values)) {}
  static LinkProbMatrix constant(int T, double value) { return LinkProbMatrix(Matrix::Constant(T, T, value)); }

  int types() const { return static_cast<int>(p.rows()); }
  double operator()(int s, int t) const { return p(s, t); }
  void validate() const;
};

// Friends-in-common matrix with its spectral decomposition attached.
struct VMatrix {
  Matrix v;
  Vector eigenvalues;
  Matrix eigenvectors;
  std::vector<bool> zero;

  static VMatrix from(const Matrix& v);
  int types() const { return static_cast<int>(v.rows()); }
  bool has_negative_diagonal() const { return (v.diagonal().array() < 0.0).any(); }
};

SymEigen<double> eigendecompose_sym(const Matrix& m);

// V_i for an agent of type own_type.  Representatives of types s and t are
// removed from the gamma2 average along with i itself.
VMatrix v_matrix(int own_type, const Population& pop, const LinkProbMatrix& p, const CoefficientSet& coef);

// Expected utility U_nij of a type-s agent linking to a type-t agent,
// including the -(1/(n-2)) Z_j' V Z_j correction.
double base_utility_exp(int own_type, int target_type, const Population& pop, const LinkProbMatrix& p,
                        const CoefficientSet& coef, const TypeSpace& ts, const VMatrix& v);

// Agent-indexed convenience form; i and j must differ.
double base_utility_exp_agents(int i, int j, const Population& pop, const LinkProbMatrix& p,
                               const CoefficientSet& coef, const TypeSpace& ts, const VMatrix& v);

double limit_utility(int s, int t, const LinkProbMatrix& p, const CoefficientSet& coef, const TypeSpace& ts);
VMatrix limit_v(int own_type, const LinkProbMatrix& p, const CoefficientSet& coef, const TypeSpace& ts);

double partial_expectation(double c, const ShockDistribution& dist);

}  // namespace netform
