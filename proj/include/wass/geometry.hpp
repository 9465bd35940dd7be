#pragma once

#include <functional>
#include <string>
#include <utility>

#include "wass/measures.hpp"

namespace wass {

/// Position-dependent symmetric positive-definite tensor h_x. Two flavors
/// ship: the Euclidean metric and conformal rescalings nu(x)^2 * I with
/// nu > 0 smooth. Evaluation is lazy per atom; SPD is asserted wherever
/// the tensor is actually evaluated.
class MetricField {
 public:
  static MetricField euclidean() {
    MetricField m;
    m.flavor_ = Flavor::euclidean;
    m.name_ = "euclidean";
    return m;
  }

  /// h_x = nu(x)^2 * I.
  static MetricField conformal(std::function<double(const Point&)> nu,
                               std::function<Point(const Point&)> grad_nu,
                               std::string name = "conformal") {
    MetricField m;
    m.flavor_ = Flavor::conformal;
    m.nu_ = std::move(nu);
    m.grad_nu_ = std::move(grad_nu);
    m.name_ = std::move(name);
    return m;
  }

  /// nu(x) = 1 + eps*cos(2*pi*x_1) on the torus; positive and nonconstant
  /// for 0 < |eps| < 1.
  static MetricField conformal_cosine(double eps) {
    require(std::abs(eps) < 1.0, "conformal_cosine: |eps| must be < 1 to keep nu positive");
    return conformal(
        [eps](const Point& x) { return 1.0 + eps * std::cos(2.0 * M_PI * x[0]); },
        [eps](const Point& x) {
          Point g = Point::Zero(x.size());
          g[0] = -2.0 * M_PI * eps * std::sin(2.0 * M_PI * x[0]);
          return g;
        },
        "conformal_cosine");
  }

  bool is_euclidean() const { return flavor_ == Flavor::euclidean; }
  const std::string& name() const { return name_; }

  double conformal_factor(const Point& x) const {
    if (flavor_ == Flavor::euclidean) return 1.0;
    double v = nu_(x);
    // SPD with smallest eigenvalue above 1e-12 means nu^2 > 1e-12 here.
    if (!std::isfinite(v) || !(v * v > 1e-12))
      throw validation_error("metric: tensor must stay positive definite, conformal factor " +
                             std::to_string(v));
    return v;
  }

  Point conformal_factor_gradient(const Point& x) const {
    if (flavor_ == Flavor::euclidean) return Point::Zero(x.size());
    return grad_nu_(x);
  }

  Eigen::MatrixXd at(const Point& x) const {
    const Eigen::Index d = x.size();
    if (flavor_ == Flavor::euclidean) return Eigen::MatrixXd::Identity(d, d);
    double nu = conformal_factor(x);
    return (nu * nu) * Eigen::MatrixXd::Identity(d, d);
  }

  Eigen::MatrixXd inverse_at(const Point& x) const {
    const Eigen::Index d = x.size();
    if (flavor_ == Flavor::euclidean) return Eigen::MatrixXd::Identity(d, d);
    double nu = conformal_factor(x);
    return (1.0 / (nu * nu)) * Eigen::MatrixXd::Identity(d, d);
  }

  /// Quadratic form h_x(v, w).
  double pair(const Point& x, const Point& v, const Point& w) const {
    if (flavor_ == Flavor::euclidean) return v.dot(w);
    double nu = conformal_factor(x);
    return nu * nu * v.dot(w);
  }

 private:
  MetricField() = default;
  enum class Flavor { euclidean, conformal };
  Flavor flavor_ = Flavor::euclidean;
  std::function<double(const Point&)> nu_;
  std::function<Point(const Point&)> grad_nu_;
  std::string name_;
};

/// One vector per atom of a base measure; the discrete stand-in for an
/// L^2(TM, mu) vector field.
struct AtomVectorField {
  DiscreteMeasure base;
  Eigen::MatrixXd vectors;  // size() x dim()

  AtomVectorField(DiscreteMeasure b, Eigen::MatrixXd v)
      : base(std::move(b)), vectors(std::move(v)) {
    if (vectors.rows() != base.size() || vectors.cols() != base.dim())
      throw validation_error("vector field: shape does not match base measure");
    if (!vectors.allFinite()) throw validation_error("vector field: non-finite entry");
  }

  static AtomVectorField zero(const DiscreteMeasure& mu) {
    return AtomVectorField(mu, Eigen::MatrixXd::Zero(mu.size(), mu.dim()));
  }

  static AtomVectorField constant(const DiscreteMeasure& mu, const Point& u) {
    Eigen::MatrixXd v(mu.size(), mu.dim());
    for (int i = 0; i < mu.size(); ++i) v.row(i) = u.transpose();
    return AtomVectorField(mu, v);
  }

  Point at(int i) const { return vectors.row(i).transpose(); }
};

inline void check_same_base(const AtomVectorField& v, const AtomVectorField& w) {
  if (!v.base.same_base(w.base))
    throw validation_error("vector fields: base measure mismatch");
}

/// Formal Riemannian tensor H_mu(v, w) = sum_i w_i * v_i^T h_{x_i} w_i.
inline double l2_inner(const AtomVectorField& v, const AtomVectorField& w,
                       const MetricField& h = MetricField::euclidean()) {
  check_same_base(v, w);
  double s = 0.0;
  for (int i = 0; i < v.base.size(); ++i)
    s += v.base.weight(i) * h.pair(v.base.atom(i), v.at(i), w.at(i));
  return s;
}

inline double l2_norm(const AtomVectorField& v,
                      const MetricField& h = MetricField::euclidean()) {
  return std::sqrt(std::max(0.0, l2_inner(v, v, h)));
}

}  // namespace wass
