#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wass/common.hpp"

namespace wass {

/// Ground space the atoms live on: Euclidean R^d or the flat torus [0,1)^d.
enum class Ground { euclidean, torus };

inline double ground_distance(const Point& a, const Point& b, Ground g = Ground::euclidean) {
  if (a.size() != b.size()) throw validation_error("ground_distance: dimension mismatch");
  if (g == Ground::euclidean) return (a - b).norm();
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    double d = std::abs(a[i] - b[i]);
    d -= std::floor(d);  // canonical representative in [0,1)
    d = std::min(d, 1.0 - d);
    s += d * d;
  }
  return std::sqrt(s);
}

/// Finitely supported probability measure: atom coordinates (rows) plus
/// weights. Construction merges atoms that coincide on the quantization
/// grid (first occurrence keeps its raw coordinates, weights are summed
/// in encounter order) and validates weight nonnegativity and total mass.
/// Zero-weight atoms may be stored; `support` and the solvers drop them.
/// Immutable after construction.
class DiscreteMeasure {
 public:
  static DiscreteMeasure from_atoms(const Eigen::MatrixXd& atoms, const Eigen::VectorXd& weights) {
    if (atoms.rows() != weights.size())
      throw validation_error("measure: atom/weight count mismatch");
    if (atoms.rows() == 0) throw validation_error("measure: empty");
    if (!atoms.allFinite()) throw validation_error("measure: non-finite atom coordinate");
    double total = 0.0;
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
      if (!std::isfinite(weights[i]) || weights[i] < 0.0)
        throw validation_error("measure: weights must be nonnegative, got " +
                               std::to_string(weights[i]) + " at atom " + std::to_string(i));
      total += weights[i];
    }
    if (std::abs(total - 1.0) > 1e-12)
      throw validation_error("measure: weights must sum to 1 within 1e-12, got " +
                             std::to_string(total));

    const double q = quantum();
    std::map<QuantKey, Eigen::Index> seen;
    std::vector<Eigen::Index> order;        // merged atom -> first source row
    std::vector<double> merged_w;
    std::vector<Eigen::Index> target(static_cast<std::size_t>(atoms.rows()));
    for (Eigen::Index i = 0; i < atoms.rows(); ++i) {
      QuantKey key = quantize_point(atoms.row(i).transpose(), q);
      auto it = seen.find(key);
      if (it == seen.end()) {
        seen.emplace(std::move(key), static_cast<Eigen::Index>(order.size()));
        target[static_cast<std::size_t>(i)] = static_cast<Eigen::Index>(order.size());
        order.push_back(i);
        merged_w.push_back(weights[i]);
      } else {
        target[static_cast<std::size_t>(i)] = it->second;
        merged_w[static_cast<std::size_t>(it->second)] += weights[i];
      }
    }

    DiscreteMeasure mu;
    mu.atoms_.resize(static_cast<Eigen::Index>(order.size()), atoms.cols());
    mu.weights_.resize(static_cast<Eigen::Index>(order.size()));
    for (std::size_t k = 0; k < order.size(); ++k) {
      mu.atoms_.row(static_cast<Eigen::Index>(k)) = atoms.row(order[k]);
      mu.weights_[static_cast<Eigen::Index>(k)] = merged_w[k];
    }
    mu.keys_.reserve(order.size());
    for (Eigen::Index i = 0; i < mu.atoms_.rows(); ++i)
      mu.keys_.push_back(quantize_point(mu.atoms_.row(i).transpose(), q));
    return mu;
  }

  /// Convenience for 1-d measures.
  static DiscreteMeasure on_line(const std::vector<double>& xs, const std::vector<double>& ws) {
    Eigen::MatrixXd a(static_cast<Eigen::Index>(xs.size()), 1);
    Eigen::VectorXd w(static_cast<Eigen::Index>(ws.size()));
    for (std::size_t i = 0; i < xs.size(); ++i) a(static_cast<Eigen::Index>(i), 0) = xs[i];
    for (std::size_t i = 0; i < ws.size(); ++i) w[static_cast<Eigen::Index>(i)] = ws[i];
    return from_atoms(a, w);
  }

  static DiscreteMeasure dirac(const Point& x) {
    Eigen::MatrixXd a(1, x.size());
    a.row(0) = x.transpose();
    Eigen::VectorXd w(1);
    w[0] = 1.0;
    return from_atoms(a, w);
  }

  int dim() const { return static_cast<int>(atoms_.cols()); }
  int size() const { return static_cast<int>(atoms_.rows()); }
  const Eigen::MatrixXd& atoms() const { return atoms_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  Point atom(int i) const { return atoms_.row(i).transpose(); }
  double weight(int i) const { return weights_[i]; }
  const std::vector<QuantKey>& keys() const { return keys_; }

  std::vector<int> support_indices() const {
    std::vector<int> idx;
    for (int i = 0; i < size(); ++i)
      if (weights_[i] > 0.0) idx.push_back(i);
    return idx;
  }

  bool same_base(const DiscreteMeasure& other) const {
    return size() == other.size() && keys_ == other.keys_;
  }

 private:
  DiscreteMeasure() = default;
  Eigen::MatrixXd atoms_;
  Eigen::VectorXd weights_;
  std::vector<QuantKey> keys_;
};

/// Atoms carrying positive weight, in storage order.
inline std::vector<Point> support(const DiscreteMeasure& mu) {
  std::vector<Point> pts;
  for (int i : mu.support_indices()) pts.push_back(mu.atom(i));
  return pts;
}

/// The measure with zero-weight atoms removed.
inline DiscreteMeasure support_restriction(const DiscreteMeasure& mu) {
  std::vector<int> idx = mu.support_indices();
  if (static_cast<int>(idx.size()) == mu.size()) return mu;
  if (idx.empty()) throw validation_error("measure: empty support");
  Eigen::MatrixXd atoms(static_cast<Eigen::Index>(idx.size()), mu.dim());
  Eigen::VectorXd weights(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    atoms.row(static_cast<Eigen::Index>(k)) = mu.atoms().row(idx[k]);
    weights[static_cast<Eigen::Index>(k)] = mu.weight(idx[k]);
  }
  return DiscreteMeasure::from_atoms(atoms, weights);
}

/// A smooth map f: R^d -> R^{d'} with an analytic Jacobian, plus declared
/// structural properties (properness, isometry) that hold by construction
/// for the shipped families and are only spot-checked at touched atoms.
class PointMap {
 public:
  using EvalFn = std::function<Point(const Point&)>;
  using JacFn = std::function<Eigen::MatrixXd(const Point&)>;

  PointMap(int in_dim, int out_dim, EvalFn f, JacFn jac, std::string name)
      : in_dim_(in_dim), out_dim_(out_dim), f_(std::move(f)), jac_(std::move(jac)),
        name_(std::move(name)) {}

  static PointMap identity(int d) {
    PointMap m(d, d, [](const Point& x) { return x; },
               [d](const Point&) { return Eigen::MatrixXd::Identity(d, d); }, "identity");
    m.declared_isometry_ = true;
    m.declared_proper_ = true;
    m.set_inverse_factory([d] { return identity(d); });
    return m;
  }

  static PointMap constant(const Point& c, int in_dim) {
    const int out = static_cast<int>(c.size());
    // preimages of compact sets are the whole space: not proper
    return PointMap(in_dim, out, [c](const Point&) { return c; },
                    [out, in_dim](const Point&) { return Eigen::MatrixXd::Zero(out, in_dim); },
                    "constant");
  }

  static PointMap affine(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                         const std::string& name = "affine") {
    if (A.rows() != b.size()) throw validation_error("affine map: A/b shape mismatch");
    PointMap m(static_cast<int>(A.cols()), static_cast<int>(A.rows()),
               [A, b](const Point& x) -> Point { return A * x + b; },
               [A](const Point&) { return A; }, name);
    if (A.rows() == A.cols()) {
      Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
      if (lu.isInvertible()) {
        m.declared_proper_ = true;
        Eigen::MatrixXd Ainv = lu.inverse();
        Eigen::VectorXd binv = -Ainv * b;
        m.set_inverse_factory([Ainv, binv, name] { return affine(Ainv, binv, name + "^-1"); });
      }
      if (((A.transpose() * A) - Eigen::MatrixXd::Identity(A.cols(), A.cols())).norm() < 1e-12)
        m.declared_isometry_ = true;
    }
    return m;
  }

  static PointMap translation(const Eigen::VectorXd& u) {
    const int d = static_cast<int>(u.size());
    PointMap m = affine(Eigen::MatrixXd::Identity(d, d), u, "translation");
    m.declared_isometry_ = true;
    return m;
  }

  static PointMap scaling(double s, int d) {
    return affine(s * Eigen::MatrixXd::Identity(d, d), Eigen::VectorXd::Zero(d), "scaling");
  }

  static PointMap rotation2d(double theta) {
    Eigen::MatrixXd R(2, 2);
    R << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    PointMap m = affine(R, Eigen::VectorXd::Zero(2), "rotation");
    m.declared_isometry_ = true;
    return m;
  }

  /// Coordinate projection x -> x[axis], as a 1-row affine map.
  static PointMap coordinate(int d, int axis) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(1, d);
    A(0, axis) = 1.0;
    return affine(A, Eigen::VectorXd::Zero(1), "coordinate");
  }

  /// f(x) = x^2 on R.
  static PointMap square1d() {
    PointMap m(
        1, 1,
        [](const Point& x) {
          Point y(1);
          y[0] = x[0] * x[0];
          return y;
        },
        [](const Point& x) {
          Eigen::MatrixXd j(1, 1);
          j(0, 0) = 2.0 * x[0];
          return j;
        },
        "square");
    m.declared_proper_ = true;
    return m;
  }

  /// Functional composition g after f. Evaluation nests the two maps so
  /// that pushforward(g∘f) and pushforward(g)∘pushforward(f) agree
  /// bit-for-bit on every atom.
  static PointMap compose(const PointMap& g, const PointMap& f) {
    if (g.in_dim() != f.out_dim()) throw validation_error("compose: dimension mismatch");
    PointMap m(f.in_dim(), g.out_dim(),
               [g, f](const Point& x) { return g(f(x)); },
               [g, f](const Point& x) -> Eigen::MatrixXd {
                 Point y = f(x);
                 return g.jacobian(y) * f.jacobian(x);
               },
               g.name() + "∘" + f.name());
    m.declared_isometry_ = g.declared_isometry_ && f.declared_isometry_;
    m.declared_proper_ = g.declared_proper_ && f.declared_proper_;
    if (g.has_inverse() && f.has_inverse()) {
      PointMap gi = g.inverse(), fi = f.inverse();
      m.set_inverse_factory([gi, fi] { return compose(fi, gi); });
    }
    return m;
  }

  Point operator()(const Point& x) const {
    if (x.size() != in_dim_) throw validation_error("map " + name_ + ": dimension mismatch");
    Point y = f_(x);
    return y;
  }

  Eigen::MatrixXd jacobian(const Point& x) const {
    Eigen::MatrixXd j = jac_(x);
    if (!j.allFinite())
      throw validation_error("map " + name_ + ": non-finite jacobian");
    return j;
  }

  int in_dim() const { return in_dim_; }
  int out_dim() const { return out_dim_; }
  const std::string& name() const { return name_; }
  bool declared_isometry() const { return declared_isometry_; }
  void declare_isometry(bool v) { declared_isometry_ = v; }
  /// Properness (preimages of compacts are compact) is recorded per
  /// constructor, never verified globally.
  bool declared_proper() const { return declared_proper_; }

  bool has_inverse() const { return static_cast<bool>(inverse_factory_); }
  PointMap inverse() const {
    if (!inverse_factory_) throw validation_error("map " + name_ + ": no inverse available");
    return (*inverse_factory_)();
  }

 private:
  void set_inverse_factory(std::function<PointMap()> f) {
    inverse_factory_ = std::make_shared<std::function<PointMap()>>(std::move(f));
  }

  int in_dim_, out_dim_;
  EvalFn f_;
  JacFn jac_;
  std::string name_;
  bool declared_isometry_ = false;
  bool declared_proper_ = false;
  std::shared_ptr<std::function<PointMap()>> inverse_factory_;
};

/// Image measure f#mu. Images landing on the same quantized point are
/// merged, weights summed in source order; total mass is preserved exactly.
inline DiscreteMeasure pushforward(const PointMap& f, const DiscreteMeasure& mu) {
  if (f.in_dim() != mu.dim())
    throw validation_error("pushforward: map expects dimension " + std::to_string(f.in_dim()) +
                           ", measure has " + std::to_string(mu.dim()));
  Eigen::MatrixXd images(mu.size(), f.out_dim());
  for (int i = 0; i < mu.size(); ++i) {
    Point y = f(mu.atom(i));
    if (!all_finite(y))
      throw validation_error("pushforward: non-finite image at atom " + std::to_string(i));
    images.row(i) = y.transpose();
  }
  return DiscreteMeasure::from_atoms(images, mu.weights());
}

}  // namespace wass
