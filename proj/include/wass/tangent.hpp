#pragma once

#include <functional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "wass/geometry.hpp"
#include "wass/measures.hpp"

namespace wass {

/// A smooth test function with its analytic coordinate gradient.
struct TestFunction {
  std::string name;
  std::function<double(const Point&)> value;
  std::function<Point(const Point&)> gradient;
};

namespace detail {

/// Legendre value and derivative by the three-term recurrences.
inline std::pair<double, double> legendre(int n, double x) {
  if (n == 0) return {1.0, 0.0};
  double p_prev = 1.0, p = x;        // P_0, P_1
  double dp_prev = 0.0, dp = 1.0;    // P_0', P_1'
  for (int k = 1; k < n; ++k) {
    double p_next = ((2.0 * k + 1.0) * x * p - k * p_prev) / (k + 1.0);
    double dp_next = dp_prev + (2.0 * k + 1.0) * p;
    p_prev = p;
    p = p_next;
    dp_prev = dp;
    dp = dp_next;
  }
  return {p, dp};
}

inline void multi_indices_rec(int d, int degree, std::vector<int>& current,
                              std::vector<std::vector<int>>& out) {
  if (static_cast<int>(current.size()) == d - 1) {
    int used = 0;
    for (int c : current) used += c;
    current.push_back(degree - used);
    out.push_back(current);
    current.pop_back();
    return;
  }
  int used = 0;
  for (int c : current) used += c;
  for (int k = degree - used; k >= 0; --k) {
    current.push_back(k);
    multi_indices_rec(d, degree, current, out);
    current.pop_back();
  }
}

/// All alpha in N^d with |alpha| = degree, deterministic order.
inline std::vector<std::vector<int>> multi_indices(int d, int degree) {
  std::vector<std::vector<int>> out;
  std::vector<int> current;
  multi_indices_rec(d, degree, current, out);
  return out;
}

}  // namespace detail

/// Finite family of test functions whose gradients span the discrete
/// tangent space. Two families ship: monomials of total degree <= D on
/// R^d, and sin/cos(2 pi k.x) with |k|_inf <= K on the torus. Families
/// with the same parameters nest as the size parameter grows.
class GradientDictionary {
 public:
  /// Polynomials of total degree 1..max_degree, realized as tensor
  /// products of Legendre polynomials (same span as the monomials, far
  /// better conditioned Gram matrices).
  static GradientDictionary polynomial(int d, int max_degree) {
    require(d >= 1 && max_degree >= 1, "polynomial dictionary: need d >= 1 and degree >= 1");
    GradientDictionary dict;
    dict.dim_ = d;
    dict.spec_ = "poly:" + std::to_string(max_degree);
    for (int degree = 1; degree <= max_degree; ++degree) {
      for (const auto& alpha : detail::multi_indices(d, degree)) {
        std::ostringstream name;
        name << "L(";
        for (int i = 0; i < d; ++i) name << (i ? "," : "") << alpha[static_cast<std::size_t>(i)];
        name << ")";
        dict.funcs_.push_back(TestFunction{
            name.str(),
            [alpha, d](const Point& x) {
              double v = 1.0;
              for (int i = 0; i < d; ++i)
                v *= detail::legendre(alpha[static_cast<std::size_t>(i)], x[i]).first;
              return v;
            },
            [alpha, d](const Point& x) {
              Point g = Point::Zero(d);
              std::vector<std::pair<double, double>> pd(static_cast<std::size_t>(d));
              for (int i = 0; i < d; ++i)
                pd[static_cast<std::size_t>(i)] =
                    detail::legendre(alpha[static_cast<std::size_t>(i)], x[i]);
              for (int i = 0; i < d; ++i) {
                double v = pd[static_cast<std::size_t>(i)].second;
                for (int l = 0; l < d; ++l)
                  if (l != i) v *= pd[static_cast<std::size_t>(l)].first;
                g[i] = v;
              }
              return g;
            }});
      }
    }
    return dict;
  }

  /// sin(2 pi k.x) and cos(2 pi k.x) for nonzero k with |k|_inf <= max_freq,
  /// one representative per {k, -k} pair.
  static GradientDictionary trigonometric(int d, int max_freq) {
    require(d >= 1 && max_freq >= 1, "trigonometric dictionary: need d >= 1 and K >= 1");
    GradientDictionary dict;
    dict.dim_ = d;
    dict.spec_ = "trig:" + std::to_string(max_freq);
    std::vector<Eigen::VectorXd> freqs;
    std::vector<int> k(static_cast<std::size_t>(d), -max_freq);
    while (true) {
      int first_nonzero = 0;
      for (int i = 0; i < d; ++i)
        if (k[static_cast<std::size_t>(i)] != 0) {
          first_nonzero = k[static_cast<std::size_t>(i)];
          break;
        }
      if (first_nonzero > 0) {
        Eigen::VectorXd kv(d);
        for (int i = 0; i < d; ++i) kv[i] = k[static_cast<std::size_t>(i)];
        freqs.push_back(kv);
      }
      int pos = d - 1;
      while (pos >= 0 && k[static_cast<std::size_t>(pos)] == max_freq) {
        k[static_cast<std::size_t>(pos)] = -max_freq;
        --pos;
      }
      if (pos < 0) break;
      ++k[static_cast<std::size_t>(pos)];
    }
    // Sort by max frequency so dictionaries nest as K grows.
    std::stable_sort(freqs.begin(), freqs.end(), [](const auto& a, const auto& b) {
      return a.template lpNorm<Eigen::Infinity>() < b.template lpNorm<Eigen::Infinity>();
    });
    for (const auto& kv : freqs) {
      std::ostringstream base;
      base << "(2pi[";
      for (int i = 0; i < d; ++i) base << (i ? "," : "") << kv[i];
      base << "].x)";
      const double twopi = 2.0 * M_PI;
      dict.funcs_.push_back(TestFunction{
          "sin" + base.str(),
          [kv, twopi](const Point& x) { return std::sin(twopi * kv.dot(x)); },
          [kv, twopi](const Point& x) -> Point {
            return twopi * std::cos(twopi * kv.dot(x)) * kv;
          }});
      dict.funcs_.push_back(TestFunction{
          "cos" + base.str(),
          [kv, twopi](const Point& x) { return std::cos(twopi * kv.dot(x)); },
          [kv, twopi](const Point& x) -> Point {
            return -twopi * std::sin(twopi * kv.dot(x)) * kv;
          }});
    }
    return dict;
  }

  /// "poly:D" or "trig:K".
  static GradientDictionary parse(const std::string& spec, int d) {
    auto colon = spec.find(':');
    if (colon == std::string::npos)
      throw validation_error("dictionary spec must look like poly:3 or trig:4");
    std::string family = spec.substr(0, colon);
    int size = 0;
    try {
      size = std::stoi(spec.substr(colon + 1));
    } catch (const std::exception&) {
      throw validation_error("dictionary spec: bad size in '" + spec + "'");
    }
    if (family == "poly") return polynomial(d, size);
    if (family == "trig") return trigonometric(d, size);
    throw validation_error("dictionary spec: unknown family '" + family + "'");
  }

  int dim() const { return dim_; }
  int size() const { return static_cast<int>(funcs_.size()); }
  const TestFunction& operator[](int k) const { return funcs_[static_cast<std::size_t>(k)]; }
  const std::string& spec() const { return spec_; }
  const std::vector<TestFunction>& functions() const { return funcs_; }

 private:
  GradientDictionary() = default;
  std::vector<TestFunction> funcs_;
  int dim_ = 0;
  std::string spec_;
};

/// Riemannian gradient field of a test function over the atoms of mu:
/// grad^h phi = h^{-1} grad phi.
inline AtomVectorField gradient_field(const TestFunction& phi, const DiscreteMeasure& mu,
                                      const MetricField& h = MetricField::euclidean()) {
  Eigen::MatrixXd v(mu.size(), mu.dim());
  for (int i = 0; i < mu.size(); ++i) {
    Point x = mu.atom(i);
    v.row(i) = (h.inverse_at(x) * phi.gradient(x)).transpose();
  }
  return AtomVectorField(mu, v);
}

/// Orthogonal projection of L^2(mu, h) onto the span of the dictionary's
/// Riemannian gradients. The Gram matrix is eigendecomposed once; the
/// solve inverts eigenvalues above 1e-12 * max(1, trace) and truncates the
/// rest (atomic measures make dictionaries rank-deficient, e.g. a Dirac
/// sees only d independent gradients). Truncation keeps the operator an
/// exact orthogonal projection onto the numerically resolved span.
class TangentProjection {
 public:
  TangentProjection(DiscreteMeasure base, MetricField metric, GradientDictionary dictionary)
      : base_(std::move(base)), metric_(std::move(metric)), dict_(std::move(dictionary)) {
    if (dict_.dim() != base_.dim())
      throw validation_error("projection: dictionary dimension does not match measure");
    const int n = base_.size(), K = dict_.size();
    basis_.reserve(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) basis_.push_back(gradient_field(dict_[k], base_, metric_));

    gram_.resize(K, K);
    for (int k = 0; k < K; ++k)
      for (int l = k; l < K; ++l) {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
          s += base_.weight(i) *
               metric_.pair(base_.atom(i), basis_[static_cast<std::size_t>(k)].at(i),
                            basis_[static_cast<std::size_t>(l)].at(i));
        gram_(k, l) = s;
        gram_(l, k) = s;
      }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram_);
    if (eig.info() != Eigen::Success)
      throw internal_error("projection: Gram eigendecomposition failed");
    eigenvalues_ = eig.eigenvalues();
    eigenvectors_ = eig.eigenvectors();
    min_eigenvalue_ = eigenvalues_.minCoeff();
    cutoff_ = 1e-12 * std::max(1.0, gram_.trace());
    for (int k = 0; k < K; ++k)
      if (eigenvalues_[k] > cutoff_) ++rank_;
  }

  const DiscreteMeasure& base() const { return base_; }
  const MetricField& metric() const { return metric_; }
  const GradientDictionary& dictionary() const { return dict_; }
  double min_eigenvalue() const { return min_eigenvalue_; }
  int rank() const { return rank_; }

  /// Least-squares coefficients of v over the dictionary gradients
  /// (minimum-norm solution on the resolved span).
  Eigen::VectorXd coefficients(const AtomVectorField& v) const {
    if (!v.base.same_base(base_))
      throw validation_error("projection: field is not based on the projection's measure");
    const int K = dict_.size();
    Eigen::VectorXd rhs(K);
    for (int k = 0; k < K; ++k)
      rhs[k] = l2_inner(basis_[static_cast<std::size_t>(k)], v, metric_);
    Eigen::VectorXd y = eigenvectors_.transpose() * rhs;
    for (int k = 0; k < K; ++k) y[k] = (eigenvalues_[k] > cutoff_) ? y[k] / eigenvalues_[k] : 0.0;
    return eigenvectors_ * y;
  }

  AtomVectorField apply(const AtomVectorField& v) const {
    Eigen::VectorXd c = coefficients(v);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(base_.size(), base_.dim());
    for (int k = 0; k < dict_.size(); ++k)
      out += c[k] * basis_[static_cast<std::size_t>(k)].vectors;
    return AtomVectorField(base_, std::move(out));
  }

 private:
  DiscreteMeasure base_;
  MetricField metric_;
  GradientDictionary dict_;
  std::vector<AtomVectorField> basis_;
  Eigen::MatrixXd gram_;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd eigenvectors_;
  double min_eigenvalue_ = 0.0;
  double cutoff_ = 0.0;
  int rank_ = 0;
};

inline AtomVectorField project(const AtomVectorField& v, const TangentProjection& P) {
  return P.apply(v);
}

/// Distance from v to the dictionary span in L^2(mu, h); zero exactly when
/// v is a combination of dictionary gradients.
inline double tangency_residual(const AtomVectorField& v, const TangentProjection& P) {
  AtomVectorField proj = P.apply(v);
  return l2_norm(AtomVectorField(v.base, v.vectors - proj.vectors), P.metric());
}

/// Pullback of the formal Riemannian tensor through a differential sampled
/// at one measure: (F*H)_mu(v, w) = H_{F(mu)}(dF v, dF w).
inline double pullback_tensor(
    const std::function<AtomVectorField(const AtomVectorField&)>& differential_at_mu,
    const AtomVectorField& v, const AtomVectorField& w,
    const MetricField& target_metric = MetricField::euclidean()) {
  check_same_base(v, w);
  AtomVectorField dv = differential_at_mu(v);
  AtomVectorField dw = differential_at_mu(w);
  return l2_inner(dv, dw, target_metric);
}

struct IsometryReport {
  bool isometry = false;
  double max_deviation = 0.0;
};

/// Checks |(F*H)_mu(v, w) - H_mu(v, w)| <= tol over the given samples.
/// `fields` lists, per sample measure, the fields to pair (all ordered
/// pairs are tested).
inline IsometryReport is_formal_isometry(
    const std::function<AtomVectorField(const DiscreteMeasure&, const AtomVectorField&)>& F_diff,
    const std::vector<DiscreteMeasure>& sample_measures,
    const std::vector<std::vector<AtomVectorField>>& sample_fields,
    const MetricField& source_metric, const MetricField& target_metric, double tol) {
  if (sample_measures.size() != sample_fields.size())
    throw validation_error("is_formal_isometry: samples misaligned");
  IsometryReport report;
  for (std::size_t s = 0; s < sample_measures.size(); ++s) {
    const auto& fields = sample_fields[s];
    for (const auto& v : fields)
      for (const auto& w : fields) {
        double base = l2_inner(v, w, source_metric);
        double pulled = l2_inner(F_diff(sample_measures[s], v), F_diff(sample_measures[s], w),
                                 target_metric);
        report.max_deviation = std::max(report.max_deviation, std::abs(pulled - base));
      }
  }
  report.isometry = report.max_deviation <= tol;
  return report;
}

}  // namespace wass
