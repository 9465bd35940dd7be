#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "wass/geometry.hpp"
#include "wass/measures.hpp"
#include "wass/tangent.hpp"

namespace wass {

/// One fiber f^{-1}(y) of a pushforward: the source atoms mapping onto the
/// image atom, with their conditional weights mu^y.
struct Fiber {
  int image_index = 0;
  std::vector<int> source_indices;          // indices into the source measure
  std::vector<double> conditional_weights;  // nonnegative, sum to 1
};

/// Exact disintegration d mu(x) = d mu^y(x) d f#mu(y) of an atomic measure:
/// fibers are grouped by quantized image coordinates, conditional weights
/// are weight ratios within each fiber. Zero-weight source atoms are
/// dropped, so every fiber carries positive mass.
struct Disintegration {
  PointMap map;
  DiscreteMeasure source;  // original measure
  DiscreteMeasure image;   // pushforward of the support restriction
  std::vector<Fiber> fibers;
};

inline Disintegration disintegrate(const PointMap& f, const DiscreteMeasure& mu) {
  if (f.in_dim() != mu.dim())
    throw validation_error("disintegrate: map/measure dimension mismatch");
  const double q = quantum();
  std::vector<int> sup = mu.support_indices();
  if (sup.empty()) throw validation_error("disintegrate: empty measure");

  std::map<QuantKey, std::size_t> seen;
  std::vector<Fiber> fibers;
  std::vector<Point> image_atoms;
  std::vector<double> image_weights;
  for (int i : sup) {
    Point y = f(mu.atom(i));
    if (!all_finite(y))
      throw validation_error("disintegrate: non-finite image at atom " + std::to_string(i));
    QuantKey key = quantize_point(y, q);
    auto it = seen.find(key);
    std::size_t fi;
    if (it == seen.end()) {
      fi = fibers.size();
      seen.emplace(std::move(key), fi);
      fibers.push_back(Fiber{static_cast<int>(fi), {}, {}});
      image_atoms.push_back(y);
      image_weights.push_back(0.0);
    } else {
      fi = it->second;
    }
    fibers[fi].source_indices.push_back(i);
    fibers[fi].conditional_weights.push_back(mu.weight(i));
    image_weights[fi] += mu.weight(i);
  }
  for (std::size_t fi = 0; fi < fibers.size(); ++fi)
    for (double& w : fibers[fi].conditional_weights) w /= image_weights[fi];

  Eigen::MatrixXd A(static_cast<Eigen::Index>(image_atoms.size()), f.out_dim());
  Eigen::VectorXd w(static_cast<Eigen::Index>(image_atoms.size()));
  for (std::size_t r = 0; r < image_atoms.size(); ++r) {
    A.row(static_cast<Eigen::Index>(r)) = image_atoms[r].transpose();
    w[static_cast<Eigen::Index>(r)] = image_weights[r];
  }
  return Disintegration{f, mu, DiscreteMeasure::from_atoms(A, w), std::move(fibers)};
}

/// Fiber-averaged image field: at each image atom y,
/// (dF v)_y = sum over the fiber of mu^y(x) df_x(v_x).
/// For injective f this is just the pointwise df_x(v_x).
inline AtomVectorField pushforward_differential(const Disintegration& dis,
                                                const AtomVectorField& v) {
  if (!v.base.same_base(dis.source))
    throw validation_error("pushforward_differential: field base mismatch");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dis.image.size(), dis.image.dim());
  for (const Fiber& fiber : dis.fibers) {
    Point acc = Point::Zero(dis.image.dim());
    for (std::size_t s = 0; s < fiber.source_indices.size(); ++s) {
      int i = fiber.source_indices[s];
      acc += fiber.conditional_weights[s] * (dis.map.jacobian(dis.source.atom(i)) * v.at(i));
    }
    out.row(fiber.image_index) = acc.transpose();
  }
  return AtomVectorField(dis.image, std::move(out));
}

inline AtomVectorField pushforward_differential(const PointMap& f, const DiscreteMeasure& mu,
                                                const AtomVectorField& v) {
  return pushforward_differential(disintegrate(f, mu), v);
}

/// The differential proper: fiber average followed by the tangent-space
/// projection at the image measure.
inline AtomVectorField differential(const PointMap& f, const DiscreteMeasure& mu,
                                    const AtomVectorField& v, const GradientDictionary& dict,
                                    const MetricField& target_metric = MetricField::euclidean()) {
  Disintegration dis = disintegrate(f, mu);
  AtomVectorField hat = pushforward_differential(dis, v);
  TangentProjection P(dis.image, target_metric, dict);
  return P.apply(hat);
}

/// Operator norm of the jacobian as a map (T_x, h1) -> (T_f(x), h2).
inline double jacobian_operator_norm(const PointMap& f, const Point& x,
                                     const MetricField& h1 = MetricField::euclidean(),
                                     const MetricField& h2 = MetricField::euclidean()) {
  Eigen::MatrixXd J = f.jacobian(x);
  if (!h1.is_euclidean() || !h2.is_euclidean()) {
    double nu1 = h1.conformal_factor(x);
    double nu2 = h2.conformal_factor(f(x));
    J = (nu2 / nu1) * J;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
  return svd.singularValues().maxCoeff();
}

struct OperatorNormEstimate {
  double estimate = 0.0;  // max over sampled unit tangent fields of ||dF v||
  double bound = 0.0;     // ess sup over atoms of ||df_x||
};

/// Monte-Carlo lower estimate of ||dF_mu|| against the pointwise bound.
/// Samples are random dictionary combinations normalized in L^2(mu, h1).
inline OperatorNormEstimate operator_norm_estimate(
    const PointMap& f, const DiscreteMeasure& mu, const GradientDictionary& dict,
    int n_samples, std::uint64_t seed = 2024,
    const MetricField& h1 = MetricField::euclidean(),
    const MetricField& h2 = MetricField::euclidean()) {
  require(n_samples >= 1, "operator_norm_estimate: need at least one sample");
  Disintegration dis = disintegrate(f, mu);
  OperatorNormEstimate result;
  for (int i : mu.support_indices())
    result.bound = std::max(result.bound, jacobian_operator_norm(f, mu.atom(i), h1, h2));

  std::vector<AtomVectorField> basis;
  basis.reserve(static_cast<std::size_t>(dict.size()));
  for (int k = 0; k < dict.size(); ++k) basis.push_back(gradient_field(dict[k], mu, h1));

  Rng rng(seed);
  for (int s = 0; s < n_samples; ++s) {
    Eigen::MatrixXd vec = Eigen::MatrixXd::Zero(mu.size(), mu.dim());
    for (int k = 0; k < dict.size(); ++k) vec += rng.normal() * basis[static_cast<std::size_t>(k)].vectors;
    AtomVectorField v(mu, std::move(vec));
    double norm = l2_norm(v, h1);
    if (norm < 1e-12) continue;
    AtomVectorField unit(mu, v.vectors / norm);
    result.estimate =
        std::max(result.estimate, l2_norm(pushforward_differential(dis, unit), h2));
  }
  return result;
}

/// Uniform measure on the n x n cell-center grid of the flat torus [0,1)^2;
/// the atomic stand-in for the normalized volume measure.
inline DiscreteMeasure torus_grid_measure(int n) {
  require(n >= 2, "torus grid: need n >= 2");
  Eigen::MatrixXd atoms(n * n, 2);
  Eigen::VectorXd weights = Eigen::VectorXd::Constant(n * n, 1.0 / (n * n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      atoms(i * n + j, 0) = (i + 0.5) / n;
      atoms(i * n + j, 1) = (j + 0.5) / n;
    }
  return DiscreteMeasure::from_atoms(atoms, weights);
}

/// Non-tangency residual for the conformal identity map on the flat
/// 2-torus. With nu(x) = 1 + eps cos(2 pi x_1) and phi(x) = sin(2 pi x_2),
/// the field v = grad phi is tangent under the flat metric but its
/// distance to the h2 = nu^2 h1 tangent space stays bounded away from
/// zero: the 1-form nu^2 d phi is not closed (d(nu^2) wedge d phi != 0),
/// which obstructs approximation by gradients at every dictionary order.
/// Requires eps != 0; dimension is fixed to 2 because the wedge
/// obstruction needs at least two directions.
inline double counterexample_residual(int K, double eps, int grid_n) {
  require(K >= 1, "counterexample: dictionary order must be >= 1");
  if (eps == 0.0) throw validation_error("counterexample: nu must be nonconstant (eps != 0)");
  require(std::abs(eps) < 1.0, "counterexample: |eps| must be < 1 to keep nu positive");
  DiscreteMeasure mu = torus_grid_measure(grid_n);
  MetricField h2 = MetricField::conformal_cosine(eps);
  TestFunction phi{"sin(2pi x2)",
                   [](const Point& x) { return std::sin(2.0 * M_PI * x[1]); },
                   [](const Point& x) {
                     Point g(2);
                     g[0] = 0.0;
                     g[1] = 2.0 * M_PI * std::cos(2.0 * M_PI * x[1]);
                     return g;
                   }};
  AtomVectorField v = gradient_field(phi, mu, MetricField::euclidean());
  TangentProjection P(mu, h2, GradientDictionary::trigonometric(2, K));
  return tangency_residual(v, P);
}

/// The nu == 1 control: same construction with the flat metric on both
/// sides, where grad phi lies in the dictionary span and the residual
/// must vanish.
inline double counterexample_control_residual(int K, int grid_n) {
  require(K >= 1, "counterexample: dictionary order must be >= 1");
  DiscreteMeasure mu = torus_grid_measure(grid_n);
  TestFunction phi{"sin(2pi x2)",
                   [](const Point& x) { return std::sin(2.0 * M_PI * x[1]); },
                   [](const Point& x) {
                     Point g(2);
                     g[0] = 0.0;
                     g[1] = 2.0 * M_PI * std::cos(2.0 * M_PI * x[1]);
                     return g;
                   }};
  AtomVectorField v = gradient_field(phi, mu, MetricField::euclidean());
  TangentProjection P(mu, MetricField::euclidean(), GradientDictionary::trigonometric(2, K));
  return tangency_residual(v, P);
}

struct CounterexampleRow {
  int K;
  double residual;
};

inline std::vector<CounterexampleRow> counterexample_table(double eps, int max_K, int grid_n) {
  require(max_K >= 2, "counterexample: need K >= 2 for the table");
  std::vector<CounterexampleRow> rows;
  for (int K = 2; K <= max_K; ++K)
    rows.push_back(CounterexampleRow{K, counterexample_residual(K, eps, grid_n)});
  return rows;
}

}  // namespace wass
