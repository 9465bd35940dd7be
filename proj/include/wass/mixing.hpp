#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "wass/curves.hpp"
#include "wass/geometry.hpp"
#include "wass/measures.hpp"
#include "wass/tangent.hpp"

namespace wass {

enum class MixPart { mu_only, nu_only, shared };

/// Lebesgue decomposition of the pair (mu, nu) underlying the convex mix
/// alpha = lambda mu + (1-lambda) nu. Atoms of alpha split into the
/// mu-only part A, the nu-only part B and the shared part C; on C, beta
/// carries mu's weights and rho = nu-weight / mu-weight is the
/// Radon-Nikodym ratio (strictly positive, since shared atoms have
/// positive mass on both sides).
struct MixDecomposition {
  double lambda;
  DiscreteMeasure mu;
  DiscreteMeasure nu;
  DiscreteMeasure alpha;

  MixDecomposition(double l, DiscreteMeasure m, DiscreteMeasure n, DiscreteMeasure a)
      : lambda(l), mu(std::move(m)), nu(std::move(n)), alpha(std::move(a)) {}
  std::vector<MixPart> part;  // per alpha atom
  std::vector<int> mu_index;  // index into mu's atoms, -1 on B
  std::vector<int> nu_index;  // index into nu's atoms, -1 on A
  std::vector<double> beta;   // mu-weight on C, 0 elsewhere
  std::vector<double> rho;    // nu/mu weight ratio on C, 0 elsewhere

  std::vector<int> part_indices(MixPart p) const {
    std::vector<int> idx;
    for (int i = 0; i < alpha.size(); ++i)
      if (part[static_cast<std::size_t>(i)] == p) idx.push_back(i);
    return idx;
  }
};

/// Convex mixing lambda mu + (1-lambda) nu. Shared atoms (after
/// quantization) accumulate both contributions; atoms whose mixed weight
/// vanishes (lambda at 0 or 1) are dropped.
inline DiscreteMeasure mix_measures(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                    double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw validation_error("mix: lambda outside [0,1]");
  if (mu.dim() != nu.dim())
    throw validation_error("mix: measures live in different dimensions");
  std::vector<Point> atoms;
  std::vector<double> weights;
  std::map<QuantKey, std::size_t> seen;
  const double q = quantum();
  auto add = [&](const Point& x, double w) {
    QuantKey key = quantize_point(x, q);
    auto it = seen.find(key);
    if (it == seen.end()) {
      seen.emplace(std::move(key), atoms.size());
      atoms.push_back(x);
      weights.push_back(w);
    } else {
      weights[it->second] += w;
    }
  };
  for (int i : mu.support_indices()) add(mu.atom(i), lambda * mu.weight(i));
  for (int j : nu.support_indices()) add(nu.atom(j), (1.0 - lambda) * nu.weight(j));

  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < atoms.size(); ++r)
    if (weights[r] > 0.0) keep.push_back(r);
  if (keep.empty()) throw validation_error("mix: empty result");
  Eigen::MatrixXd A(static_cast<Eigen::Index>(keep.size()), mu.dim());
  Eigen::VectorXd w(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t r = 0; r < keep.size(); ++r) {
    A.row(static_cast<Eigen::Index>(r)) = atoms[keep[r]].transpose();
    w[static_cast<Eigen::Index>(r)] = weights[keep[r]];
  }
  return DiscreteMeasure::from_atoms(A, w);
}

inline MixDecomposition decompose(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                  double lambda) {
  MixDecomposition dec(lambda, mu, nu, mix_measures(mu, nu, lambda));

  std::map<QuantKey, int> mu_at, nu_at;
  for (int i : mu.support_indices()) mu_at.emplace(mu.keys()[static_cast<std::size_t>(i)], i);
  for (int j : nu.support_indices()) nu_at.emplace(nu.keys()[static_cast<std::size_t>(j)], j);

  const int n = dec.alpha.size();
  dec.part.resize(static_cast<std::size_t>(n), MixPart::shared);
  dec.mu_index.assign(static_cast<std::size_t>(n), -1);
  dec.nu_index.assign(static_cast<std::size_t>(n), -1);
  dec.beta.assign(static_cast<std::size_t>(n), 0.0);
  dec.rho.assign(static_cast<std::size_t>(n), 0.0);
  for (int r = 0; r < n; ++r) {
    const QuantKey& key = dec.alpha.keys()[static_cast<std::size_t>(r)];
    auto mi = mu_at.find(key);
    auto ni = nu_at.find(key);
    if (mi != mu_at.end() && ni != nu_at.end()) {
      dec.part[static_cast<std::size_t>(r)] = MixPart::shared;
      dec.mu_index[static_cast<std::size_t>(r)] = mi->second;
      dec.nu_index[static_cast<std::size_t>(r)] = ni->second;
      dec.beta[static_cast<std::size_t>(r)] = mu.weight(mi->second);
      dec.rho[static_cast<std::size_t>(r)] = nu.weight(ni->second) / mu.weight(mi->second);
      if (!(dec.rho[static_cast<std::size_t>(r)] > 0.0))
        throw internal_error("decompose: rho must be positive on shared atoms");
    } else if (mi != mu_at.end()) {
      dec.part[static_cast<std::size_t>(r)] = MixPart::mu_only;
      dec.mu_index[static_cast<std::size_t>(r)] = mi->second;
    } else if (ni != nu_at.end()) {
      dec.part[static_cast<std::size_t>(r)] = MixPart::nu_only;
      dec.nu_index[static_cast<std::size_t>(r)] = ni->second;
    } else {
      throw internal_error("decompose: alpha atom matches neither marginal");
    }
  }
  return dec;
}

/// Canonical accompanying field for the mix: v on the mu-only part, w on
/// the nu-only part, and the rho-weighted convex combination
/// (lambda v + rho (1-lambda) w) / (lambda + (1-lambda) rho) on shared
/// atoms. The denominator is positive because rho is.
inline AtomVectorField canonical_field(const MixDecomposition& dec, const AtomVectorField& v,
                                       const AtomVectorField& w) {
  if (!v.base.same_base(dec.mu)) throw validation_error("canonical_field: v must be based on mu");
  if (!w.base.same_base(dec.nu)) throw validation_error("canonical_field: w must be based on nu");
  const double lambda = dec.lambda;
  Eigen::MatrixXd out(dec.alpha.size(), dec.alpha.dim());
  for (int r = 0; r < dec.alpha.size(); ++r) {
    switch (dec.part[static_cast<std::size_t>(r)]) {
      case MixPart::mu_only:
        out.row(r) = v.vectors.row(dec.mu_index[static_cast<std::size_t>(r)]);
        break;
      case MixPart::nu_only:
        out.row(r) = w.vectors.row(dec.nu_index[static_cast<std::size_t>(r)]);
        break;
      case MixPart::shared: {
        double rho = dec.rho[static_cast<std::size_t>(r)];
        double denom = lambda + (1.0 - lambda) * rho;
        out.row(r) = (lambda * v.vectors.row(dec.mu_index[static_cast<std::size_t>(r)]) +
                      rho * (1.0 - lambda) * w.vectors.row(dec.nu_index[static_cast<std::size_t>(r)])) /
                     denom;
        break;
      }
    }
  }
  return AtomVectorField(dec.alpha, std::move(out));
}

/// Convex mix of two curves on a shared time grid, with the per-slice
/// decompositions.
struct MixedCurve {
  double lambda = 0.0;
  MeasureCurve alpha;
  std::vector<MixDecomposition> slices;  // one per time sample
};

inline MixedCurve mix_curves(const MeasureCurve& mu_curve, const MeasureCurve& nu_curve,
                             double lambda) {
  if (mu_curve.times != nu_curve.times)
    throw validation_error("mix_curves: curves must share the time grid");
  std::vector<DiscreteMeasure> alphas;
  std::vector<MixDecomposition> slices;
  for (std::size_t j = 0; j < mu_curve.times.size(); ++j) {
    slices.push_back(decompose(mu_curve.measures[j], nu_curve.measures[j], lambda));
    alphas.push_back(slices.back().alpha);
  }
  return MixedCurve{lambda, MeasureCurve(mu_curve.times, std::move(alphas)), std::move(slices)};
}

/// Differential of the convex mix of two maps along a curve: per interior
/// slice, the canonical field built from the image tangent fields, then
/// projected onto the tangent space at the mixed measure. The caller
/// supplies the image curves mu_t = F1(gamma_t), nu_t = F2(gamma_t) and
/// their tangent fields dF1(v_t), dF2(v_t).
inline std::pair<MixedCurve, VelocityCurve> mixed_differential(
    const MeasureCurve& mu_curve, const VelocityCurve& v_fields, const MeasureCurve& nu_curve,
    const VelocityCurve& w_fields, double lambda, const GradientDictionary& dict,
    const MetricField& metric = MetricField::euclidean()) {
  check_aligned(mu_curve, v_fields);
  check_aligned(nu_curve, w_fields);
  MixedCurve mixed = mix_curves(mu_curve, nu_curve, lambda);
  std::vector<AtomVectorField> fields;
  for (int j = 1; j + 1 < mixed.alpha.samples(); ++j) {
    const MixDecomposition& dec = mixed.slices[static_cast<std::size_t>(j)];
    AtomVectorField u = canonical_field(dec, v_fields.fields[static_cast<std::size_t>(j - 1)],
                                        w_fields.fields[static_cast<std::size_t>(j - 1)]);
    TangentProjection P(dec.alpha, metric, dict);
    fields.push_back(P.apply(u));
  }
  return {std::move(mixed), VelocityCurve{std::move(fields)}};
}

}  // namespace wass
