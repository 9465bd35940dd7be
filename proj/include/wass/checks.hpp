#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "wass/curves.hpp"
#include "wass/geometry.hpp"
#include "wass/measures.hpp"
#include "wass/mixing.hpp"
#include "wass/ot.hpp"
#include "wass/pushdiff.hpp"
#include "wass/tangent.hpp"

namespace wass {

/// Outcome of one property suite of the theorem battery.
struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

namespace checks_detail {

inline std::string sci(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

/// Random measure with pairwise-separated atoms and weights bounded away
/// from zero; keeps Gram matrices and transport bases well conditioned.
inline DiscreteMeasure random_measure(Rng& rng, int d, int n, double lo, double hi,
                                      double min_gap) {
  Eigen::MatrixXd atoms(n, d);
  int placed = 0, guard = 0;
  while (placed < n) {
    if (++guard > 20000) throw internal_error("random_measure: cannot satisfy separation");
    Point x = rng.point(d, lo, hi);
    bool ok = true;
    for (int i = 0; i < placed && ok; ++i)
      ok = (atoms.row(i).transpose() - x).norm() >= min_gap;
    if (!ok) continue;
    atoms.row(placed++) = x.transpose();
  }
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) w[i] = rng.uniform(0.2, 1.0);
  w /= w.sum();
  return DiscreteMeasure::from_atoms(atoms, w);
}

inline Eigen::MatrixXd random_orthogonal(Rng& rng, int d) {
  Eigen::MatrixXd G(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) G(i, j) = rng.normal();
  return Eigen::HouseholderQR<Eigen::MatrixXd>(G).householderQ();
}

inline PointMap random_invertible_affine(Rng& rng, int d, double smin, double smax) {
  Eigen::MatrixXd Q1 = random_orthogonal(rng, d), Q2 = random_orthogonal(rng, d);
  Eigen::VectorXd s(d);
  for (int i = 0; i < d; ++i) s[i] = rng.uniform(smin, smax);
  return PointMap::affine(Q1 * s.asDiagonal() * Q2, rng.point(d, -0.5, 0.5));
}

inline AtomVectorField random_field(Rng& rng, const DiscreteMeasure& mu, double scale) {
  Eigen::MatrixXd v(mu.size(), mu.dim());
  for (int i = 0; i < mu.size(); ++i)
    for (int c = 0; c < mu.dim(); ++c) v(i, c) = scale * rng.normal();
  return AtomVectorField(mu, v);
}

inline DiscreteMeasure wrap_to_torus(const DiscreteMeasure& mu) {
  Eigen::MatrixXd atoms = mu.atoms().unaryExpr([](double x) { return x - std::floor(x); });
  return DiscreteMeasure::from_atoms(atoms, mu.weights());
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace checks_detail

/// 1. Exact-solver oracle equivalence on 200 random small instances.
inline CheckResult check_ot_oracle(std::uint64_t seed) {
  using namespace checks_detail;
  Stopwatch clock;
  Rng rng(seed ^ 0x01u);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    int d = 1 + rng.index(3);
    int m = 1 + rng.index(4), n = 1 + rng.index(4);
    double p = (trial % 2 == 0) ? 1.0 : 2.0;
    Ground ground = (trial % 4 == 3) ? Ground::torus : Ground::euclidean;
    double lo = ground == Ground::torus ? 0.0 : -2.0;
    double hi = ground == Ground::torus ? 1.0 : 2.0;
    DiscreteMeasure mu = random_measure(rng, d, m, lo, hi, 1e-3);
    DiscreteMeasure nu = random_measure(rng, d, n, lo, hi, 1e-3);
    OtResult lp = optimal_plan(mu, nu, p, ground);
    OtResult bf = brute_force_plan(mu, nu, p, ground);
    worst = std::max(worst, std::abs(lp.cost - bf.cost));
  }
  double elapsed = clock.seconds();
  bool pass = worst <= 1e-9 && elapsed < 10.0;
  return {"ot-oracle", pass,
          "max |simplex - enumeration| = " + sci(worst) + " over 200 instances (tol 1e-9), " +
              sci(elapsed) + " s"};
}

/// 2. Constant-speed property of displacement interpolation.
inline CheckResult check_geodesic_speed(std::uint64_t seed) {
  using namespace checks_detail;
  Stopwatch clock;
  Rng rng(seed ^ 0x02u);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    int d = 1 + rng.index(3);
    int m = 1 + rng.index(4), n = 1 + rng.index(4);
    DiscreteMeasure mu = random_measure(rng, d, m, -1.0, 1.0, 1e-3);
    DiscreteMeasure nu = random_measure(rng, d, n, -1.0, 1.0, 1e-3);
    OtResult res = optimal_plan(mu, nu, 2.0);
    std::vector<DiscreteMeasure> gamma;
    for (int s = 0; s <= 10; ++s)
      gamma.push_back(displacement_interpolation(mu, nu, res.plan, s / 10.0));
    for (int s = 0; s <= 10; ++s)
      for (int t = s + 1; t <= 10; ++t) {
        double w = wasserstein(gamma[static_cast<std::size_t>(s)],
                               gamma[static_cast<std::size_t>(t)], 2.0);
        worst = std::max(worst, std::abs(w - (t - s) / 10.0 * res.wp));
      }
  }
  double elapsed = clock.seconds();
  bool pass = worst <= 1e-7 && elapsed < 30.0;
  return {"geodesic-speed", pass,
          "max |W2(g_s,g_t) - |t-s| W2(g_0,g_1)| = " + sci(worst) +
              " over 50 interpolations (tol 1e-7), " + sci(elapsed) + " s"};
}

/// 3. Convexity inequality for W_p under mixing of both arguments.
inline CheckResult check_mixing_inequality(std::uint64_t seed) {
  using namespace checks_detail;
  Rng rng(seed ^ 0x03u);
  const double lambdas[] = {0.25, 0.5, 0.9};
  double worst = -1e300;
  for (int trial = 0; trial < 200; ++trial) {
    int d = 1 + rng.index(2);
    double lambda = lambdas[trial % 3];
    double p = (trial % 2 == 0) ? 1.0 : 2.0;
    DiscreteMeasure m11 = random_measure(rng, d, 1 + rng.index(4), -1, 1, 1e-3);
    DiscreteMeasure m12 = random_measure(rng, d, 1 + rng.index(4), -1, 1, 1e-3);
    DiscreteMeasure m21 = random_measure(rng, d, 1 + rng.index(4), -1, 1, 1e-3);
    DiscreteMeasure m22 = random_measure(rng, d, 1 + rng.index(4), -1, 1, 1e-3);
    // mix_measures(a, b, l) = l a + (1-l) b, so (1-l) m11 + l m12 is
    // mix_measures(m12, m11, l).
    DiscreteMeasure left = mix_measures(m12, m11, lambda);
    DiscreteMeasure right = mix_measures(m22, m21, lambda);
    double lhs = wasserstein(left, right, p);
    double rhs = std::pow(1.0 - lambda, 1.0 / p) * wasserstein(m11, m21, p) +
                 std::pow(lambda, 1.0 / p) * wasserstein(m12, m22, p);
    worst = std::max(worst, lhs - rhs);
  }
  bool pass = worst <= 1e-9;
  return {"mixing-inequality", pass,
          "max violation = " + sci(worst) + " over 200 quadruples (slack 1e-9)"};
}

namespace checks_detail {

struct ConvergenceRow {
  std::vector<double> residuals;  // at dt = 1e-1, 5e-2, 2.5e-2
  std::vector<double> ratios;
};

inline ConvergenceRow residual_convergence(
    const std::function<std::pair<MeasureCurve, VelocityCurve>(const std::vector<double>&)>& make,
    const std::vector<SpaceTimeTestFunction>& tests, const MetricField& h) {
  ConvergenceRow row;
  for (int steps : {11, 21, 41}) {
    auto [curve, velocity] = make(uniform_times(steps));
    row.residuals.push_back(continuity_residual(curve, velocity, tests, h));
  }
  for (std::size_t s = 0; s + 1 < row.residuals.size(); ++s)
    row.ratios.push_back(row.residuals[s] / row.residuals[s + 1]);
  return row;
}

}  // namespace checks_detail

/// 4. Second-order convergence of the weak-equation residual for smooth
/// flow curves, plus an absolute bound at the finest step.
inline CheckResult check_continuity_convergence(std::uint64_t seed) {
  using namespace checks_detail;
  Rng rng(seed ^ 0x04u);
  MetricField h = MetricField::euclidean();
  double worst_residual = 0.0, worst_ratio_low = 1e300, worst_ratio_high = 0.0;

  DiscreteMeasure base2 = random_measure(rng, 2, 5, -0.6, 0.6, 0.15);
  Point u(2);
  u << 0.2, -0.15;
  FlowMap translation = FlowMap::translation(u);
  auto tests2 = make_test_functions("trig:1,bumps:3", 2);
  ConvergenceRow row_t = residual_convergence(
      [&](const std::vector<double>& ts) { return flow_curve(translation, base2, ts); }, tests2, h);

  DiscreteMeasure base1 = random_measure(rng, 1, 4, 0.2, 0.9, 0.1);
  FlowMap dilation1 = FlowMap::dilation(0.25, Point::Zero(1));
  auto tests1 = make_test_functions("trig:1,bumps:3", 1);
  ConvergenceRow row_d = residual_convergence(
      [&](const std::vector<double>& ts) { return flow_curve(dilation1, base1, ts); }, tests1, h);

  FlowMap dilation2 = FlowMap::dilation(-0.3, Point::Zero(2));
  ConvergenceRow row_d2 = residual_convergence(
      [&](const std::vector<double>& ts) { return flow_curve(dilation2, base2, ts); }, tests2, h);

  for (const ConvergenceRow* row : {&row_t, &row_d, &row_d2}) {
    worst_residual = std::max(worst_residual, row->residuals.back());
    for (double r : row->ratios) {
      worst_ratio_low = std::min(worst_ratio_low, r);
      worst_ratio_high = std::max(worst_ratio_high, r);
    }
  }
  bool pass = worst_residual <= 2e-4 && worst_ratio_low >= 3.0 && worst_ratio_high <= 5.0;
  return {"continuity-convergence", pass,
          "halving ratios in [" + sci(worst_ratio_low) + ", " + sci(worst_ratio_high) +
              "] (need [3,5]), residual at dt=2.5e-2 = " + sci(worst_residual) + " (tol 2e-4)"};
}

/// 5. Benamou-Brenier: equality for displacement geodesics with particle
/// velocities, lower bound for arbitrary admissible pairs.
inline CheckResult check_benamou_brenier(std::uint64_t seed) {
  using namespace checks_detail;
  Rng rng(seed ^ 0x05u);
  MetricField h = MetricField::euclidean();
  double worst_eq = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    int d = 1 + rng.index(3);
    DiscreteMeasure mu = random_measure(rng, d, 1 + rng.index(4), -1, 1, 1e-3);
    DiscreteMeasure nu = random_measure(rng, d, 1 + rng.index(4), -1, 1, 1e-3);
    OtResult res = optimal_plan(mu, nu, 2.0);
    auto [curve, velocity] = displacement_geodesic(mu, nu, res.plan, uniform_times(11));
    worst_eq = std::max(worst_eq, std::abs(bb_action(curve, velocity, h) - res.wp));
  }

  double worst_gap = 1e300;
  for (int trial = 0; trial < 100; ++trial) {
    int d = 2;
    DiscreteMeasure mu0 = random_measure(rng, d, 2 + rng.index(3), -0.5, 0.5, 0.1);
    FlowMap flow = [&]() -> FlowMap {
      switch (trial % 3) {
        case 0: {
          Point u = rng.point(d, -0.3, 0.3);
          Point amp = rng.point(d, 0.1, 0.25);
          return FlowMap::curved_translation(u, {amp}, {1.0 + rng.index(2)});
        }
        case 1:
          return FlowMap::rotation(rng.uniform(0.8, 2.0), rng.point(d, -0.2, 0.2));
        default: {
          Point u = rng.point(d, -0.2, 0.2);
          Point amp1 = rng.point(d, 0.05, 0.2), amp2 = rng.point(d, 0.05, 0.15);
          return FlowMap::curved_translation(u, {amp1, amp2}, {1.0, 2.0});
        }
      }
    }();
    auto [curve, velocity] = flow_curve(flow, mu0, uniform_times(101));
    double action = bb_action(curve, velocity, h);
    double w2 = wasserstein(curve.measures.front(), curve.measures.back(), 2.0);
    worst_gap = std::min(worst_gap, action - w2);
  }
  bool pass = worst_eq <= 1e-6 && worst_gap >= -1e-6;
  return {"benamou-brenier", pass,
          "geodesic |action - W2| max = " + sci(worst_eq) +
              " (tol 1e-6); admissible-pair min(action - W2) = " + sci(worst_gap) +
              " (must be >= -1e-6)"};
}

/// 6. Norm bound and adjoint identity of the fiber-averaged differential.
inline CheckResult check_pushforward_bound(std::uint64_t seed) {
  using namespace checks_detail;
  Rng rng(seed ^ 0x06u);
  double worst_bound = -1e300, worst_adjoint = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    int kind = trial % 3;
    int d = (kind == 0) ? 1 : 2;
    PointMap f = [&]() -> PointMap {
      switch (kind) {
        case 0: return PointMap::square1d();
        case 1: return PointMap::rotation2d(rng.uniform(0.0, 2.0 * M_PI));
        default: return random_invertible_affine(rng, 2, 0.4, 2.0);
      }
    }();
    DiscreteMeasure mu = random_measure(rng, d, 2 + rng.index(4), -1.2, 1.2, 0.05);
    AtomVectorField v = random_field(rng, mu, 1.0);
    Disintegration dis = disintegrate(f, mu);
    AtomVectorField image = pushforward_differential(dis, v);

    double bound = 0.0;
    for (int i : mu.support_indices())
      bound = std::max(bound, jacobian_operator_norm(f, mu.atom(i)));
    worst_bound = std::max(worst_bound, l2_norm(image) - bound * l2_norm(v));

    GradientDictionary dict = GradientDictionary::polynomial(f.out_dim(), 2);
    for (int k = 0; k < dict.size(); ++k) {
      double lhs = 0.0;
      for (int y = 0; y < dis.image.size(); ++y)
        lhs += dis.image.weight(y) * dict[k].gradient(dis.image.atom(y)).dot(image.at(y));
      double rhs = 0.0;
      for (int i = 0; i < mu.size(); ++i) {
        Point pullback_grad =
            f.jacobian(mu.atom(i)).transpose() * dict[k].gradient(f(mu.atom(i)));
        rhs += mu.weight(i) * pullback_grad.dot(v.at(i));
      }
      worst_adjoint = std::max(worst_adjoint, std::abs(lhs - rhs));
    }
  }
  bool pass = worst_bound <= 1e-9 && worst_adjoint <= 1e-9;
  return {"pushforward-bound", pass,
          "max ||dF v|| - bound ||v|| = " + sci(worst_bound) +
              " (<= 1e-9); adjoint identity max dev = " + sci(worst_adjoint) + " (tol 1e-9)"};
}

/// 7. Operator-norm estimates: isometries give exactly 1, scalings |s|.
inline CheckResult check_operator_norm(std::uint64_t seed) {
  using namespace checks_detail;
  Rng rng(seed ^ 0x07u);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    int d = 1 + rng.index(3);
    PointMap iso = (d == 2 && trial % 2 == 0)
                       ? PointMap::compose(PointMap::rotation2d(rng.uniform(0, 2 * M_PI)),
                                           PointMap::translation(rng.point(2, -1, 1)))
                       : PointMap::translation(rng.point(d, -1, 1));
    DiscreteMeasure mu = random_measure(rng, d, 2 + rng.index(4), -1, 1, 0.05);
    GradientDictionary dict = GradientDictionary::polynomial(d, 2);
    OperatorNormEstimate est = operator_norm_estimate(iso, mu, dict, 20, seed + trial);
    worst = std::max(worst, std::abs(est.estimate - 1.0));
    worst = std::max(worst, std::abs(est.bound - 1.0));

    double s = rng.uniform(0.3, 2.5) * (trial % 2 ? -1.0 : 1.0);
    OperatorNormEstimate scaled =
        operator_norm_estimate(PointMap::scaling(s, d), mu, dict, 20, seed + trial);
    worst = std::max(worst, std::abs(scaled.estimate - std::abs(s)));
    worst = std::max(worst, std::abs(scaled.bound - std::abs(s)));
    if (scaled.estimate > scaled.bound + 1e-9) worst = std::max(worst, 1.0);
  }
  bool pass = worst <= 1e-9;
  return {"operator-norm", pass,
          "max |estimate - expected| = " + sci(worst) + " over isometries and scalings (tol 1e-9)"};
}

/// 8. The projection is idempotent, self-adjoint and contractive, and is
/// the identity at Dirac measures.
inline CheckResult check_projection(std::uint64_t seed) {
  using namespace checks_detail;
  Rng rng(seed ^ 0x08u);
  double worst_idem = 0.0, worst_adj = 0.0, worst_contr = -1e300, worst_dirac = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    int d = 1 + rng.index(3);
    int n = 1 + rng.index(8);
    DiscreteMeasure mu = random_measure(rng, d, n, -1, 1, 0.15);
    GradientDictionary dict = (trial % 2 == 0) ? GradientDictionary::polynomial(d, 2)
                                               : GradientDictionary::trigonometric(d, 1);
    TangentProjection P(mu, MetricField::euclidean(), dict);
    AtomVectorField v = random_field(rng, mu, 1.0);
    AtomVectorField w = random_field(rng, mu, 1.0);
    AtomVectorField pv = P.apply(v), ppv = P.apply(pv), pw = P.apply(w);
    worst_idem = std::max(
        worst_idem, l2_norm(AtomVectorField(mu, ppv.vectors - pv.vectors)));
    worst_adj = std::max(worst_adj, std::abs(l2_inner(pv, w) - l2_inner(v, pw)));
    worst_contr = std::max(worst_contr, l2_norm(pv) - l2_norm(v));
  }
  for (int trial = 0; trial < 40; ++trial) {
    int d = 1 + rng.index(3);
    DiscreteMeasure delta = DiscreteMeasure::dirac(rng.point(d, -1, 1));
    GradientDictionary dict = (trial % 4 == 0) ? GradientDictionary::trigonometric(d, 1)
                                               : GradientDictionary::polynomial(d, 1 + trial % 3);
    TangentProjection P(delta, MetricField::euclidean(), dict);
    AtomVectorField v = random_field(rng, delta, 1.0);
    AtomVectorField pv = P.apply(v);
    worst_dirac = std::max(worst_dirac, (pv.vectors - v.vectors).cwiseAbs().maxCoeff());
  }
  bool pass = worst_idem <= 1e-9 && worst_adj <= 1e-9 && worst_contr <= 1e-12 &&
              worst_dirac <= 1e-10;
  return {"projection", pass,
          "idempotence " + sci(worst_idem) + ", self-adjointness " + sci(worst_adj) +
              ", contraction excess " + sci(worst_contr) + " (tols 1e-9/1e-9/1e-12); Dirac dev " +
              sci(worst_dirac) + " (tol 1e-10)"};
}

/// 9. Conformal non-tangency: the residual stays above 0.01 and plateaus
/// in the dictionary order, while the flat control vanishes.
inline CheckResult check_counterexample(std::uint64_t) {
  using namespace checks_detail;
  Stopwatch clock;
  double r2 = counterexample_residual(2, 0.5, 32);
  double r3 = counterexample_residual(3, 0.5, 32);
  double r4 = counterexample_residual(4, 0.5, 32);
  double control = counterexample_control_residual(4, 32);
  double decrease = (r3 - r4) / r3;
  double elapsed = clock.seconds();
  bool monotone = r2 >= r3 - 1e-12 && r3 >= r4 - 1e-12;
  bool pass = r2 > 0.01 && r3 > 0.01 && r4 > 0.01 && decrease < 0.10 && monotone &&
              control <= 1e-9 && elapsed < 60.0;
  return {"counterexample", pass,
          "residuals K=2,3,4: " + sci(r2) + ", " + sci(r3) + ", " + sci(r4) +
              " (> 0.01); K3->K4 decrease " + sci(decrease) + " (< 0.10); control " +
              sci(control) + " (tol 1e-9); " + sci(elapsed) + " s"};
}

/// 10. Chain and inverse rules for differentials of affine pushforwards.
inline CheckResult check_chain_rule(std::uint64_t seed) {
  using namespace checks_detail;
  Rng rng(seed ^ 0x0au);
  double worst = 0.0;
  GradientDictionary dict = GradientDictionary::polynomial(2, 3);
  for (int trial = 0; trial < 50; ++trial) {
    // Three separated atoms against a degree-3 dictionary keep the tangent
    // space equal to the whole of L^2(mu), so the projections inside
    // `differential` resolve exactly and the rules hold atom-wise.
    DiscreteMeasure mu = random_measure(rng, 2, 3, -1, 1, 0.3);
    PointMap f = random_invertible_affine(rng, 2, 0.7, 1.5);
    PointMap g = random_invertible_affine(rng, 2, 0.7, 1.5);
    AtomVectorField v = random_field(rng, mu, 1.0);

    AtomVectorField lhs = differential(PointMap::compose(g, f), mu, v, dict);
    AtomVectorField mid = differential(f, mu, v, dict);
    AtomVectorField rhs = differential(g, pushforward(f, mu), mid, dict);
    worst = std::max(worst, (lhs.vectors - rhs.vectors).cwiseAbs().maxCoeff());

    AtomVectorField back = differential(f.inverse(), pushforward(f, mu), mid, dict);
    worst = std::max(worst, (back.vectors - v.vectors).cwiseAbs().maxCoeff());
  }
  bool pass = worst <= 1e-9;
  return {"chain-rule", pass,
          "max per-atom deviation = " + sci(worst) + " over 50 affine compositions (tol 1e-9)"};
}

/// 11. Canonical mixing field: weak-equation identity, L2 bounds, and the
/// residual convergence of mixed flow curves.
inline CheckResult check_mixing_field(std::uint64_t seed) {
  using namespace checks_detail;
  Rng rng(seed ^ 0x0bu);
  double worst_identity = 0.0, worst_l2 = -1e300, worst_slice = -1e300;
  GradientDictionary test_dict = GradientDictionary::polynomial(2, 2);
  for (int trial = 0; trial < 100; ++trial) {
    const double lambdas[] = {0.25, 0.5, 0.9};
    double lambda = (trial % 4 == 3) ? rng.uniform(0.05, 0.95) : lambdas[trial % 3];
    // Overlapping supports: atoms drawn from one pool so C is nonempty.
    DiscreteMeasure pool = random_measure(rng, 2, 6, -1, 1, 0.15);
    auto pick = [&](int count, int offset) {
      Eigen::MatrixXd atoms(count, 2);
      Eigen::VectorXd w(count);
      for (int i = 0; i < count; ++i) {
        atoms.row(i) = pool.atoms().row((offset + i) % pool.size());
        w[i] = rng.uniform(0.2, 1.0);
      }
      w /= w.sum();
      return DiscreteMeasure::from_atoms(atoms, w);
    };
    DiscreteMeasure mu = pick(4, 0);
    DiscreteMeasure nu = pick(4, 2);  // atoms 2,3 shared with mu
    MixDecomposition dec = decompose(mu, nu, lambda);
    AtomVectorField v = random_field(rng, mu, 1.0);
    AtomVectorField w = random_field(rng, nu, 1.0);
    AtomVectorField u = canonical_field(dec, v, w);

    // Atom-wise mass-flux identity: alpha u = lambda mu v + (1-lambda) nu w.
    for (int r = 0; r < dec.alpha.size(); ++r) {
      Point flux = dec.alpha.weight(r) * u.at(r);
      Point expect = Point::Zero(2);
      if (dec.mu_index[static_cast<std::size_t>(r)] >= 0)
        expect += lambda * mu.weight(dec.mu_index[static_cast<std::size_t>(r)]) *
                  v.at(dec.mu_index[static_cast<std::size_t>(r)]);
      if (dec.nu_index[static_cast<std::size_t>(r)] >= 0)
        expect += (1.0 - lambda) * nu.weight(dec.nu_index[static_cast<std::size_t>(r)]) *
                  w.at(dec.nu_index[static_cast<std::size_t>(r)]);
      worst_identity = std::max(worst_identity, (flux - expect).cwiseAbs().maxCoeff());
    }
    // Paired with dictionary gradients as in the weak equation.
    for (int k = 0; k < test_dict.size(); ++k) {
      double lhs = 0.0, rhs = 0.0;
      for (int r = 0; r < dec.alpha.size(); ++r)
        lhs += dec.alpha.weight(r) * test_dict[k].gradient(dec.alpha.atom(r)).dot(u.at(r));
      for (int i = 0; i < mu.size(); ++i)
        rhs += lambda * mu.weight(i) * test_dict[k].gradient(mu.atom(i)).dot(v.at(i));
      for (int j = 0; j < nu.size(); ++j)
        rhs += (1.0 - lambda) * nu.weight(j) * test_dict[k].gradient(nu.atom(j)).dot(w.at(j));
      worst_identity = std::max(worst_identity, std::abs(lhs - rhs));
    }

    // L2 bound, squared form.
    double u2 = l2_inner(u, u), v2 = l2_inner(v, v), w2 = l2_inner(w, w);
    worst_l2 = std::max(worst_l2, u2 - 2.0 * (lambda * v2 + (1.0 - lambda) * w2));

    // Sharper decomposed bound: ||u|| <= sqrt(lambda)||v|| + sqrt(1-lambda)||w|| + ||u|_C||.
    double uc2 = 0.0;
    for (int r : dec.part_indices(MixPart::shared))
      uc2 += dec.alpha.weight(r) * u.at(r).squaredNorm();
    worst_slice = std::max(worst_slice, std::sqrt(u2) - (std::sqrt(lambda) * std::sqrt(v2) +
                                                         std::sqrt(1.0 - lambda) * std::sqrt(w2) +
                                                         std::sqrt(uc2)));
  }

  // Mixed flow curves keep the O(dt^2) residual convergence.
  Point u1(2), u2v(2);
  u1 << 0.18, -0.12;
  u2v << -0.1, 0.2;
  DiscreteMeasure muA = random_measure(rng, 2, 4, -0.6, 0.6, 0.15);
  DiscreteMeasure muB = random_measure(rng, 2, 4, -0.6, 0.6, 0.15);
  GradientDictionary mix_dict = GradientDictionary::trigonometric(2, 1);
  auto tests = make_test_functions("trig:1,bumps:3", 2);
  ConvergenceRow row = residual_convergence(
      [&](const std::vector<double>& ts) {
        auto [mc, mv] = flow_curve(FlowMap::translation(u1), muA, ts);
        auto [nc, nv] = flow_curve(FlowMap::translation(u2v), muB, ts);
        auto [mixed, uf] = mixed_differential(mc, mv, nc, nv, 0.5, mix_dict);
        return std::make_pair(mixed.alpha, uf);
      },
      tests, MetricField::euclidean());
  bool conv_ok = row.residuals.back() <= 2e-4;
  for (double r : row.ratios) conv_ok = conv_ok && r >= 3.0 && r <= 5.0;

  bool pass = worst_identity <= 1e-10 && worst_l2 <= 1e-10 && worst_slice <= 1e-10 && conv_ok;
  return {"mixing-field", pass,
          "weak-identity dev " + sci(worst_identity) + " (tol 1e-10); L2-bound excess " +
              sci(worst_l2) + "; decomposed-bound excess " + sci(worst_slice) +
              "; mixed-flow residual " + sci(row.residuals.back()) + " (tol 2e-4), ratios ok: " +
              (conv_ok ? "yes" : "no")};
}

/// 12. Disintegration reconstructs the source measure atom by atom and
/// concentrates each fiber on one quantized image point.
inline CheckResult check_disintegration(std::uint64_t seed) {
  using namespace checks_detail;
  Rng rng(seed ^ 0x0cu);
  double worst_rec = 0.0;
  bool support_exact = true;
  for (int trial = 0; trial < 200; ++trial) {
    int kind = trial % 4;
    DiscreteMeasure mu = [&] {
      if (kind == 0) {
        // symmetric atoms so that x^2 collides exactly
        int pairs = 1 + rng.index(3);
        Eigen::MatrixXd atoms(2 * pairs + 1, 1);
        Eigen::VectorXd w(2 * pairs + 1);
        for (int i = 0; i < pairs; ++i) {
          double a = rng.uniform(0.2, 1.5);
          atoms(2 * i, 0) = a;
          atoms(2 * i + 1, 0) = -a;
          w[2 * i] = rng.uniform(0.2, 1.0);
          w[2 * i + 1] = rng.uniform(0.2, 1.0);
        }
        atoms(2 * pairs, 0) = rng.uniform(1.6, 2.0);
        w[2 * pairs] = rng.uniform(0.2, 1.0);
        w /= w.sum();
        return DiscreteMeasure::from_atoms(atoms, w);
      }
      if (kind == 1) {
        // shared first coordinate so the projection collides exactly
        int cols = 2 + rng.index(2), rows = 2;
        Eigen::MatrixXd atoms(cols * rows, 2);
        Eigen::VectorXd w(cols * rows);
        for (int c = 0; c < cols; ++c) {
          double x = rng.uniform(-1, 1);
          for (int r = 0; r < rows; ++r) {
            atoms(c * rows + r, 0) = x;
            atoms(c * rows + r, 1) = rng.uniform(-1, 1);
            w[c * rows + r] = rng.uniform(0.2, 1.0);
          }
        }
        w /= w.sum();
        return DiscreteMeasure::from_atoms(atoms, w);
      }
      return random_measure(rng, 1 + rng.index(3), 2 + rng.index(5), -1.5, 1.5, 1e-3);
    }();
    PointMap f = [&]() -> PointMap {
      switch (kind) {
        case 0: return PointMap::square1d();
        case 1: return PointMap::coordinate(2, 0);
        case 2: return PointMap::constant(rng.point(mu.dim(), -1, 1), mu.dim());
        default: return random_invertible_affine(rng, mu.dim(), 0.5, 2.0);
      }
    }();
    Disintegration dis = disintegrate(f, mu);
    std::vector<double> reconstructed(static_cast<std::size_t>(mu.size()), 0.0);
    for (const Fiber& fiber : dis.fibers) {
      double total = 0.0;
      for (std::size_t s = 0; s < fiber.source_indices.size(); ++s) {
        int i = fiber.source_indices[s];
        reconstructed[static_cast<std::size_t>(i)] +=
            dis.image.weight(fiber.image_index) * fiber.conditional_weights[s];
        total += fiber.conditional_weights[s];
        support_exact =
            support_exact && quantize_point(f(mu.atom(i))) ==
                                 dis.image.keys()[static_cast<std::size_t>(fiber.image_index)];
      }
      worst_rec = std::max(worst_rec, std::abs(total - 1.0));
    }
    for (int i : mu.support_indices())
      worst_rec = std::max(worst_rec,
                           std::abs(reconstructed[static_cast<std::size_t>(i)] - mu.weight(i)));
  }
  bool pass = worst_rec <= 1e-12 && support_exact;
  return {"disintegration", pass,
          "max reconstruction error = " + sci(worst_rec) +
              " over 200 maps (tol 1e-12); fiber support exact: " +
              (support_exact ? "yes" : "no")};
}

inline const std::vector<std::string>& check_names() {
  static const std::vector<std::string> names = {
      "ot-oracle",        "geodesic-speed",         "mixing-inequality",
      "continuity-convergence", "benamou-brenier",  "pushforward-bound",
      "operator-norm",    "projection",             "counterexample",
      "chain-rule",       "mixing-field",           "disintegration"};
  return names;
}

inline CheckResult run_check(const std::string& name, std::uint64_t seed) {
  if (name == "ot-oracle") return check_ot_oracle(seed);
  if (name == "geodesic-speed") return check_geodesic_speed(seed);
  if (name == "mixing-inequality") return check_mixing_inequality(seed);
  if (name == "continuity-convergence") return check_continuity_convergence(seed);
  if (name == "benamou-brenier") return check_benamou_brenier(seed);
  if (name == "pushforward-bound") return check_pushforward_bound(seed);
  if (name == "operator-norm") return check_operator_norm(seed);
  if (name == "projection") return check_projection(seed);
  if (name == "counterexample") return check_counterexample(seed);
  if (name == "chain-rule") return check_chain_rule(seed);
  if (name == "mixing-field") return check_mixing_field(seed);
  if (name == "disintegration") return check_disintegration(seed);
  throw validation_error("unknown check suite '" + name + "'");
}

inline std::vector<CheckResult> run_all_checks(std::uint64_t seed) {
  std::vector<CheckResult> results;
  for (const std::string& name : check_names()) results.push_back(run_check(name, seed));
  return results;
}

}  // namespace wass
