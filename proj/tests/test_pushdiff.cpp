#include <gtest/gtest.h>

#include "wass/curves.hpp"
#include "wass/pushdiff.hpp"
#include "test_util.hpp"

using namespace wass;
using wass_test::pt;

namespace {

DiscreteMeasure cloud(Rng& rng, int d, int n, double sep = 0.15) {
  Eigen::MatrixXd atoms(n, d);
  int placed = 0;
  while (placed < n) {
    Point x = rng.point(d, -1, 1);
    bool ok = true;
    for (int i = 0; i < placed && ok; ++i) ok = (atoms.row(i).transpose() - x).norm() > sep;
    if (ok) atoms.row(placed++) = x.transpose();
  }
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) w[i] = rng.uniform(0.2, 1.0);
  w /= w.sum();
  return DiscreteMeasure::from_atoms(atoms, w);
}

AtomVectorField random_field(Rng& rng, const DiscreteMeasure& mu) {
  Eigen::MatrixXd v(mu.size(), mu.dim());
  for (int i = 0; i < mu.size(); ++i)
    for (int c = 0; c < mu.dim(); ++c) v(i, c) = rng.normal();
  return AtomVectorField(mu, v);
}

// mu = 0.25 delta_{-1} + 0.25 delta_1 + 0.5 delta_2 under x -> x^2:
// fiber over 1 is {-1, 1} with conditional weights 1/2 each, fiber over 4
// is {2} alone.
DiscreteMeasure square_example_measure() {
  return DiscreteMeasure::on_line({-1.0, 1.0, 2.0}, {0.25, 0.25, 0.5});
}

}  // namespace

TEST(PushdiffDisintegrate, InjectiveMapGivesSingletonFibers) {
  Rng rng(301);
  auto mu = cloud(rng, 2, 5);
  auto dis = disintegrate(PointMap::rotation2d(0.7), mu);
  EXPECT_EQ(dis.image.size(), mu.size());
  for (const Fiber& fiber : dis.fibers) {
    ASSERT_EQ(fiber.source_indices.size(), 1u);
    EXPECT_DOUBLE_EQ(fiber.conditional_weights[0], 1.0);
  }
}

TEST(PushdiffDisintegrate, ConstantMapGivesOneFiber) {
  Rng rng(307);
  auto mu = cloud(rng, 2, 4);
  auto dis = disintegrate(PointMap::constant(pt({0.0, 0.0}), 2), mu);
  ASSERT_EQ(dis.fibers.size(), 1u);
  const Fiber& fiber = dis.fibers[0];
  ASSERT_EQ(fiber.source_indices.size(), 4u);
  for (std::size_t s = 0; s < 4; ++s)
    EXPECT_DOUBLE_EQ(fiber.conditional_weights[s], mu.weight(fiber.source_indices[s]));
}

TEST(PushdiffDisintegrate, SquareMapHandExample) {
  auto mu = square_example_measure();
  auto dis = disintegrate(PointMap::square1d(), mu);
  ASSERT_EQ(dis.image.size(), 2);
  EXPECT_DOUBLE_EQ(dis.image.atom(0)[0], 1.0);
  EXPECT_DOUBLE_EQ(dis.image.atom(1)[0], 4.0);
  EXPECT_DOUBLE_EQ(dis.image.weight(0), 0.5);
  EXPECT_DOUBLE_EQ(dis.image.weight(1), 0.5);
  ASSERT_EQ(dis.fibers[0].source_indices.size(), 2u);
  EXPECT_DOUBLE_EQ(dis.fibers[0].conditional_weights[0], 0.5);
  EXPECT_DOUBLE_EQ(dis.fibers[0].conditional_weights[1], 0.5);
  ASSERT_EQ(dis.fibers[1].source_indices.size(), 1u);
  EXPECT_DOUBLE_EQ(dis.fibers[1].conditional_weights[0], 1.0);
}

TEST(PushdiffDisintegrate, ReconstructionIsExact) {
  Rng rng(311);
  for (int trial = 0; trial < 30; ++trial) {
    auto mu = cloud(rng, 1, 2 + rng.index(5), 0.01);
    PointMap f = trial % 2 ? PointMap::square1d() : PointMap::constant(pt({1.0}), 1);
    auto dis = disintegrate(f, mu);
    std::vector<double> rec(static_cast<std::size_t>(mu.size()), 0.0);
    for (const Fiber& fiber : dis.fibers)
      for (std::size_t s = 0; s < fiber.source_indices.size(); ++s)
        rec[static_cast<std::size_t>(fiber.source_indices[s])] +=
            dis.image.weight(fiber.image_index) * fiber.conditional_weights[s];
    for (int i = 0; i < mu.size(); ++i)
      EXPECT_NEAR(rec[static_cast<std::size_t>(i)], mu.weight(i), 1e-12);
  }
}

TEST(PushdiffDifferential, InjectiveMapActsPointwise) {
  Rng rng(313);
  auto mu = cloud(rng, 2, 4);
  auto v = random_field(rng, mu);
  PointMap f = PointMap::affine((Eigen::MatrixXd(2, 2) << 1.2, 0.3, -0.1, 0.9).finished(),
                                pt({0.5, -0.5}));
  auto image = pushforward_differential(f, mu, v);
  for (int i = 0; i < mu.size(); ++i) {
    Point expected = f.jacobian(mu.atom(i)) * v.at(i);
    EXPECT_LE((image.at(i) - expected).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(PushdiffDifferential, ConstantMapKillsEverything) {
  Rng rng(317);
  auto mu = cloud(rng, 2, 4);
  auto v = random_field(rng, mu);
  auto image = pushforward_differential(PointMap::constant(pt({1.0, 1.0}), 2), mu, v);
  ASSERT_EQ(image.base.size(), 1);
  EXPECT_DOUBLE_EQ(l2_norm(image), 0.0);
}

TEST(PushdiffDifferential, SquareMapFiberAverage) {
  auto mu = square_example_measure();
  auto v = AtomVectorField::constant(mu, pt({1.0}));
  auto image = pushforward_differential(PointMap::square1d(), mu, v);
  // df = 2x: fiber over 1 averages 0.5*(-2) + 0.5*(+2) = 0, fiber over 4
  // holds 2*2 = 4.
  ASSERT_EQ(image.base.size(), 2);
  EXPECT_NEAR(image.at(0)[0], 0.0, 1e-15);
  EXPECT_NEAR(image.at(1)[0], 4.0, 1e-15);
}

TEST(PushdiffDifferential, IsometryNeedsNoProjection) {
  Rng rng(331);
  auto mu = cloud(rng, 2, 4);
  auto v = random_field(rng, mu);
  PointMap g = PointMap::compose(PointMap::rotation2d(0.4), PointMap::translation(pt({0.2, 0.1})));
  auto hat = pushforward_differential(g, mu, v);
  auto projected = differential(g, mu, v, GradientDictionary::polynomial(2, 3));
  EXPECT_LE((hat.vectors - projected.vectors).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(PushdiffDifferential, DiracProjectionIsIdentity) {
  Rng rng(337);
  auto delta = DiscreteMeasure::dirac(pt({0.4, -0.3}));
  auto v = random_field(rng, delta);
  PointMap f = PointMap::scaling(1.7, 2);
  auto hat = pushforward_differential(f, delta, v);
  auto projected = differential(f, delta, v, GradientDictionary::polynomial(2, 2));
  EXPECT_LE((hat.vectors - projected.vectors).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(PushdiffDifferential, SquareMapProjectionMatchesDenseOracle) {
  auto mu = square_example_measure();
  auto v = AtomVectorField::constant(mu, pt({1.0}));
  Disintegration dis = disintegrate(PointMap::square1d(), mu);
  AtomVectorField hat = pushforward_differential(dis, v);
  GradientDictionary dict = GradientDictionary::polynomial(1, 2);
  TangentProjection P(dis.image, MetricField::euclidean(), dict);
  double residual = tangency_residual(hat, P);
  auto oracle = wass_test::dense_projection_oracle(hat, dict, MetricField::euclidean());
  EXPECT_NEAR(residual, oracle.residual, 1e-10);
  // two distinct atoms with a degree-2 dictionary span all of L^2: the
  // projection resolves the field exactly
  EXPECT_LE(residual, 1e-10);
}

TEST(PushdiffOperatorNorm, IsometryAttainsBoundOne) {
  Rng rng(347);
  auto mu = cloud(rng, 2, 4);
  PointMap g = PointMap::rotation2d(1.3);
  auto est = operator_norm_estimate(g, mu, GradientDictionary::polynomial(2, 2), 16);
  EXPECT_NEAR(est.estimate, 1.0, 1e-9);
  EXPECT_NEAR(est.bound, 1.0, 1e-12);
}

TEST(PushdiffOperatorNorm, ScalingAttainsFactor) {
  Rng rng(349);
  auto mu = cloud(rng, 1, 3);
  auto est = operator_norm_estimate(PointMap::scaling(2.0, 1), mu,
                                    GradientDictionary::polynomial(1, 2), 16);
  EXPECT_NEAR(est.estimate, 2.0, 1e-9);
  EXPECT_NEAR(est.bound, 2.0, 1e-12);
}

TEST(PushdiffOperatorNorm, EstimateNeverExceedsBound) {
  Rng rng(353);
  for (int trial = 0; trial < 10; ++trial) {
    auto mu = cloud(rng, 2, 3);
    Eigen::MatrixXd A(2, 2);
    A << rng.normal(), rng.normal(), rng.normal(), rng.normal();
    PointMap f = PointMap::affine(A, rng.point(2, -1, 1));
    auto est = operator_norm_estimate(f, mu, GradientDictionary::polynomial(2, 2), 8,
                                      1000 + trial);
    EXPECT_LE(est.estimate, est.bound + 1e-9);
  }
}

TEST(PushdiffBound, InequalityChainHolds) {
  Rng rng(359);
  for (int trial = 0; trial < 30; ++trial) {
    auto mu = cloud(rng, 1, 2 + rng.index(4), 0.05);
    PointMap f = PointMap::square1d();
    auto v = random_field(rng, mu);
    auto image = pushforward_differential(f, mu, v);
    double bound = 0.0;
    for (int i : mu.support_indices())
      bound = std::max(bound, jacobian_operator_norm(f, mu.atom(i)));
    EXPECT_LE(l2_norm(image), bound * l2_norm(v) + 1e-9);
  }
}

TEST(PushdiffBound, AdjointIdentityAgainstPulledBackGradients) {
  Rng rng(367);
  auto mu = cloud(rng, 1, 4, 0.05);
  PointMap f = PointMap::square1d();
  auto v = random_field(rng, mu);
  Disintegration dis = disintegrate(f, mu);
  auto image = pushforward_differential(dis, v);
  GradientDictionary dict = GradientDictionary::polynomial(1, 3);
  for (int k = 0; k < dict.size(); ++k) {
    double lhs = 0.0;
    for (int y = 0; y < dis.image.size(); ++y)
      lhs += dis.image.weight(y) * dict[k].gradient(dis.image.atom(y)).dot(image.at(y));
    double rhs = 0.0;
    for (int i = 0; i < mu.size(); ++i)
      rhs += mu.weight(i) *
             (f.jacobian(mu.atom(i)).transpose() * dict[k].gradient(f(mu.atom(i)))).dot(v.at(i));
    EXPECT_NEAR(lhs, rhs, 1e-9);
  }
}

// Pushing a flow curve and its velocity through f keeps the pair an
// (approximate) solution of the continuity equation.
TEST(PushdiffBound, ImageCurveStaysAdmissible) {
  Rng rng(373);
  auto mu0 = cloud(rng, 2, 4, 0.2);
  FlowMap flow = FlowMap::translation(pt({0.15, -0.1}));
  auto [curve, velocity] = flow_curve(flow, mu0, uniform_times(101));
  PointMap f = PointMap::affine((Eigen::MatrixXd(2, 2) << 1.1, 0.2, -0.3, 0.8).finished(),
                                pt({0.1, 0.2}));
  std::vector<DiscreteMeasure> images;
  std::vector<AtomVectorField> image_fields;
  for (int j = 0; j < curve.samples(); ++j) {
    images.push_back(pushforward(f, curve.measures[static_cast<std::size_t>(j)]));
    if (j > 0 && j + 1 < curve.samples())
      image_fields.push_back(pushforward_differential(
          f, curve.measures[static_cast<std::size_t>(j)],
          velocity.fields[static_cast<std::size_t>(j - 1)]));
  }
  MeasureCurve image_curve(curve.times, std::move(images));
  double r = continuity_residual(image_curve, VelocityCurve{std::move(image_fields)},
                                 make_test_functions("trig:1,bumps:3", 2));
  EXPECT_LE(r, 1e-3);
}

TEST(PushdiffRules, ChainRuleForAffineMaps) {
  Rng rng(379);
  GradientDictionary dict = GradientDictionary::polynomial(2, 3);
  for (int trial = 0; trial < 10; ++trial) {
    auto mu = cloud(rng, 2, 3, 0.3);
    Eigen::MatrixXd A = (Eigen::MatrixXd(2, 2) << 1.1, 0.2, 0.0, 0.9).finished();
    Eigen::MatrixXd B = (Eigen::MatrixXd(2, 2) << 0.8, -0.1, 0.2, 1.2).finished();
    PointMap f = PointMap::affine(A, rng.point(2, -0.3, 0.3));
    PointMap g = PointMap::affine(B, rng.point(2, -0.3, 0.3));
    auto v = random_field(rng, mu);
    auto lhs = differential(PointMap::compose(g, f), mu, v, dict);
    auto rhs = differential(g, pushforward(f, mu), differential(f, mu, v, dict), dict);
    EXPECT_LE((lhs.vectors - rhs.vectors).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(PushdiffRules, InverseRuleRoundTrips) {
  Rng rng(383);
  GradientDictionary dict = GradientDictionary::polynomial(2, 3);
  auto mu = cloud(rng, 2, 3, 0.3);
  PointMap f = PointMap::affine((Eigen::MatrixXd(2, 2) << 1.3, 0.4, -0.2, 0.8).finished(),
                                pt({0.3, -0.1}));
  auto v = random_field(rng, mu);
  auto forward = differential(f, mu, v, dict);
  auto back = differential(f.inverse(), pushforward(f, mu), forward, dict);
  EXPECT_LE((back.vectors - v.vectors).cwiseAbs().maxCoeff(), 1e-9);
}

// For an isometry g, the differential carries gradient fields to gradient
// fields: dF(grad phi) = grad(phi o g^{-1}) at the image atoms.
TEST(PushdiffRules, IsometryTransportsGradients) {
  Rng rng(389);
  auto mu = cloud(rng, 2, 4);
  PointMap g = PointMap::compose(PointMap::rotation2d(0.9), PointMap::translation(pt({0.1, 0.4})));
  PointMap ginv = g.inverse();
  GradientDictionary dict = GradientDictionary::polynomial(2, 3);
  auto image_mu = pushforward(g, mu);
  for (int k = 0; k < dict.size(); ++k) {
    auto grad = gradient_field(dict[k], mu);
    auto transported = pushforward_differential(g, mu, grad);
    for (int y = 0; y < image_mu.size(); ++y) {
      Point x = ginv(image_mu.atom(y));
      Point expected = ginv.jacobian(image_mu.atom(y)).transpose() * dict[k].gradient(x);
      EXPECT_LE((transported.at(y) - expected).cwiseAbs().maxCoeff(), 1e-10);
    }
  }
}

// Under h2 = nu^2 h1 the h2-dual 1-form of grad^{h1} phi is nu^2 d phi.
TEST(PushdiffConformal, DualFormPicksUpConformalSquare) {
  MetricField h2 = MetricField::conformal_cosine(0.5);
  DiscreteMeasure grid = torus_grid_measure(8);
  TestFunction phi{"sin", [](const Point& x) { return std::sin(2 * M_PI * x[1]); },
                   [](const Point& x) {
                     Point g(2);
                     g << 0.0, 2 * M_PI * std::cos(2 * M_PI * x[1]);
                     return g;
                   }};
  AtomVectorField v = gradient_field(phi, grid, MetricField::euclidean());
  for (int i = 0; i < grid.size(); ++i) {
    Point x = grid.atom(i);
    Point dual = h2.at(x) * v.at(i);
    Point expected = h2.conformal_factor(x) * h2.conformal_factor(x) * phi.gradient(x);
    EXPECT_LE((dual - expected).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(PushdiffCounterexample, ConstantNuRejected) {
  EXPECT_THROW(counterexample_residual(3, 0.0, 8), validation_error);
}

TEST(PushdiffCounterexample, FlatControlVanishes) {
  EXPECT_LE(counterexample_control_residual(3, 16), 1e-9);
}

// Small-grid version of the non-tangency plateau; the acceptance suite
// runs the full 32x32 protocol. Values frozen from the dense QR oracle.
TEST(PushdiffCounterexample, PlateauOnCoarseGrid) {
  double r2 = counterexample_residual(2, 0.5, 16);
  double r3 = counterexample_residual(3, 0.5, 16);
  double r4 = counterexample_residual(4, 0.5, 16);
  EXPECT_GT(r2, 0.01);
  EXPECT_GT(r3, 0.01);
  EXPECT_GT(r4, 0.01);
  EXPECT_LE(r4, r3 + 1e-12);
  EXPECT_LE(r3, r2 + 1e-12);
  EXPECT_LT((r3 - r4) / r3, 0.10);
  EXPECT_NEAR(r4, 2.1913, 2e-3);
}

TEST(PushdiffCounterexample, ResidualScalesWithAmplitude) {
  double small = counterexample_residual(3, 0.1, 16);
  double large = counterexample_residual(3, 0.5, 16);
  EXPECT_GT(small, 0.0);
  EXPECT_GT(large, small);
}
