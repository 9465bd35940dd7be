#include <gtest/gtest.h>

#include "wass/curves.hpp"
#include "wass/ot.hpp"
#include "test_util.hpp"

using namespace wass;
using wass_test::pt;

namespace {

DiscreteMeasure cloud(Rng& rng, int d, int n, double lo, double hi) {
  Eigen::MatrixXd atoms(n, d);
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) {
    atoms.row(i) = rng.point(d, lo, hi).transpose();
    w[i] = rng.uniform(0.2, 1.0);
  }
  w /= w.sum();
  return DiscreteMeasure::from_atoms(atoms, w);
}

}  // namespace

TEST(CurvesMetricDerivative, ConstantCurveHasZeroSpeed) {
  auto mu = DiscreteMeasure::on_line({0.0, 1.0}, {0.5, 0.5});
  MeasureCurve curve(uniform_times(5), {mu, mu, mu, mu, mu});
  for (int j = 1; j < 4; ++j) EXPECT_NEAR(metric_derivative(curve, j), 0.0, 1e-12);
}

TEST(CurvesMetricDerivative, GeodesicHasConstantSpeedW2) {
  Rng rng(211);
  auto mu = cloud(rng, 2, 3, -1, 1);
  auto nu = cloud(rng, 2, 4, -1, 1);
  auto res = optimal_plan(mu, nu, 2.0);
  auto [curve, velocity] = displacement_geodesic(mu, nu, res.plan, uniform_times(11));
  for (int j = 1; j < 10; ++j)
    EXPECT_NEAR(metric_derivative(curve, j), res.wp, 1e-7);
}

TEST(CurvesMetricDerivative, MovingDiracAtUnitSpeed) {
  std::vector<double> times = uniform_times(6);
  std::vector<DiscreteMeasure> measures;
  for (double t : times) measures.push_back(DiscreteMeasure::dirac(pt({t, 0.0})));
  MeasureCurve curve(times, std::move(measures));
  for (int j = 1; j < 5; ++j) EXPECT_NEAR(metric_derivative(curve, j), 1.0, 1e-9);
}

TEST(CurvesMetricDerivative, BoundaryIndexRejected) {
  auto mu = DiscreteMeasure::dirac(pt({0.0}));
  MeasureCurve curve(uniform_times(3), {mu, mu, mu});
  EXPECT_THROW(metric_derivative(curve, 0), validation_error);
  EXPECT_THROW(metric_derivative(curve, 2), validation_error);
}

TEST(CurvesContinuity, StaticCurveWithZeroVelocity) {
  // the residual of an exact solution is pure time-quadrature error
  auto mu = DiscreteMeasure::on_line({0.2, 0.8}, {0.5, 0.5});
  auto [c11, v11] = flow_curve(FlowMap::translation(pt({0.0})), mu, uniform_times(11));
  auto [c101, v101] = flow_curve(FlowMap::translation(pt({0.0})), mu, uniform_times(101));
  auto tests = make_test_functions("trig:2,bumps:3", 1);
  double r11 = continuity_residual(c11, v11, tests);
  double r101 = continuity_residual(c101, v101, tests);
  EXPECT_LE(r11, 5e-3);
  EXPECT_LE(r101, 5e-5);
  EXPECT_NEAR(r11 / r101, 100.0, 50.0);  // dt shrank 10x, residual ~ dt^2
}

TEST(CurvesContinuity, TranslationFlowSecondOrderResidual) {
  Rng rng(223);
  auto mu = cloud(rng, 2, 4, -0.5, 0.5);
  FlowMap flow = FlowMap::translation(pt({0.2, -0.1}));
  auto tests = make_test_functions("trig:1,bumps:3", 2);
  auto [curve, velocity] = flow_curve(flow, mu, uniform_times(101));  // dt = 1e-2
  EXPECT_LE(continuity_residual(curve, velocity, tests), 1e-4);
}

// With the wrong velocity 2u the residual is bounded below: for the test
// function x * chi(t) the weak integral evaluates to u * int chi dt plus
// quadrature error, and int t(1-t) dt = 1/6 before bump normalization.
TEST(CurvesContinuity, WrongVelocityDetected) {
  auto mu = DiscreteMeasure::on_line({0.1, 0.4, 0.7}, {0.3, 0.4, 0.3});
  FlowMap flow = FlowMap::translation(pt({1.0}));
  std::vector<TimeBump> bumps = make_bumps(1);
  TestFunction linear{"x", [](const Point& x) { return x[0]; },
                      [](const Point&) { return pt({1.0}); }};
  std::vector<SpaceTimeTestFunction> tests{{linear, bumps[0]}};
  double chi_scale = bumps[0].value(0.5) / (0.5 * 0.5);  // recover the normalization
  double expected = chi_scale / 6.0;                     // |u| = 1
  for (int steps : {11, 51, 101}) {
    auto [curve, velocity] = flow_curve(flow, mu, uniform_times(steps));
    VelocityCurve doubled;
    for (const auto& f : velocity.fields) doubled.fields.emplace_back(f.base, 2.0 * f.vectors);
    double r = continuity_residual(curve, doubled, tests);
    EXPECT_NEAR(r, expected, 5e-3);
    EXPECT_GE(r, 0.9 * expected);  // bounded below, independent of dt
  }
}

TEST(CurvesFlow, IdentityFlowIsConstant) {
  auto mu = DiscreteMeasure::on_line({0.0, 1.0}, {0.5, 0.5});
  auto [curve, velocity] = flow_curve(FlowMap::translation(pt({0.0})), mu, uniform_times(5));
  for (const auto& m : curve.measures) EXPECT_NEAR(wasserstein(m, mu, 2.0), 0.0, 1e-12);
  for (const auto& f : velocity.fields) EXPECT_DOUBLE_EQ(l2_norm(f), 0.0);
}

TEST(CurvesFlow, TranslationCarriesConstantVelocity) {
  Rng rng(227);
  auto mu = cloud(rng, 2, 3, -1, 1);
  Point u = pt({0.3, -0.4});
  auto [curve, velocity] = flow_curve(FlowMap::translation(u), mu, uniform_times(7));
  for (const auto& f : velocity.fields)
    for (int i = 0; i < f.base.size(); ++i)
      EXPECT_LE((f.at(i) - u).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_NEAR(wasserstein(curve.measures.front(), curve.measures.back(), 2.0), u.norm(), 1e-10);
}

TEST(CurvesFlow, ExponentialDilationSolvesContinuity) {
  auto mu = DiscreteMeasure::on_line({0.3, 0.6, 1.0}, {0.25, 0.5, 0.25});
  FlowMap flow = FlowMap::dilation(1.0, Point::Zero(1));  // e^t x, velocity v(y) = y
  auto [curve, velocity] = flow_curve(flow, mu, uniform_times(101));
  for (std::size_t j = 0; j < velocity.fields.size(); ++j) {
    const auto& f = velocity.fields[j];
    for (int i = 0; i < f.base.size(); ++i)
      EXPECT_NEAR(f.at(i)[0], f.base.atom(i)[0], 1e-12);  // v(y) = y
  }
  double r = continuity_residual(curve, velocity, make_test_functions("trig:1,bumps:3", 1));
  EXPECT_LE(r, 1e-4);
}

TEST(CurvesFlow, NonInvertibleOnAtomsRejected) {
  auto mu = DiscreteMeasure::on_line({-0.5, 0.5}, {0.5, 0.5});
  // both atoms collapse onto the origin at t = 1
  FlowMap collapse([](double t, const Point& x) -> Point { return (1.0 - t) * x; },
                   [](double, const Point& x) -> Point { return -x; }, "collapse");
  EXPECT_THROW(flow_curve(collapse, mu, uniform_times(3)), validation_error);
}

TEST(CurvesAction, ZeroForConstantCurve) {
  auto mu = DiscreteMeasure::on_line({0.0, 1.0}, {0.5, 0.5});
  auto [curve, velocity] = flow_curve(FlowMap::translation(pt({0.0})), mu, uniform_times(5));
  EXPECT_DOUBLE_EQ(bb_action(curve, velocity), 0.0);
}

TEST(CurvesAction, GeodesicActionEqualsW2) {
  Rng rng(229);
  for (int trial = 0; trial < 10; ++trial) {
    auto mu = cloud(rng, 2, 1 + rng.index(4), -1, 1);
    auto nu = cloud(rng, 2, 1 + rng.index(4), -1, 1);
    auto res = optimal_plan(mu, nu, 2.0);
    auto [curve, velocity] = displacement_geodesic(mu, nu, res.plan, uniform_times(11));
    EXPECT_NEAR(bb_action(curve, velocity), res.wp, 1e-6);
  }
}

TEST(CurvesAction, AdmissiblePairDominatesW2) {
  Rng rng(233);
  for (int trial = 0; trial < 10; ++trial) {
    auto mu = cloud(rng, 2, 3, -0.5, 0.5);
    FlowMap flow = FlowMap::curved_translation(pt({0.2, 0.1}), {pt({0.15, -0.2})}, {1.0});
    auto [curve, velocity] = flow_curve(flow, mu, uniform_times(101));
    double w2 = wasserstein(curve.measures.front(), curve.measures.back(), 2.0);
    EXPECT_GE(bb_action(curve, velocity), w2 - 1e-6);
  }
}

// Along a geodesic the particle velocity already has minimal norm, so its
// tangent projection cannot exceed the metric speed.
TEST(CurvesAction, ProjectedGeodesicVelocityBelowMetricSpeed) {
  Rng rng(239);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::MatrixXd a(4, 2), b(4, 2);
    int placed = 0;
    while (placed < 4) {
      Point x = rng.point(2, -1, 1);
      bool ok = true;
      for (int i = 0; i < placed && ok; ++i) ok = (a.row(i).transpose() - x).norm() > 0.25;
      if (ok) a.row(placed++) = x.transpose();
    }
    placed = 0;
    while (placed < 4) {
      Point x = rng.point(2, -1, 1);
      bool ok = true;
      for (int i = 0; i < placed && ok; ++i) ok = (b.row(i).transpose() - x).norm() > 0.25;
      if (ok) b.row(placed++) = x.transpose();
    }
    Eigen::VectorXd w = Eigen::VectorXd::Constant(4, 0.25);  // unique permutation plan
    auto mu = DiscreteMeasure::from_atoms(a, w);
    auto nu = DiscreteMeasure::from_atoms(b, w);
    auto res = optimal_plan(mu, nu, 2.0);
    auto [curve, velocity] = displacement_geodesic(mu, nu, res.plan, uniform_times(9));
    GradientDictionary dict = GradientDictionary::polynomial(2, 2);
    for (int j = 1; j < curve.samples() - 1; ++j) {
      TangentProjection P(curve.measures[static_cast<std::size_t>(j)],
                          MetricField::euclidean(), dict);
      double projected = l2_norm(P.apply(velocity.fields[static_cast<std::size_t>(j - 1)]));
      EXPECT_LE(projected, metric_derivative(curve, j) + 1e-6);
    }
  }
}

TEST(CurvesValidation, MisalignedVelocityRejected) {
  auto mu = DiscreteMeasure::on_line({0.0, 1.0}, {0.5, 0.5});
  MeasureCurve curve(uniform_times(4), {mu, mu, mu, mu});
  VelocityCurve too_few{{AtomVectorField::zero(mu)}};
  EXPECT_THROW(continuity_residual(curve, too_few, make_test_functions("poly:1,bumps:2", 1)),
               validation_error);
  auto nu = DiscreteMeasure::on_line({0.0, 2.0}, {0.5, 0.5});
  VelocityCurve wrong_base{{AtomVectorField::zero(nu), AtomVectorField::zero(mu)}};
  EXPECT_THROW(bb_action(curve, wrong_base), validation_error);
}

TEST(CurvesValidation, TimeGridChecked) {
  auto mu = DiscreteMeasure::dirac(pt({0.0}));
  EXPECT_THROW(MeasureCurve({0.0, 0.0, 1.0}, {mu, mu, mu}), validation_error);
  EXPECT_THROW(MeasureCurve({0.0, 1.5}, {mu, mu}), validation_error);
  EXPECT_THROW(MeasureCurve({0.0}, {mu}), validation_error);
}

TEST(CurvesBumps, VanishAtEndpointsAndScaleTame) {
  for (const TimeBump& chi : make_bumps(4)) {
    EXPECT_DOUBLE_EQ(chi.value(0.0), 0.0);
    EXPECT_DOUBLE_EQ(chi.value(1.0), 0.0);
    double center = chi.value(0.5);
    EXPECT_LE(std::abs(center), 0.26);
    // analytic derivative consistent with finite differences
    double fd = (chi.value(0.5 + 1e-6) - chi.value(0.5 - 1e-6)) / 2e-6;
    EXPECT_NEAR(chi.dvalue(0.5), fd, 1e-8);
  }
}
