#pragma once

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "wass/geometry.hpp"
#include "wass/measures.hpp"
#include "wass/ot.hpp"
#include "wass/tangent.hpp"

namespace wass {

/// Time-sampled curve of measures on a strictly increasing grid in [0,1].
struct MeasureCurve {
  std::vector<double> times;
  std::vector<DiscreteMeasure> measures;

  MeasureCurve(std::vector<double> ts, std::vector<DiscreteMeasure> ms)
      : times(std::move(ts)), measures(std::move(ms)) {
    if (times.size() != measures.size())
      throw validation_error("curve: times and measures must align");
    if (times.size() < 2) throw validation_error("curve: need at least 2 samples");
    for (std::size_t j = 0; j < times.size(); ++j) {
      if (!(times[j] >= 0.0 && times[j] <= 1.0))
        throw validation_error("curve: times must lie in [0,1]");
      if (j > 0 && !(times[j] > times[j - 1]))
        throw validation_error("curve: times must be strictly increasing");
      if (measures[j].dim() != measures[0].dim())
        throw validation_error("curve: measures must share one ambient space");
    }
  }

  int samples() const { return static_cast<int>(times.size()); }
  int interior_samples() const { return samples() - 2; }
  int dim() const { return measures[0].dim(); }
};

/// One vector field per interior sample of a MeasureCurve; endpoints carry
/// no velocity. fields[j] is based on curve.measures[j+1].
struct VelocityCurve {
  std::vector<AtomVectorField> fields;
};

inline void check_aligned(const MeasureCurve& curve, const VelocityCurve& velocity) {
  if (static_cast<int>(velocity.fields.size()) != curve.interior_samples())
    throw validation_error("velocity: expected one field per interior curve sample");
  for (std::size_t j = 0; j < velocity.fields.size(); ++j)
    if (!velocity.fields[j].base.same_base(curve.measures[j + 1]))
      throw validation_error("velocity: field base does not match curve measure at sample " +
                             std::to_string(j + 1));
}

namespace detail {

inline double cheb_t(int n, double s) {
  if (n == 0) return 1.0;
  double prev = 1.0, cur = s;
  for (int k = 2; k <= n; ++k) {
    double next = 2.0 * s * cur - prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

inline double cheb_u(int n, double s) {
  if (n < 0) return 0.0;
  if (n == 0) return 1.0;
  double prev = 1.0, cur = 2.0 * s;
  for (int k = 2; k <= n; ++k) {
    double next = 2.0 * s * cur - prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

}  // namespace detail

/// Smooth-in-[0,1] time factor with chi(0) = chi(1) = 0.
struct TimeBump {
  std::string name;
  std::function<double(double)> value;
  std::function<double(double)> dvalue;
};

/// Chebyshev-modulated quadratic bumps chi_j(t) = t(1-t) T_j(2t-1),
/// rescaled so that sup |chi_j''| is about 1. The rescaling keeps the
/// quadrature constants of different j comparable.
inline std::vector<TimeBump> make_bumps(int count) {
  require(count >= 1, "bumps: count must be >= 1");
  std::vector<TimeBump> bumps;
  for (int j = 0; j < count; ++j) {
    auto raw_value = [j](double t) {
      return t * (1.0 - t) * detail::cheb_t(j, 2.0 * t - 1.0);
    };
    auto raw_dvalue = [j](double t) {
      double s = 2.0 * t - 1.0;
      return (1.0 - 2.0 * t) * detail::cheb_t(j, s) +
             2.0 * t * (1.0 - t) * j * detail::cheb_u(j - 1, s);
    };
    // sup |chi''| sampled by central differences of the analytic chi'.
    double sup = 0.0;
    const int steps = 2000;
    for (int s = 1; s < steps; ++s) {
      double t = static_cast<double>(s) / steps, dt = 0.5 / steps;
      sup = std::max(sup, std::abs(raw_dvalue(t + dt) - raw_dvalue(t - dt)) / (2.0 * dt));
    }
    double scale = 1.0 / (1.0 + sup);
    bumps.push_back(TimeBump{
        "bump" + std::to_string(j),
        [raw_value, scale](double t) { return scale * raw_value(t); },
        [raw_dvalue, scale](double t) { return scale * raw_dvalue(t); }});
  }
  return bumps;
}

/// phi(x, t) = psi(x) * chi(t) with chi compactly supported in (0,1).
struct SpaceTimeTestFunction {
  TestFunction psi;
  TimeBump chi;
};

/// Builds the product family from a spec like "trig:3,bumps:4" or
/// "poly:2,bumps:3".
inline std::vector<SpaceTimeTestFunction> make_test_functions(const std::string& spec, int d) {
  auto comma = spec.find(',');
  if (comma == std::string::npos)
    throw validation_error("test spec must look like trig:3,bumps:4");
  GradientDictionary spatial = GradientDictionary::parse(spec.substr(0, comma), d);
  std::string bumps_part = spec.substr(comma + 1);
  if (bumps_part.rfind("bumps:", 0) != 0)
    throw validation_error("test spec: second component must be bumps:<count>");
  int count = 0;
  try {
    count = std::stoi(bumps_part.substr(6));
  } catch (const std::exception&) {
    throw validation_error("test spec: bad bump count");
  }
  std::vector<TimeBump> bumps = make_bumps(count);
  std::vector<SpaceTimeTestFunction> tests;
  for (int k = 0; k < spatial.size(); ++k)
    for (const TimeBump& chi : bumps) tests.push_back(SpaceTimeTestFunction{spatial[k], chi});
  return tests;
}

/// Central-difference speed |mu'|(t_i) = W_2(mu_{i+1}, mu_{i-1}) / (t_{i+1} - t_{i-1}).
inline double metric_derivative(const MeasureCurve& curve, int t_index,
                                Ground ground = Ground::euclidean) {
  if (t_index <= 0 || t_index >= curve.samples() - 1)
    throw validation_error("metric_derivative: boundary index");
  double w = wasserstein(curve.measures[static_cast<std::size_t>(t_index + 1)],
                         curve.measures[static_cast<std::size_t>(t_index - 1)], 2.0, ground);
  return w / (curve.times[static_cast<std::size_t>(t_index + 1)] -
              curve.times[static_cast<std::size_t>(t_index - 1)]);
}

namespace detail {

inline std::vector<double> trapezoid_weights(const std::vector<double>& times) {
  const std::size_t n = times.size();
  std::vector<double> w(n, 0.0);
  w[0] = 0.5 * (times[1] - times[0]);
  for (std::size_t j = 1; j + 1 < n; ++j) w[j] = 0.5 * (times[j + 1] - times[j - 1]);
  w[n - 1] = 0.5 * (times[n - 1] - times[n - 2]);
  return w;
}

}  // namespace detail

/// Max over test functions of the time-quadrature of
/// integral of (d/dt phi + h(grad^h phi, v_t)) d mu_t.
/// Vanishes up to quadrature error exactly when (mu_t, v_t) solves the
/// weak continuity equation. The endpoint slices need no velocity because
/// chi kills the gradient term there.
inline double continuity_residual(const MeasureCurve& curve, const VelocityCurve& velocity,
                                  const std::vector<SpaceTimeTestFunction>& tests,
                                  const MetricField& h = MetricField::euclidean()) {
  check_aligned(curve, velocity);
  if (tests.empty()) throw validation_error("continuity_residual: no test functions");
  std::vector<double> qw = detail::trapezoid_weights(curve.times);
  const int N = curve.samples();
  double residual = 0.0;
  for (const auto& test : tests) {
    if (std::abs(test.chi.value(0.0)) > 1e-14 || std::abs(test.chi.value(1.0)) > 1e-14)
      throw validation_error("continuity_residual: time factor must vanish at t=0 and t=1");
    double acc = 0.0;
    for (int j = 0; j < N; ++j) {
      const DiscreteMeasure& mu = curve.measures[static_cast<std::size_t>(j)];
      double t = curve.times[static_cast<std::size_t>(j)];
      double chi = test.chi.value(t), dchi = test.chi.dvalue(t);
      double slice = 0.0;
      const bool interior = (j > 0 && j < N - 1);
      for (int i = 0; i < mu.size(); ++i) {
        Point x = mu.atom(i);
        double term = dchi * test.psi.value(x);
        if (interior && chi != 0.0) {
          const AtomVectorField& v = velocity.fields[static_cast<std::size_t>(j - 1)];
          term += chi * h.pair(x, h.inverse_at(x) * test.psi.gradient(x), v.at(i));
        }
        slice += mu.weight(i) * term;
      }
      acc += qw[static_cast<std::size_t>(j)] * slice;
    }
    residual = std::max(residual, std::abs(acc));
  }
  return residual;
}

/// Time-indexed family of maps with analytic time derivative; generates
/// exact solutions of the continuity equation by the method of
/// characteristics.
class FlowMap {
 public:
  using Fn = std::function<Point(double, const Point&)>;

  FlowMap(Fn f, Fn dfdt, std::string name)
      : f_(std::move(f)), dfdt_(std::move(dfdt)), name_(std::move(name)) {}

  /// f_t(x) = x + t u.
  static FlowMap translation(const Point& u) {
    return FlowMap([u](double t, const Point& x) -> Point { return x + t * u; },
                   [u](double, const Point&) { return u; }, "translation");
  }

  /// f_t(x) = x + t u + sum_r amps[r] sin(pi freqs[r] t); curved path, not
  /// a geodesic for nonzero amplitudes.
  static FlowMap curved_translation(const Point& u, const std::vector<Point>& amps,
                                    const std::vector<double>& freqs) {
    require(amps.size() == freqs.size(), "curved_translation: amps/freqs misaligned");
    return FlowMap(
        [u, amps, freqs](double t, const Point& x) {
          Point y = x + t * u;
          for (std::size_t r = 0; r < amps.size(); ++r)
            y += amps[r] * std::sin(M_PI * freqs[r] * t);
          return y;
        },
        [u, amps, freqs](double t, const Point&) {
          Point v = u;
          for (std::size_t r = 0; r < amps.size(); ++r)
            v += amps[r] * M_PI * freqs[r] * std::cos(M_PI * freqs[r] * t);
          return v;
        },
        "curved_translation");
  }

  /// f_t(x) = c + e^{rate t} (x - c).
  static FlowMap dilation(double rate, const Point& center) {
    return FlowMap(
        [rate, center](double t, const Point& x) -> Point {
          return center + std::exp(rate * t) * (x - center);
        },
        [rate, center](double t, const Point& x) -> Point {
          return rate * std::exp(rate * t) * (x - center);
        },
        "dilation");
  }

  /// Rigid rotation about a center, d = 2.
  static FlowMap rotation(double omega, const Point& center) {
    auto rot = [](double angle, const Point& z) {
      Point r(2);
      r[0] = std::cos(angle) * z[0] - std::sin(angle) * z[1];
      r[1] = std::sin(angle) * z[0] + std::cos(angle) * z[1];
      return r;
    };
    return FlowMap(
        [omega, center, rot](double t, const Point& x) -> Point {
          return center + rot(omega * t, x - center);
        },
        [omega, center, rot](double t, const Point& x) -> Point {
          Point z = rot(omega * t, x - center);
          Point v(2);
          v[0] = -omega * z[1];
          v[1] = omega * z[0];
          return v;
        },
        "rotation");
  }

  Point at(double t, const Point& x) const { return f_(t, x); }
  Point velocity(double t, const Point& x) const { return dfdt_(t, x); }
  const std::string& name() const { return name_; }

 private:
  Fn f_, dfdt_;
  std::string name_;
};

/// mu_t = (f_t)# mu0 with v_t(f_t(x)) = d/dt f_t(x) at interior samples.
/// Particle identity is tracked; f_t must stay injective on the atoms.
inline std::pair<MeasureCurve, VelocityCurve> flow_curve(const FlowMap& flow,
                                                         const DiscreteMeasure& mu0,
                                                         const std::vector<double>& times) {
  std::vector<DiscreteMeasure> measures;
  std::vector<AtomVectorField> fields;
  for (std::size_t j = 0; j < times.size(); ++j) {
    double t = times[j];
    Eigen::MatrixXd images(mu0.size(), mu0.dim());
    for (int i = 0; i < mu0.size(); ++i) {
      Point y = flow.at(t, mu0.atom(i));
      if (!all_finite(y))
        throw validation_error("flow_curve: non-finite image at atom " + std::to_string(i));
      images.row(i) = y.transpose();
    }
    DiscreteMeasure mu_t = DiscreteMeasure::from_atoms(images, mu0.weights());
    if (mu_t.size() != mu0.size())
      throw validation_error("flow_curve: map not invertible on atoms at t = " +
                             std::to_string(t));
    if (j > 0 && j + 1 < times.size()) {
      Eigen::MatrixXd v(mu0.size(), mu0.dim());
      for (int i = 0; i < mu0.size(); ++i)
        v.row(i) = flow.velocity(t, mu0.atom(i)).transpose();
      fields.emplace_back(mu_t, std::move(v));
    }
    measures.push_back(std::move(mu_t));
  }
  return {MeasureCurve(times, std::move(measures)), VelocityCurve{std::move(fields)}};
}

/// Trapezoid quadrature of t -> ||v_t||_{L^2(mu_t, h)}. Endpoint speeds
/// are extended from the nearest interior sample, which is exact for
/// constant-speed curves and O(dt^2) otherwise.
inline double bb_action(const MeasureCurve& curve, const VelocityCurve& velocity,
                        const MetricField& h = MetricField::euclidean()) {
  check_aligned(curve, velocity);
  if (curve.interior_samples() < 1)
    throw validation_error("bb_action: curve needs at least one interior sample");
  const int N = curve.samples();
  std::vector<double> qw = detail::trapezoid_weights(curve.times);
  std::vector<double> speed(static_cast<std::size_t>(N), 0.0);
  for (int j = 1; j < N - 1; ++j)
    speed[static_cast<std::size_t>(j)] = l2_norm(velocity.fields[static_cast<std::size_t>(j - 1)], h);
  speed[0] = speed[1];
  speed[static_cast<std::size_t>(N - 1)] = speed[static_cast<std::size_t>(N - 2)];
  double action = 0.0;
  for (int j = 0; j < N; ++j) action += qw[static_cast<std::size_t>(j)] * speed[static_cast<std::size_t>(j)];
  return action;
}

/// Displacement interpolation of an optimal quadratic plan, together with
/// its particle velocity fields (y - x per plan entry; mass-weighted means
/// where interpolated atoms coincide).
inline std::pair<MeasureCurve, VelocityCurve> displacement_geodesic(
    const DiscreteMeasure& mu, const DiscreteMeasure& nu, const TransportPlan& plan,
    const std::vector<double>& times) {
  std::vector<DiscreteMeasure> measures;
  std::vector<AtomVectorField> fields;
  const double q = quantum();
  for (std::size_t s = 0; s < times.size(); ++s) {
    double t = times[s];
    if (!(t >= 0.0 && t <= 1.0)) throw validation_error("displacement: t outside [0,1]");
    std::map<QuantKey, std::size_t> seen;
    std::vector<Point> atoms;
    std::vector<double> weights;
    std::vector<Point> momenta;  // mass-weighted velocity accumulators
    for (int i = 0; i < mu.size(); ++i)
      for (int j = 0; j < nu.size(); ++j) {
        double g = plan.matrix(i, j);
        if (g <= 0.0) continue;
        Point z = (1.0 - t) * mu.atom(i) + t * nu.atom(j);
        Point vel = nu.atom(j) - mu.atom(i);
        QuantKey key = quantize_point(z, q);
        auto it = seen.find(key);
        if (it == seen.end()) {
          seen.emplace(std::move(key), atoms.size());
          atoms.push_back(z);
          weights.push_back(g);
          momenta.push_back(g * vel);
        } else {
          weights[it->second] += g;
          momenta[it->second] += g * vel;
        }
      }
    Eigen::MatrixXd A(static_cast<Eigen::Index>(atoms.size()), mu.dim());
    Eigen::VectorXd w(static_cast<Eigen::Index>(atoms.size()));
    Eigen::MatrixXd V(static_cast<Eigen::Index>(atoms.size()), mu.dim());
    for (std::size_t r = 0; r < atoms.size(); ++r) {
      A.row(static_cast<Eigen::Index>(r)) = atoms[r].transpose();
      w[static_cast<Eigen::Index>(r)] = weights[r];
      V.row(static_cast<Eigen::Index>(r)) = (momenta[r] / weights[r]).transpose();
    }
    DiscreteMeasure mu_t = DiscreteMeasure::from_atoms(A, w);
    if (s > 0 && s + 1 < times.size()) fields.emplace_back(mu_t, std::move(V));
    measures.push_back(std::move(mu_t));
  }
  return {MeasureCurve(times, std::move(measures)), VelocityCurve{std::move(fields)}};
}

inline std::vector<double> uniform_times(int samples) {
  require(samples >= 2, "uniform_times: need at least 2 samples");
  std::vector<double> t(static_cast<std::size_t>(samples));
  for (int j = 0; j < samples; ++j) t[static_cast<std::size_t>(j)] = static_cast<double>(j) / (samples - 1);
  return t;
}

}  // namespace wass
