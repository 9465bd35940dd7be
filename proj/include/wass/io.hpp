#pragma once

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "wass/curves.hpp"
#include "wass/geometry.hpp"
#include "wass/measures.hpp"
#include "wass/ot.hpp"

namespace wass {

namespace detail {

/// Shortest exact representation (up to 17 significant digits).
inline std::string num_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Fixed scientific form with 17 significant digits; used for weights,
/// which must serialize with at least 15.
inline std::string num_e(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

inline const nlohmann::json& field_of(const nlohmann::json& j, const char* name,
                                      const char* what) {
  auto it = j.find(name);
  if (it == j.end())
    throw validation_error(std::string(what) + ": missing field '" + name + "'");
  return *it;
}

}  // namespace detail

// --- measures:  {"d": int, "atoms": [[d reals]...], "weights": [reals]} ---

inline DiscreteMeasure measure_from_json(const nlohmann::json& j) {
  const char* what = "measure json";
  const auto& jd = detail::field_of(j, "d", what);
  const auto& ja = detail::field_of(j, "atoms", what);
  const auto& jw = detail::field_of(j, "weights", what);
  if (!jd.is_number_integer() || jd.get<int>() < 1)
    throw validation_error("measure json: 'd' must be a positive integer");
  const int d = jd.get<int>();
  if (!ja.is_array() || !jw.is_array())
    throw validation_error("measure json: 'atoms' and 'weights' must be arrays");
  if (ja.size() != jw.size())
    throw validation_error("measure json: 'atoms' and 'weights' must have equal length");
  Eigen::MatrixXd atoms(static_cast<Eigen::Index>(ja.size()), d);
  Eigen::VectorXd weights(static_cast<Eigen::Index>(jw.size()));
  for (std::size_t i = 0; i < ja.size(); ++i) {
    const auto& row = ja[i];
    if (!row.is_array() || static_cast<int>(row.size()) != d)
      throw validation_error("measure json: atom " + std::to_string(i) + " must have " +
                             std::to_string(d) + " coordinates");
    for (int c = 0; c < d; ++c) {
      if (!row[static_cast<std::size_t>(c)].is_number())
        throw validation_error("measure json: atom " + std::to_string(i) +
                               " has a non-numeric coordinate");
      atoms(static_cast<Eigen::Index>(i), c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    if (!jw[i].is_number())
      throw validation_error("measure json: weight " + std::to_string(i) + " is not a number");
    weights[static_cast<Eigen::Index>(i)] = jw[i].get<double>();
  }
  return DiscreteMeasure::from_atoms(atoms, weights);
}

inline void write_measure_json(std::ostream& os, const DiscreteMeasure& mu) {
  os << "{\"d\": " << mu.dim() << ", \"atoms\": [";
  for (int i = 0; i < mu.size(); ++i) {
    os << (i ? ", [" : "[");
    for (int c = 0; c < mu.dim(); ++c)
      os << (c ? ", " : "") << detail::num_g(mu.atoms()(i, c));
    os << "]";
  }
  os << "], \"weights\": [";
  for (int i = 0; i < mu.size(); ++i) os << (i ? ", " : "") << detail::num_e(mu.weight(i));
  os << "]}";
}

inline std::string measure_to_json(const DiscreteMeasure& mu) {
  std::ostringstream os;
  write_measure_json(os, mu);
  return os.str();
}

// --- vector fields:  {"vectors": [[d reals]...]} ---

inline AtomVectorField field_from_json(const nlohmann::json& j, const DiscreteMeasure& base) {
  const auto& jv = detail::field_of(j, "vectors", "field json");
  if (!jv.is_array() || static_cast<int>(jv.size()) != base.size())
    throw validation_error("field json: 'vectors' must list one vector per atom (" +
                           std::to_string(base.size()) + ")");
  Eigen::MatrixXd v(base.size(), base.dim());
  for (std::size_t i = 0; i < jv.size(); ++i) {
    const auto& row = jv[i];
    if (!row.is_array() || static_cast<int>(row.size()) != base.dim())
      throw validation_error("field json: vector " + std::to_string(i) + " must have " +
                             std::to_string(base.dim()) + " entries");
    for (int c = 0; c < base.dim(); ++c)
      v(static_cast<Eigen::Index>(i), c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return AtomVectorField(base, std::move(v));
}

inline void write_field_json(std::ostream& os, const AtomVectorField& v) {
  os << "{\"vectors\": [";
  for (int i = 0; i < v.vectors.rows(); ++i) {
    os << (i ? ", [" : "[");
    for (int c = 0; c < v.vectors.cols(); ++c)
      os << (c ? ", " : "") << detail::num_g(v.vectors(i, c));
    os << "]";
  }
  os << "]}";
}

// --- curves:  {"times": [...], "measures": [<measure>...]} ---

inline MeasureCurve curve_from_json(const nlohmann::json& j) {
  const auto& jt = detail::field_of(j, "times", "curve json");
  const auto& jm = detail::field_of(j, "measures", "curve json");
  if (!jt.is_array() || !jm.is_array() || jt.size() != jm.size())
    throw validation_error("curve json: 'times' and 'measures' must be arrays of equal length");
  std::vector<double> times;
  std::vector<DiscreteMeasure> measures;
  for (std::size_t s = 0; s < jt.size(); ++s) {
    times.push_back(jt[s].get<double>());
    measures.push_back(measure_from_json(jm[s]));
  }
  return MeasureCurve(std::move(times), std::move(measures));
}

inline void write_curve_json(std::ostream& os, const MeasureCurve& curve) {
  os << "{\"times\": [";
  for (std::size_t s = 0; s < curve.times.size(); ++s)
    os << (s ? ", " : "") << detail::num_g(curve.times[s]);
  os << "], \"measures\": [";
  for (std::size_t s = 0; s < curve.measures.size(); ++s) {
    if (s) os << ", ";
    write_measure_json(os, curve.measures[s]);
  }
  os << "]}";
}

// --- velocities:  {"times": [interior...], "fields": [[[d reals]...]...]} ---

inline VelocityCurve velocity_from_json(const nlohmann::json& j, const MeasureCurve& curve) {
  const auto& jt = detail::field_of(j, "times", "velocity json");
  const auto& jf = detail::field_of(j, "fields", "velocity json");
  if (!jt.is_array() || !jf.is_array() || jt.size() != jf.size())
    throw validation_error("velocity json: 'times' and 'fields' must be arrays of equal length");
  if (static_cast<int>(jt.size()) != curve.interior_samples())
    throw validation_error("velocity json: expected one field per interior curve sample (" +
                           std::to_string(curve.interior_samples()) + ")");
  VelocityCurve velocity;
  for (std::size_t s = 0; s < jt.size(); ++s) {
    double t = jt[s].get<double>();
    double expected = curve.times[s + 1];
    if (std::abs(t - expected) > 1e-12)
      throw validation_error("velocity json: time sample " + std::to_string(s) +
                             " does not match the curve's interior grid");
    const auto& rows = jf[s];
    const DiscreteMeasure& base = curve.measures[s + 1];
    if (!rows.is_array() || static_cast<int>(rows.size()) != base.size())
      throw validation_error("velocity json: field " + std::to_string(s) +
                             " must list one vector per atom");
    Eigen::MatrixXd v(base.size(), base.dim());
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (int c = 0; c < base.dim(); ++c)
        v(static_cast<Eigen::Index>(i), c) = rows[i][static_cast<std::size_t>(c)].get<double>();
    velocity.fields.emplace_back(base, std::move(v));
  }
  return velocity;
}

inline void write_velocity_json(std::ostream& os, const MeasureCurve& curve,
                                const VelocityCurve& velocity) {
  check_aligned(curve, velocity);
  os << "{\"times\": [";
  for (std::size_t s = 0; s < velocity.fields.size(); ++s)
    os << (s ? ", " : "") << detail::num_g(curve.times[s + 1]);
  os << "], \"fields\": [";
  for (std::size_t s = 0; s < velocity.fields.size(); ++s) {
    const Eigen::MatrixXd& v = velocity.fields[s].vectors;
    os << (s ? ", [" : "[");
    for (int i = 0; i < v.rows(); ++i) {
      os << (i ? ", [" : "[");
      for (int c = 0; c < v.cols(); ++c) os << (c ? ", " : "") << detail::num_g(v(i, c));
      os << "]";
    }
    os << "]";
  }
  os << "]}";
}

// --- plans ---

inline void write_plan_json(std::ostream& os, const TransportPlan& plan, double cost, double wp) {
  os << "{\"wp\": " << detail::num_g(wp) << ", \"cost\": " << detail::num_g(cost)
     << ", \"plan\": [";
  for (int i = 0; i < plan.matrix.rows(); ++i) {
    os << (i ? ", [" : "[");
    for (int j = 0; j < plan.matrix.cols(); ++j)
      os << (j ? ", " : "") << detail::num_e(plan.matrix(i, j));
    os << "]";
  }
  os << "]}";
}

// --- file helpers ---

inline nlohmann::json parse_json_file(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw validation_error(std::string(what) + ": cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw validation_error(std::string(what) + ": malformed JSON in '" + path +
                           "': " + e.what());
  }
}

inline DiscreteMeasure read_measure_file(const std::string& path) {
  return measure_from_json(parse_json_file(path, "measure"));
}

inline MeasureCurve read_curve_file(const std::string& path) {
  return curve_from_json(parse_json_file(path, "curve"));
}

inline VelocityCurve read_velocity_file(const std::string& path, const MeasureCurve& curve) {
  return velocity_from_json(parse_json_file(path, "velocity"), curve);
}

inline AtomVectorField read_field_file(const std::string& path, const DiscreteMeasure& base) {
  return field_from_json(parse_json_file(path, "field"), base);
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw validation_error("cannot open '" + path + "' for writing");
  out << content;
}

}  // namespace wass
