// wass: command-line front end for the Wasserstein calculus library.
//
// Subcommands: distance, plan, geodesic, project, verify-continuity,
// pushdiff, counterexample, mix, check. Inputs are the JSON formats
// documented in the README; outputs are JSON on stdout (CSV for tables).
// Exit codes: 0 success, 2 invalid input, 1 internal error.

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wass/wass.hpp"

namespace {

wass::Ground ground_of(bool torus) {
  return torus ? wass::Ground::torus : wass::Ground::euclidean;
}

wass::MetricField metric_of(const std::string& name, double eps) {
  if (name == "euclidean") return wass::MetricField::euclidean();
  if (name == "conformal") {
    if (eps == 0.0) throw wass::validation_error("nu must be nonconstant (eps != 0)");
    return wass::MetricField::conformal_cosine(eps);
  }
  throw wass::validation_error("unknown metric '" + name + "' (euclidean|conformal)");
}

wass::PointMap parse_map(const std::string& spec, int d) {
  auto colon = spec.find(':');
  std::string kind = spec.substr(0, colon == std::string::npos ? spec.size() : colon);
  std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (kind == "identity") return wass::PointMap::identity(d);
  if (kind == "square") {
    if (d != 1) throw wass::validation_error("map square: needs a 1-d measure");
    return wass::PointMap::square1d();
  }
  if (kind == "rotation") {
    if (d != 2) throw wass::validation_error("map rotation: needs a 2-d measure");
    if (arg.empty()) throw wass::validation_error("map rotation: missing angle");
    return wass::PointMap::rotation2d(std::stod(arg));
  }
  if (kind == "scaling") {
    if (arg.empty()) throw wass::validation_error("map scaling: missing factor");
    return wass::PointMap::scaling(std::stod(arg), d);
  }
  if (kind == "affine") {
    if (arg.empty()) throw wass::validation_error("map affine: missing file path");
    nlohmann::json j = wass::parse_json_file(arg, "affine map");
    const auto& jA = wass::detail::field_of(j, "A", "affine map json");
    const auto& jb = wass::detail::field_of(j, "b", "affine map json");
    Eigen::MatrixXd A(static_cast<Eigen::Index>(jA.size()),
                      static_cast<Eigen::Index>(jA.empty() ? 0 : jA[0].size()));
    for (std::size_t r = 0; r < jA.size(); ++r)
      for (std::size_t c = 0; c < jA[r].size(); ++c)
        A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = jA[r][c].get<double>();
    Eigen::VectorXd b(static_cast<Eigen::Index>(jb.size()));
    for (std::size_t r = 0; r < jb.size(); ++r) b[static_cast<Eigen::Index>(r)] = jb[r].get<double>();
    if (A.cols() != d) throw wass::validation_error("map affine: expects dimension " +
                                                    std::to_string(A.cols()));
    return wass::PointMap::affine(A, b);
  }
  throw wass::validation_error("unknown map '" + spec +
                               "' (identity|square|rotation:theta|scaling:s|affine:file.json)");
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Wasserstein calculus on finitely supported measures"};
  app.require_subcommand(1);

  // distance / plan
  std::string mu_path, nu_path, out_path;
  double p = 2.0;
  bool torus = false;
  auto* distance = app.add_subcommand("distance", "W_p distance between two measures");
  distance->add_option("--mu", mu_path, "source measure JSON")->required();
  distance->add_option("--nu", nu_path, "target measure JSON")->required();
  distance->add_option("--p", p, "cost exponent (>= 1)");
  distance->add_flag("--torus", torus, "flat-torus ground distance on [0,1)^d");

  auto* plan = app.add_subcommand("plan", "optimal transport plan between two measures");
  plan->add_option("--mu", mu_path, "source measure JSON")->required();
  plan->add_option("--nu", nu_path, "target measure JSON")->required();
  plan->add_option("--p", p, "cost exponent (>= 1)");
  plan->add_flag("--torus", torus, "flat-torus ground distance on [0,1)^d");
  plan->add_option("--out", out_path, "also write the result to this file");

  // geodesic
  int steps = 11;
  std::string out_curve = "geodesic_curve.json", out_velocity = "geodesic_velocity.json";
  auto* geodesic = app.add_subcommand("geodesic",
                                      "displacement interpolation with particle velocities");
  geodesic->add_option("--mu", mu_path, "source measure JSON")->required();
  geodesic->add_option("--nu", nu_path, "target measure JSON")->required();
  geodesic->add_option("--steps", steps, "number of time samples (>= 2)");
  geodesic->add_option("--out-curve", out_curve, "output curve JSON path");
  geodesic->add_option("--out-velocity", out_velocity, "output velocity JSON path");

  // project
  std::string field_path, dict_spec = "poly:3", metric_name = "euclidean";
  double eps = 0.5;
  auto* project_cmd = app.add_subcommand("project", "tangent-space projection of a field");
  project_cmd->add_option("--mu", mu_path, "base measure JSON")->required();
  project_cmd->add_option("--field", field_path, "vector field JSON")->required();
  project_cmd->add_option("--dict", dict_spec, "gradient dictionary (poly:D | trig:K)");
  project_cmd->add_option("--metric", metric_name, "euclidean | conformal");
  project_cmd->add_option("--eps", eps, "conformal amplitude for --metric conformal");

  // verify-continuity
  std::string curve_path, velocity_path, tests_spec = "trig:2,bumps:3";
  auto* verify = app.add_subcommand("verify-continuity",
                                    "weak continuity-equation residual of a curve");
  verify->add_option("--curve", curve_path, "curve JSON")->required();
  verify->add_option("--velocity", velocity_path, "velocity JSON")->required();
  verify->add_option("--tests", tests_spec, "test family, e.g. trig:3,bumps:4");
  verify->add_option("--metric", metric_name, "euclidean | conformal");
  verify->add_option("--eps", eps, "conformal amplitude for --metric conformal");

  // pushdiff
  std::string map_spec;
  int samples = 32;
  std::uint64_t seed = 20240817;
  auto* pushdiff_cmd = app.add_subcommand("pushdiff",
                                          "differential of a pushforward map on a field");
  pushdiff_cmd->add_option("--map", map_spec,
                           "identity|square|rotation:theta|scaling:s|affine:file.json")
      ->required();
  pushdiff_cmd->add_option("--mu", mu_path, "base measure JSON")->required();
  pushdiff_cmd->add_option("--field", field_path, "vector field JSON")->required();
  pushdiff_cmd->add_option("--dict", dict_spec, "gradient dictionary at the image");
  pushdiff_cmd->add_option("--samples", samples, "samples for the operator-norm estimate");
  pushdiff_cmd->add_option("--seed", seed, "seed for the operator-norm sweep");

  // counterexample
  double cex_eps = 0.5;
  int cex_K = 4, cex_grid = 32;
  auto* cex = app.add_subcommand("counterexample",
                                 "conformal non-tangency residual table on the torus");
  cex->add_option("--eps", cex_eps, "conformal amplitude (must be nonzero)");
  cex->add_option("--K", cex_K, "largest trigonometric dictionary order (>= 2)");
  cex->add_option("--grid", cex_grid, "torus grid resolution per axis");

  // mix
  double lambda = 0.5;
  bool swap_lambda = false;
  std::vector<std::string> field_paths;
  auto* mix = app.add_subcommand("mix", "convex mixing lambda*mu + (1-lambda)*nu");
  mix->add_option("--mu", mu_path, "first measure JSON")->required();
  mix->add_option("--nu", nu_path, "second measure JSON")->required();
  mix->add_option("--lambda", lambda, "mixing weight in [0,1]");
  mix->add_flag("--swap-lambda", swap_lambda, "use 1-lambda instead");
  mix->add_option("--fields", field_paths, "fields on mu and nu (two paths)")->expected(2);

  // check
  std::string suite = "all";
  auto* check = app.add_subcommand("check", "run property-test suites of the theorem battery");
  check->add_option("suite", suite, "suite name or 'all'");
  check->add_option("--seed", seed, "seed for randomized sweeps");
  bool list_suites = false;
  check->add_flag("--list", list_suites, "list suite names and exit");

  CLI11_PARSE(app, argc, argv);

  std::ostringstream out;
  if (*distance) {
    wass::DiscreteMeasure mu = wass::read_measure_file(mu_path);
    wass::DiscreteMeasure nu = wass::read_measure_file(nu_path);
    wass::OtResult res = wass::optimal_plan(mu, nu, p, ground_of(torus));
    out << "{\"wp\": " << wass::detail::num_g(res.wp)
        << ", \"cost\": " << wass::detail::num_g(res.cost) << "}\n";
  } else if (*plan) {
    wass::DiscreteMeasure mu = wass::read_measure_file(mu_path);
    wass::DiscreteMeasure nu = wass::read_measure_file(nu_path);
    wass::OtResult res = wass::optimal_plan(mu, nu, p, ground_of(torus));
    wass::write_plan_json(out, res.plan, res.cost, res.wp);
    out << "\n";
    if (!out_path.empty()) wass::write_text_file(out_path, out.str());
  } else if (*geodesic) {
    wass::DiscreteMeasure mu = wass::read_measure_file(mu_path);
    wass::DiscreteMeasure nu = wass::read_measure_file(nu_path);
    wass::OtResult res = wass::optimal_plan(mu, nu, 2.0);
    auto [curve, velocity] =
        wass::displacement_geodesic(mu, nu, res.plan, wass::uniform_times(steps));
    std::ostringstream curve_os, velocity_os;
    wass::write_curve_json(curve_os, curve);
    wass::write_velocity_json(velocity_os, curve, velocity);
    wass::write_text_file(out_curve, curve_os.str() + "\n");
    wass::write_text_file(out_velocity, velocity_os.str() + "\n");
    out << "{\"wp\": " << wass::detail::num_g(res.wp) << ", \"curve\": \"" << out_curve
        << "\", \"velocity\": \"" << out_velocity << "\"}\n";
  } else if (*project_cmd) {
    wass::DiscreteMeasure mu = wass::read_measure_file(mu_path);
    wass::AtomVectorField v = wass::read_field_file(field_path, mu);
    wass::MetricField h = metric_of(metric_name, eps);
    wass::TangentProjection P(mu, h, wass::GradientDictionary::parse(dict_spec, mu.dim()));
    wass::AtomVectorField proj = P.apply(v);
    out << "{\"projected\": ";
    wass::write_field_json(out, proj);
    out << ", \"residual\": "
        << wass::detail::num_g(wass::l2_norm(
               wass::AtomVectorField(mu, v.vectors - proj.vectors), h))
        << "}\n";
  } else if (*verify) {
    wass::MeasureCurve curve = wass::read_curve_file(curve_path);
    wass::VelocityCurve velocity = wass::read_velocity_file(velocity_path, curve);
    wass::MetricField h = metric_of(metric_name, eps);
    double residual = wass::continuity_residual(
        curve, velocity, wass::make_test_functions(tests_spec, curve.dim()), h);
    out << "{\"residual\": " << wass::detail::num_g(residual) << "}\n";
  } else if (*pushdiff_cmd) {
    wass::DiscreteMeasure mu = wass::read_measure_file(mu_path);
    wass::AtomVectorField v = wass::read_field_file(field_path, mu);
    wass::PointMap f = parse_map(map_spec, mu.dim());
    wass::Disintegration dis = wass::disintegrate(f, mu);
    wass::AtomVectorField image = wass::pushforward_differential(dis, v);
    wass::GradientDictionary dict = wass::GradientDictionary::parse(dict_spec, f.out_dim());
    wass::TangentProjection P(dis.image, wass::MetricField::euclidean(), dict);
    wass::AtomVectorField projected = P.apply(image);
    wass::OperatorNormEstimate est = wass::operator_norm_estimate(f, mu, dict, samples, seed);
    out << "{\"image_field\": ";
    wass::write_field_json(out, image);
    out << ", \"projected\": ";
    wass::write_field_json(out, projected);
    out << ", \"residual\": "
        << wass::detail::num_g(wass::l2_norm(
               wass::AtomVectorField(dis.image, image.vectors - projected.vectors)))
        << ", \"operator_norm_estimate\": " << wass::detail::num_g(est.estimate)
        << ", \"bound\": " << wass::detail::num_g(est.bound) << "}\n";
  } else if (*cex) {
    if (cex_eps == 0.0) throw wass::validation_error("nu must be nonconstant (eps != 0)");
    out << "K,residual\n";
    for (const auto& row : wass::counterexample_table(cex_eps, cex_K, cex_grid))
      out << row.K << "," << wass::detail::num_g(row.residual) << "\n";
  } else if (*mix) {
    wass::DiscreteMeasure mu = wass::read_measure_file(mu_path);
    wass::DiscreteMeasure nu = wass::read_measure_file(nu_path);
    double l = swap_lambda ? 1.0 - lambda : lambda;
    wass::MixDecomposition dec = wass::decompose(mu, nu, l);
    double rho_min = 0.0, rho_max = 0.0;
    std::vector<int> shared = dec.part_indices(wass::MixPart::shared);
    for (std::size_t s = 0; s < shared.size(); ++s) {
      double r = dec.rho[static_cast<std::size_t>(shared[s])];
      rho_min = s == 0 ? r : std::min(rho_min, r);
      rho_max = s == 0 ? r : std::max(rho_max, r);
    }
    out << "{\"mixed\": ";
    wass::write_measure_json(out, dec.alpha);
    out << ", \"decomposition\": {\"A\": " << dec.part_indices(wass::MixPart::mu_only).size()
        << ", \"B\": " << dec.part_indices(wass::MixPart::nu_only).size()
        << ", \"C\": " << shared.size() << ", \"rho_min\": " << wass::detail::num_g(rho_min)
        << ", \"rho_max\": " << wass::detail::num_g(rho_max) << "}";
    if (!field_paths.empty()) {
      wass::AtomVectorField v = wass::read_field_file(field_paths[0], mu);
      wass::AtomVectorField w = wass::read_field_file(field_paths[1], nu);
      out << ", \"canonical_field\": ";
      wass::write_field_json(out, wass::canonical_field(dec, v, w));
    }
    out << "}\n";
  } else if (*check) {
    if (list_suites) {
      for (const std::string& name : wass::check_names()) out << name << "\n";
      std::cout << out.str();
      return 0;
    }
    std::vector<wass::CheckResult> results;
    if (suite == "all")
      results = wass::run_all_checks(seed);
    else
      results.push_back(wass::run_check(suite, seed));
    bool all_pass = true;
    for (const auto& r : results) {
      out << (r.passed ? "[PASS] " : "[FAIL] ") << r.name << ": " << r.detail << "\n";
      all_pass = all_pass && r.passed;
    }
    std::cout << out.str();
    return all_pass ? 0 : 1;
  }

  std::cout << out.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const wass::validation_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}
