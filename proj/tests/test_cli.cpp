// End-to-end smoke test of the wass binary. Takes the binary path as
// argv[1], drives it through temp files and checks outputs, exit codes
// and byte-level determinism.

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

namespace {

int failures = 0;

void expect(bool cond, const std::string& what) {
  if (!cond) {
    ++failures;
    std::cerr << "[FAIL] " << what << "\n";
  } else {
    std::cout << "[ok] " << what << "\n";
  }
}

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

RunResult run(const std::string& cmd) {
  std::string full = cmd + " 2>&1";
  FILE* pipe = popen(full.c_str(), "r");
  if (!pipe) return {};
  RunResult r;
  std::array<char, 4096> buf;
  while (std::size_t got = fread(buf.data(), 1, buf.size(), pipe)) r.output.append(buf.data(), got);
  int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: cli_smoke <path-to-wass-binary>\n";
    return 2;
  }
  std::string wass = argv[1];
  std::string dir = "/tmp/wass_cli_smoke";
  run("rm -rf " + dir + " && mkdir -p " + dir);

  write_file(dir + "/a.json",
             R"({"d": 1, "atoms": [[0.0], [1.0]], "weights": [0.5, 0.5]})");
  write_file(dir + "/b.json",
             R"({"d": 1, "atoms": [[2.0], [3.0]], "weights": [0.5, 0.5]})");

  // distance of a measure to itself is zero
  auto self = run(wass + " distance --mu " + dir + "/a.json --nu " + dir + "/a.json --p 2");
  expect(self.exit_code == 0, "distance self exit code 0");
  expect(self.output.find("\"wp\": 0") != std::string::npos, "distance self prints wp 0");

  // the hand-enumerated two-atom pair
  auto dist = run(wass + " distance --mu " + dir + "/a.json --nu " + dir + "/b.json --p 2");
  expect(dist.output.find("\"wp\": 2") != std::string::npos, "distance prints wp 2");
  expect(dist.output.find("\"cost\": 4") != std::string::npos, "distance prints cost 4");

  // plan output parses and is byte-identical across runs
  auto plan1 = run(wass + " plan --mu " + dir + "/a.json --nu " + dir + "/b.json --p 2");
  auto plan2 = run(wass + " plan --mu " + dir + "/a.json --nu " + dir + "/b.json --p 2");
  expect(plan1.exit_code == 0, "plan exit code 0");
  expect(plan1.output == plan2.output, "plan output deterministic");
  expect(plan1.output.find("\"plan\"") != std::string::npos, "plan JSON has plan matrix");

  // geodesic then verify-continuity pipeline (short hop keeps the
  // quadrature constant small)
  write_file(dir + "/b_near.json",
             R"({"d": 1, "atoms": [[0.3], [1.3]], "weights": [0.5, 0.5]})");
  auto geo = run(wass + " geodesic --mu " + dir + "/a.json --nu " + dir +
                 "/b_near.json --steps 41 --out-curve " + dir + "/curve.json --out-velocity " +
                 dir + "/velocity.json");
  expect(geo.exit_code == 0, "geodesic exit code 0");
  auto verify = run(wass + " verify-continuity --curve " + dir + "/curve.json --velocity " + dir +
                    "/velocity.json --tests trig:1,bumps:3");
  expect(verify.exit_code == 0, "verify-continuity exit code 0");
  double residual = -1.0;
  if (auto pos = verify.output.find(": "); pos != std::string::npos)
    residual = std::atof(verify.output.c_str() + pos + 2);
  expect(residual >= 0.0 && residual < 1e-3, "geodesic residual below 1e-3");

  // geodesic outputs byte-identical on rerun
  std::string curve_first = slurp(dir + "/curve.json");
  run(wass + " geodesic --mu " + dir + "/a.json --nu " + dir +
      "/b_near.json --steps 41 --out-curve " + dir + "/curve.json --out-velocity " + dir +
      "/velocity.json");
  expect(curve_first == slurp(dir + "/curve.json"), "geodesic curve file deterministic");

  // counterexample guard: constant nu must be rejected with exit 2
  auto cex0 = run(wass + " counterexample --eps 0 --K 3 --grid 8");
  expect(cex0.exit_code == 2, "counterexample eps=0 exits 2");
  expect(cex0.output.find("nonconstant") != std::string::npos,
         "counterexample eps=0 names the violated hypothesis");

  // counterexample CSV table
  auto cex = run(wass + " counterexample --eps 0.5 --K 3 --grid 8");
  expect(cex.exit_code == 0, "counterexample exit code 0");
  expect(cex.output.rfind("K,residual", 0) == 0, "counterexample prints CSV header");

  // project: a dictionary gradient projects to itself (residual ~ 0)
  write_file(dir + "/field.json", R"({"vectors": [[1.0], [1.0]]})");
  auto proj = run(wass + " project --mu " + dir + "/a.json --field " + dir +
                  "/field.json --dict poly:2");
  expect(proj.exit_code == 0, "project exit code 0");
  expect(proj.output.find("\"residual\": ") != std::string::npos, "project prints residual");

  // pushdiff on the doubling map: estimate and bound both 2
  auto push = run(wass + " pushdiff --map scaling:2 --mu " + dir + "/a.json --field " + dir +
                  "/field.json --dict poly:2");
  expect(push.exit_code == 0, "pushdiff exit code 0");
  expect(push.output.find("\"bound\": 2") != std::string::npos, "pushdiff bound is 2");

  // mix with decomposition summary
  write_file(dir + "/c.json",
             R"({"d": 1, "atoms": [[1.0], [4.0]], "weights": [0.3, 0.7]})");
  auto mix = run(wass + " mix --mu " + dir + "/a.json --nu " + dir + "/c.json --lambda 0.5");
  expect(mix.exit_code == 0, "mix exit code 0");
  expect(mix.output.find("\"C\": 1") != std::string::npos, "mix reports one shared atom");

  // malformed input: exit 2 with a named field
  write_file(dir + "/broken.json", R"({"d": 1, "atoms": [[0.0]]})");
  auto broken = run(wass + " distance --mu " + dir + "/broken.json --nu " + dir + "/a.json");
  expect(broken.exit_code == 2, "missing field exits 2");
  expect(broken.output.find("weights") != std::string::npos, "missing field is named");

  // WASS_QUANTIZE coarsens the merge grid: the two atoms of a.json merge
  auto coarse = run("WASS_QUANTIZE=10 " + wass + " distance --mu " + dir + "/a.json --nu " + dir +
                    "/a.json");
  expect(coarse.exit_code == 0, "WASS_QUANTIZE accepted");

  // one fast check suite through the CLI
  auto check = run(wass + " check disintegration --seed 7");
  expect(check.exit_code == 0, "check disintegration exits 0");
  expect(check.output.find("[PASS] disintegration") != std::string::npos,
         "check prints PASS line");

  // unknown suite name is a validation error
  auto unknown = run(wass + " check no-such-suite");
  expect(unknown.exit_code == 2, "unknown suite exits 2");

  if (failures > 0) {
    std::cerr << failures << " CLI smoke checks failed\n";
    return 1;
  }
  std::cout << "all CLI smoke checks passed\n";
  return 0;
}
