#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "pflow/grid.hpp"

namespace {

namespace fs = std::filesystem;

struct Sandbox {
  fs::path dir;
  Sandbox() {
    dir = fs::temp_directory_path() / ("pflow_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~Sandbox() { fs::remove_all(dir); }

  std::string file(const std::string& name, const std::string& content) const {
    auto p = dir / name;
    std::ofstream out(p);
    out << content;
    return p.string();
  }
};

int run(const std::string& args) {
  const std::string cmd = std::string(PFLOW_BIN) + " " + args + " >/dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kScalarCfg =
    "domain.kind = interval\n"
    "domain.L = 1\n"
    "domain.n = 1\n"
    "flow.p = 2\n"
    "flow.tau = 0.1\n"
    "flow.max_steps = 200\n"
    "solver.tol_inner = 1e-13\n";

}  // namespace

TEST_CASE("usage and config errors exit 1") {
  CHECK(run("") == 1);
  CHECK(run("bogus") == 1);
  Sandbox sb;
  auto bad = sb.file("bad.cfg", "flow.tau = 0\n");
  CHECK(run("flow --config " + bad) == 1);
  auto unknown = sb.file("unknown.cfg", "flow.tau = 0.1\nnope.key = 2\n");
  CHECK(run("flow --config " + unknown) == 1);
  auto inconsistent = sb.file("inc.cfg", "flow.tau = 0.01\nflow.N = 100\nflow.T = 2\n");
  CHECK(run("flow --config " + inconsistent) == 1);
}

TEST_CASE("scalar flow run writes artifacts and the closed-form summary") {
  Sandbox sb;
  auto cfg = sb.file("scalar.cfg", kScalarCfg);
  auto out = (sb.dir / "out").string();
  CHECK(run("groundstate --config " + cfg + " --out " + out) == 0);

  const std::string summary = slurp(fs::path(out) / "summary.txt");
  CHECK(summary.find("lambda_p = 8") != std::string::npos);
  CHECK(summary.find("converged = true") != std::string::npos);

  // round trip: the psi snapshot parses back bit-identically
  pflow::Snapshot snap = pflow::read_snapshot((fs::path(out) / "psi.txt").string());
  auto grid = pflow::Grid::interval(1.0, 1);
  pflow::GridFunction psi = pflow::snapshot_function(snap, grid);
  pflow::write_snapshot((fs::path(out) / "psi2.txt").string(), psi, snap.p, snap.t);
  CHECK(slurp(fs::path(out) / "psi.txt") == slurp(fs::path(out) / "psi2.txt"));
}

TEST_CASE("flow command on a fixed horizon") {
  Sandbox sb;
  auto cfg = sb.file("run.cfg",
                     "domain.n = 31\n"
                     "flow.p = 2\n"
                     "flow.N = 50\n"
                     "flow.T = 0.5\n"
                     "flow.init = sine:1\n");
  auto out = (sb.dir / "out").string();
  CHECK(run("flow --config " + cfg + " --out " + out) == 0);
  const std::string series = slurp(fs::path(out) / "series.csv");
  CHECK(series.rfind("k,t,mass,energy,rayleigh,lambda_hat,mu_hat,rescaled_energy,"
                     "dissipation_cum,vt_sup\n", 0) == 0);
  // header + 51 records
  CHECK(std::count(series.begin(), series.end(), '\n') == 52);
  CHECK(fs::exists(fs::path(out) / "final_state.txt"));
}

TEST_CASE("determinism: identical config and seed give identical bytes") {
  Sandbox sb;
  auto cfg = sb.file("det.cfg",
                     "domain.n = 15\n"
                     "flow.p = 3\n"
                     "flow.N = 20\n"
                     "flow.T = 0.2\n"
                     "flow.init = random\n");
  auto out1 = (sb.dir / "o1").string();
  auto out2 = (sb.dir / "o2").string();
  CHECK(run("flow --config " + cfg + " --seed 7 --out " + out1) == 0);
  CHECK(run("flow --config " + cfg + " --seed 7 --out " + out2) == 0);
  CHECK(slurp(fs::path(out1) / "series.csv") == slurp(fs::path(out2) / "series.csv"));
  CHECK(slurp(fs::path(out1) / "final_state.txt") == slurp(fs::path(out2) / "final_state.txt"));

  auto out3 = (sb.dir / "o3").string();
  CHECK(run("flow --config " + cfg + " --seed 8 --out " + out3) == 0);
  CHECK(slurp(fs::path(out1) / "series.csv") != slurp(fs::path(out3) / "series.csv"));
}

TEST_CASE("set overrides beat file values") {
  Sandbox sb;
  auto cfg = sb.file("ovr.cfg",
                     "domain.n = 9\n"
                     "flow.p = 2\n"
                     "flow.tau = 0.1\n"
                     "flow.max_steps = 50\n");
  auto out = (sb.dir / "out").string();
  CHECK(run("groundstate --config " + cfg + " --set flow.p=3 --out " + out) == 0);
  const std::string series = slurp(fs::path(out) / "summary.txt");
  CHECK(series.find("lambda_p") != std::string::npos);
  // p=3 on the unit interval: lambda well away from the p=2 value 9.6...
  pflow::Snapshot snap = pflow::read_snapshot((fs::path(out) / "psi.txt").string());
  CHECK(snap.p == 3.0);
}

TEST_CASE("degenerate zero data exits 0 and is flagged") {
  Sandbox sb;
  auto cfg = sb.file("zero.cfg",
                     "domain.n = 9\n"
                     "flow.p = 2\n"
                     "flow.tau = 0.1\n"
                     "flow.init = mixture:0\n");  // the zero mixture
  auto out = (sb.dir / "out").string();
  CHECK(run("flow --config " + cfg + " --out " + out) == 0);
  const std::string summary = slurp(fs::path(out) / "summary.txt");
  CHECK(summary.find("degenerate_zero = true") != std::string::npos);
}

TEST_CASE("sweep writes the per-exponent csv") {
  Sandbox sb;
  auto cfg = sb.file("sweep.cfg",
                     "domain.n = 15\n"
                     "flow.tau = 0.1\n"
                     "flow.init = bump\n"
                     "flow.stop_tol = 1e-7\n");
  auto out = (sb.dir / "out").string();
  CHECK(run("sweep --p-list 2,3 --config " + cfg + " --out " + out) == 0);
  const std::string csv = slurp(fs::path(out) / "sweep.csv");
  CHECK(csv.rfind("p,lambda_p,lambda_root,mu_p,steps\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}
