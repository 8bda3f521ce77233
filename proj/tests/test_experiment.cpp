#include "adjust/config.hpp"
#include "adjust/evaluation.hpp"
#include "adjust/experiment.hpp"
#include "adjust/io.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace adjust;
namespace fs = std::filesystem;

namespace {

RunConfig small_config(const std::string& out) {
  RunConfig cfg;
  cfg.output_dir = out;
  cfg.seed = 11;
  cfg.phantom.size = 24;
  cfg.phantom.materials = {"Arsenic", "Bromine", "Rubidium"};
  cfg.spectral.channels = 12;
  cfg.spectral.dictionary = {"Zinc", "Arsenic", "Selenium", "Bromine", "Rubidium", "Yttrium"};
  cfg.geometry.angles.count = 16;
  cfg.method.adjust.max_iter = 40;
  cfg.method.cjoint.max_iter = 40;
  cfg.method.two_step.nmf_iters = 20;
  cfg.method.two_step.nmf_restarts = 2;
  cfg.sweep.rhos = {0.0, 0.1};
  cfg.sweep.max_iter = 10;
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(ADJUST_TEST_TMP) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + ADJUST_CLI + "\" " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

}  // namespace

TEST_CASE("scenario shapes") {
  const RunConfig cfg = small_config("unused");
  const Scenario s = build_scenario(cfg);
  CHECK(s.phantom.A.rows() == 24 * 24);
  CHECK(s.phantom_hi.A.rows() == 48 * 48);
  CHECK(s.geometry.n_det == 34);
  CHECK(s.dictionary.T.rows() == 6);
  CHECK(s.dictionary.T.cols() == 12);
  CHECK(s.F_true.rows() == 3);
  // Phantom materials are dictionary rows.
  for (Index m = 0; m < 3; ++m) {
    const Index d = s.dictionary.index_of(cfg.phantom.materials[static_cast<std::size_t>(m)]);
    CHECK((s.F_true.row(m) - s.dictionary.T.row(d)).norm() == 0.0);
  }

  RunConfig sc = cfg;
  apply_preset(sc, "sparse-channel");
  const Scenario s2 = build_scenario(sc);
  CHECK(s2.binning.channels() == 6);
  CHECK(s2.dictionary.T.cols() == 6);
}

TEST_CASE("noiseless simulation is consistent with the forward model") {
  RunConfig cfg = small_config("unused");
  cfg.noise = {false, 0.0};
  cfg.spectral.attenuation_scale = 0.1;
  const Scenario s = build_scenario(cfg);
  const Measurement m = simulate_measurement(cfg, s);
  REQUIRE(m.counts.minCoeff() >= kCountFloor);
  const Matrix ref = TomoOperator(s.phantom_hi.grid, s.geometry).forward(s.phantom_hi.A) * s.F_true;
  CHECK((m.Y - ref).norm() <= 1e-10 * ref.norm());
}

TEST_CASE("pipeline writes every artifact and evaluation matches a recomputation") {
  const fs::path dir = scratch("pipeline");
  const RunConfig cfg = small_config(dir.string());
  const ExperimentReport report = cmd_pipeline(cfg);
  CHECK(report.methods.size() == 4);
  for (const auto& a : report.artifacts) CHECK(fs::exists(dir / a));
  for (const char* f : {"Y.adjm", "counts.adjm", "A_gt.adjm", "F_true.adjm", "T.adjm",
                        "R_adjust.adjm", "history_adjust.csv", "history_rho_0.csv",
                        "history_rho_0.1.csv", "scenario.json", "config.json"})
    CHECK(fs::exists(dir / f));

  const Matrix gt = load_matrix((dir / "A_gt.adjm").string());
  for (const auto& m : report.methods) {
    const Matrix A = load_matrix((dir / ("A_" + m.method + ".adjm")).string());
    const auto again = greedy_match(A, gt);
    CHECK(aggregate_saturated(again).ssim == aggregate_saturated(m.match).ssim);
    CHECK(aggregate_saturated(again).mse == aggregate_saturated(m.match).mse);
  }

  // Sweep histories run the full iteration count.
  std::ifstream h(dir / "history_rho_0.csv");
  int lines = 0;
  std::string line;
  while (std::getline(h, line)) ++lines;
  CHECK(lines == 1 + cfg.sweep.max_iter);

  // rho = 0 history never increases.
  std::ifstream h0(dir / "history_rho_0.csv");
  std::getline(h0, line);
  double prev = std::numeric_limits<double>::infinity();
  int violations = 0;
  while (std::getline(h0, line)) {
    const auto a = line.find(','), b = line.find(',', a + 1);
    const double obj = parse_double(line.substr(a + 1, b - a - 1), "history");
    if (obj > prev) ++violations;
    prev = obj;
  }
  CHECK(violations == 0);

  const auto rj = nlohmann::json::parse(slurp(dir / "report.json"));
  CHECK(rj["methods"].size() == 4);
  CHECK(rj["config"]["seed"] == 11);
}

TEST_CASE("evaluation of perfect and permuted reconstructions") {
  const fs::path dir = scratch("perfect");
  const RunConfig cfg = small_config(dir.string());
  cmd_simulate(cfg);
  const Matrix gt = load_matrix((dir / "A_gt.adjm").string());
  const Matrix F = load_matrix((dir / "F_true.adjm").string());
  save_matrix((dir / "A_adjust.adjm").string(), gt);
  save_matrix((dir / "F_adjust.adjm").string(), F);
  Eigen::PermutationMatrix<Eigen::Dynamic> P(3);
  P.indices() << 1, 2, 0;
  save_matrix((dir / "A_cjoint.adjm").string(), gt * P);
  save_matrix((dir / "F_cjoint.adjm").string(), P.transpose() * F);
  const ExperimentReport r = cmd_evaluate(dir.string());
  REQUIRE(r.methods.size() == 2);
  for (const auto& m : r.methods) {
    CHECK(aggregate_saturated(m.match).ssim == doctest::Approx(1.0));
    CHECK(aggregate_saturated(m.match).mse == 0.0);
    CHECK(aggregate_saturated(m.match).psnr == kPsnrSaturation);
  }
  const std::string csv = slurp(dir / "results.csv");
  CHECK(csv.find("adjust,avg,avg,0,99,1") != std::string::npos);
  CHECK(csv.find("cjoint,avg,avg,0,99,1") != std::string::npos);
  CHECK(fs::exists(dir / "images" / "adjust_Arsenic.pgm"));
  CHECK(fs::exists(dir / "spectra_cjoint.csv"));
}

TEST_CASE("missing inputs are reported") {
  const fs::path dir = scratch("empty");
  const RunConfig cfg = small_config(dir.string());
  CHECK_THROWS_AS(cmd_reconstruct(cfg, "adjust"), Error);
  CHECK_THROWS_AS(cmd_evaluate(dir.string()), Error);
  CHECK_THROWS_AS(cmd_sweep_rho(cfg, {0.0}), Error);
}

TEST_CASE("CLI runs are byte-identical for identical seeds") {
  const fs::path base = scratch("cli");
  const RunConfig cfg = small_config("run");
  save_config((base / "cfg.json").string(), cfg);
  const std::string conf = "--config \"" + (base / "cfg.json").string() + "\"";
  REQUIRE(run_cli(conf + " --out \"" + (base / "a").string() + "\" pipeline") == 0);
  REQUIRE(run_cli(conf + " --out \"" + (base / "b").string() + "\" pipeline") == 0);
  REQUIRE(run_cli(conf + " --seed 12 --out \"" + (base / "c").string() + "\" simulate") == 0);

  int compared = 0;
  for (const auto& e : fs::recursive_directory_iterator(base / "a")) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), base / "a");
    const std::string name = rel.filename().string();
    // Wall-clock timings are the only nondeterministic fields.
    if (name.rfind("run_", 0) == 0 || name == "report.json" || name == "config.json") continue;
    CHECK_MESSAGE(slurp(e.path()) == slurp(base / "b" / rel), rel.string());
    ++compared;
  }
  CHECK(compared > 20);
  CHECK(slurp(base / "a" / "Y.adjm") != slurp(base / "c" / "Y.adjm"));

  // Step-by-step commands reproduce the pipeline output.
  const std::string out = " --out \"" + (base / "d").string() + "\" ";
  REQUIRE(run_cli(conf + out + "simulate") == 0);
  REQUIRE(run_cli(conf + out + "--method adjust reconstruct") == 0);
  CHECK(slurp(base / "a" / "A_adjust.adjm") == slurp(base / "d" / "A_adjust.adjm"));
  REQUIRE(run_cli(conf + out + "--method adjust reconstruct --rho 0.2 --max-iter 5") == 0);
  const auto run = nlohmann::json::parse(slurp(base / "d" / "run_adjust.json"));
  CHECK(run["iterations"] == 5);
  REQUIRE(run_cli(conf + out + "sweep-rho --rhos 0.05,0.3") == 0);
  CHECK(fs::exists(base / "d" / "history_rho_0.05.csv"));
  CHECK(fs::exists(base / "d" / "history_rho_0.3.csv"));
  REQUIRE(run_cli(conf + out + "evaluate") == 0);
  CHECK(fs::exists(base / "d" / "results.csv"));

  CHECK(run_cli(conf + out + "--preset nonsense simulate") != 0);
  CHECK(run_cli(conf + " --out \"" + (base / "none").string() + "\" reconstruct") != 0);
  CHECK(run_cli("--config /nonexistent.json simulate") != 0);
  CHECK(run_cli("") != 0);
}
