#include "adjust/experiment.hpp"

#include "adjust/io.hpp"
#include "adjust/solvers.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

namespace adjust {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::array<std::string, 4> kMethods = {"adjust", "cjoint", "ru", "ur"};

std::string path_in(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void require_file(const std::string& path, const std::string& hint) {
  if (!fs::exists(path)) throw Error("missing input '" + path + "'" + hint);
}

AttenuationTable attenuation_for(const RunConfig& cfg, const ChannelBinning& binning) {
  if (cfg.spectral.attenuation != "synthetic") return load_attenuation_csv(cfg.spectral.attenuation);
  // Sample the model at the channel centers so binning is exact.
  std::vector<double> e = binning.centers;
  e.push_back(cfg.spectral.energy_min);
  e.push_back(cfg.spectral.energy_max);
  std::sort(e.begin(), e.end());
  e.erase(std::unique(e.begin(), e.end()), e.end());
  if (e.size() < 2) e.push_back(e.back() + 1.0);
  return synthetic_attenuation_table(reference_elements(), e, cfg.spectral.attenuation_scale);
}

MaterialMap render(const PhantomSpec& p, int n) {
  const int m = static_cast<int>(p.materials.size());
  MaterialMap map;
  if (p.kind == "disks") map = disks(n, m);
  else if (p.kind == "mixed_disks") map = mixed_disks(n, m);
  else map = shepp_logan(n, m);
  map.labels = p.materials;
  return map;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw Error("write to '" + path + "' failed");
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

std::string rho_tag(double rho) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), rho);
  return std::string(buf.data(), res.ptr);
}

Scenario build_scenario(const RunConfig& cfg) {
  cfg.validate();
  Scenario s;
  const int n = cfg.phantom.size;
  s.phantom_hi = render(cfg.phantom, 2 * n);
  s.phantom = downsample(s.phantom_hi, 2);
  s.phantom.labels = cfg.phantom.materials;

  const int n_det = cfg.geometry.detectors > 0
                        ? cfg.geometry.detectors
                        : static_cast<int>(std::ceil(std::sqrt(2.0) * n));
  const double spacing =
      cfg.geometry.detector_spacing > 0.0 ? cfg.geometry.detector_spacing : s.phantom.grid.pixel_size;
  s.geometry = ParallelGeometry(cfg.angle_list(), n_det, spacing);

  const ChannelBinning full =
      ChannelBinning::uniform(cfg.spectral.energy_min, cfg.spectral.energy_max, cfg.spectral.channels);
  const AttenuationTable table = attenuation_for(cfg, full);
  const SpectralDictionary binned = bin_attenuation(table, full);
  SpectralDictionary dict =
      cfg.spectral.dictionary.empty() ? binned : binned.subset(cfg.spectral.dictionary);
  SpectralDictionary truth = binned.subset(cfg.phantom.materials);

  std::vector<Index> keep(static_cast<std::size_t>(full.channels()));
  for (Index c = 0; c < full.channels(); ++c) keep[static_cast<std::size_t>(c)] = c;
  Index k = cfg.spectral.select_channels;
  if (k < 0) k = dict.size();
  if (k > 0 && k < full.channels()) keep = select_channels(dict, k);

  std::vector<double> centers;
  for (Index c : keep) centers.push_back(full.centers[static_cast<std::size_t>(c)]);
  s.channels = keep;
  s.binning = ChannelBinning(centers);
  s.dictionary = dict.channels_subset(keep);
  s.F_true = truth.channels_subset(keep).T;

  if (cfg.source.kind == "flat") {
    s.source = SourceSpectrum::flat(s.binning.channels(), cfg.source.photons);
  } else {
    const SourceProfile p = load_source_csv(cfg.source.path);
    s.source = SourceSpectrum::from_profile(p.energy_keV, p.intensity, s.binning, cfg.source.photons);
  }
  return s;
}

TomoOperator scenario_operator(const Scenario& s) { return TomoOperator(s.phantom.grid, s.geometry); }

Measurement simulate_measurement(const RunConfig& cfg, const Scenario& s) {
  Measurement m;
  NoiseConfig poisson_only{cfg.noise.poisson, 0.0};
  m.counts = simulate_counts(s.phantom_hi, s.phantom.grid, s.geometry, s.F_true, s.source,
                             poisson_only, cfg.seed);
  m.Y = log_correct(m.counts, s.source);
  if (cfg.noise.gaussian_percent > 0.0) {
    m.Y = add_gaussian_noise(m.Y, cfg.noise.gaussian_percent, cfg.seed + 1);
  }
  return m;
}

MethodOutput run_method(const RunConfig& cfg, const std::string& method, const TomoOperator& W,
                        const Eigen::Ref<const Matrix>& T, const Eigen::Ref<const Matrix>& Y,
                        int materials, const std::string& history_path) {
  require(is_method(method), "unknown method '" + method + "'");
  MethodOutput out;
  out.method = method;
  const auto t0 = std::chrono::steady_clock::now();
  if (method == "adjust") {
    AapmConfig ac = cfg.method.adjust;
    ac.seed = cfg.seed;
    std::unique_ptr<HistoryWriter> writer;
    if (!history_path.empty()) writer = std::make_unique<HistoryWriter>(history_path);
    AapmCallback cb;
    if (writer) cb = [&](const AapmState& st) { writer->append(st.history.back()); };
    AapmResult r = aapm(W, T, Y, materials, ac, cb);
    out.A = std::move(r.A);
    out.F = std::move(r.F);
    out.R = std::move(r.R);
    out.history = std::move(r.history);
    out.stop_reason = std::move(r.stop_reason);
  } else {
    JointResult r;
    if (method == "cjoint") {
      CJointConfig cc = cfg.method.cjoint;
      cc.seed = cfg.seed;
      r = cjoint(W, Y, materials, cc);
    } else {
      TwoStepConfig tc = cfg.method.two_step;
      tc.seed = cfg.seed;
      r = method == "ru" ? ru(W, Y, materials, tc) : ur(W, Y, materials, tc);
    }
    out.A = std::move(r.A);
    out.F = std::move(r.F);
    out.history = std::move(r.history);
    out.stop_reason = std::move(r.stop_reason);
    if (!history_path.empty()) save_history_csv(history_path, out.history);
  }
  out.wall_seconds = seconds_since(t0);
  return out;
}

void cmd_simulate(const RunConfig& cfg) {
  const Scenario s = build_scenario(cfg);
  const Measurement m = simulate_measurement(cfg, s);
  const std::string dir = cfg.output_dir;
  fs::create_directories(dir);

  RunConfig snapshot = cfg;
  if (snapshot.spectral.attenuation != "synthetic")
    snapshot.spectral.attenuation = fs::absolute(snapshot.spectral.attenuation).string();
  if (!snapshot.source.path.empty()) snapshot.source.path = fs::absolute(snapshot.source.path).string();
  save_config(path_in(dir, "config.json"), snapshot);
  save_matrix(path_in(dir, "Y.adjm"), m.Y);
  save_matrix(path_in(dir, "counts.adjm"), m.counts);
  save_matrix(path_in(dir, "A_gt.adjm"), s.phantom.A);
  save_matrix(path_in(dir, "F_true.adjm"), s.F_true);
  save_matrix(path_in(dir, "T.adjm"), s.dictionary.T);

  json sc;
  sc["grid"] = {{"nx", s.phantom.grid.nx}, {"ny", s.phantom.grid.ny},
                {"pixel_size", s.phantom.grid.pixel_size}};
  sc["angles"] = s.geometry.angles;
  sc["detectors"] = s.geometry.n_det;
  sc["detector_spacing"] = s.geometry.det_spacing;
  sc["materials"] = cfg.phantom.materials;
  sc["dictionary"] = s.dictionary.names;
  sc["channel_indices"] = s.channels;
  sc["channels_keV"] = s.binning.centers;
  sc["source"] = std::vector<double>(s.source.intensity.data(),
                                     s.source.intensity.data() + s.source.intensity.size());
  write_text(path_in(dir, "scenario.json"), sc.dump(2) + "\n");
}

void cmd_reconstruct(const RunConfig& cfg, const std::string& method) {
  require(is_method(method), "unknown method '" + method + "'");
  const std::string dir = cfg.output_dir;
  const std::string hint = " (run 'simulate' first)";
  require_file(path_in(dir, "Y.adjm"), hint);
  require_file(path_in(dir, "T.adjm"), hint);
  const Matrix Y = load_matrix(path_in(dir, "Y.adjm"));
  const Matrix T = load_matrix(path_in(dir, "T.adjm"));

  const Scenario s = build_scenario(cfg);
  const TomoOperator W = scenario_operator(s);
  require_shape(Y, W.range_size(), T.cols(), "reconstruct: Y does not match the configured geometry");

  const MethodOutput out = run_method(cfg, method, W, T, Y,
                                      static_cast<int>(cfg.phantom.materials.size()),
                                      path_in(dir, "history_" + method + ".csv"));
  save_matrix(path_in(dir, "A_" + method + ".adjm"), out.A);
  save_matrix(path_in(dir, "F_" + method + ".adjm"), out.F);
  if (method == "adjust") save_matrix(path_in(dir, "R_adjust.adjm"), out.R);

  json run;
  run["method"] = method;
  run["stop_reason"] = out.stop_reason;
  run["iterations"] = out.history.size();
  run["wall_seconds"] = out.wall_seconds;
  write_text(path_in(dir, "run_" + method + ".json"), run.dump(2) + "\n");
}

ExperimentReport cmd_evaluate(const std::string& run_dir) {
  const std::string hint = " (run 'simulate' first)";
  for (const char* f : {"config.json", "scenario.json", "A_gt.adjm", "F_true.adjm"})
    require_file(path_in(run_dir, f), hint);
  const RunConfig cfg = parse_config(read_text(path_in(run_dir, "config.json")));
  const json sc = json::parse(read_text(path_in(run_dir, "scenario.json")));
  const auto names = sc.at("materials").get<std::vector<std::string>>();
  const auto energies = sc.at("channels_keV").get<std::vector<double>>();
  const int nx = sc.at("grid").at("nx").get<int>();
  const int ny = sc.at("grid").at("ny").get<int>();
  const Matrix A_gt = load_matrix(path_in(run_dir, "A_gt.adjm"));
  const Matrix F_true = load_matrix(path_in(run_dir, "F_true.adjm"));

  ExperimentReport report;
  report.config_snapshot = dump_config(cfg);
  fs::create_directories(path_in(run_dir, "images"));

  std::vector<std::string> artifacts;
  for (Index g = 0; g < A_gt.cols(); ++g) {
    const std::string img = "images/gt_" + names[static_cast<std::size_t>(g)] + ".pgm";
    export_pgm16(path_in(run_dir, img), A_gt.col(g), nx, ny, 0.0, 1.0);
    artifacts.push_back(img);
  }

  std::ostringstream results;
  write_results_header(results);
  for (const auto& method : kMethods) {
    const std::string a_path = path_in(run_dir, "A_" + method + ".adjm");
    if (!fs::exists(a_path)) continue;
    require_file(path_in(run_dir, "F_" + method + ".adjm"), "");
    const Matrix A = load_matrix(a_path);
    const Matrix F = load_matrix(path_in(run_dir, "F_" + method + ".adjm"));
    require_shape(A, A_gt.rows(), A_gt.cols(), ("evaluate: A_" + method).c_str());
    require_shape(F, F_true.rows(), F_true.cols(), ("evaluate: F_" + method).c_str());

    MethodSummary sum;
    sum.method = method;
    sum.match = greedy_match(A, A_gt);
    const std::string run_json = path_in(run_dir, "run_" + method + ".json");
    if (fs::exists(run_json)) {
      const json rj = json::parse(read_text(run_json));
      sum.wall_seconds = rj.value("wall_seconds", 0.0);
      sum.stop_reason = rj.value("stop_reason", "");
      sum.iterations = rj.value("iterations", 0);
    }
    std::vector<std::string> rec_names;
    for (Index i = 0; i < A.cols(); ++i) rec_names.push_back("rec" + std::to_string(i));
    write_results_rows(results, method, sum.match, rec_names, names);

    std::ostringstream spectra;
    spectra << "energy_keV";
    for (const auto& p : sum.match.pairs) {
      const auto& gname = names[static_cast<std::size_t>(p.gt)];
      spectra << ",rec_" << gname << ",true_" << gname;
    }
    spectra << '\n';
    for (Index c = 0; c < F.cols(); ++c) {
      spectra << format_double(energies[static_cast<std::size_t>(c)]);
      for (const auto& p : sum.match.pairs)
        spectra << ',' << format_double(F(p.rec, c)) << ',' << format_double(F_true(p.gt, c));
      spectra << '\n';
    }
    const std::string spectra_name = "spectra_" + method + ".csv";
    write_text(path_in(run_dir, spectra_name), spectra.str());
    artifacts.push_back(spectra_name);

    for (const auto& p : sum.match.pairs) {
      const std::string img =
          "images/" + method + "_" + names[static_cast<std::size_t>(p.gt)] + ".pgm";
      export_pgm16(path_in(run_dir, img), A.col(p.rec), nx, ny, 0.0, 1.0);
      artifacts.push_back(img);
    }
    report.methods.push_back(std::move(sum));
  }
  write_text(path_in(run_dir, "results.csv"), results.str());
  artifacts.insert(artifacts.begin(), "results.csv");

  json rj;
  rj["config"] = json::parse(report.config_snapshot);
  rj["methods"] = json::array();
  for (const auto& m : report.methods) {
    json pairs = json::array();
    for (const auto& p : m.match.pairs) {
      pairs.push_back({{"rec", p.rec},
                       {"gt", names[static_cast<std::size_t>(p.gt)]},
                       {"mse", p.mse},
                       {"psnr", std::isinf(p.psnr) ? kPsnrSaturation : p.psnr},
                       {"ssim", p.ssim}});
    }
    const MetricAverages avg = aggregate_saturated(m.match);
    rj["methods"].push_back({{"method", m.method},
                             {"pairs", pairs},
                             {"mse_avg", avg.mse},
                             {"psnr_avg", avg.psnr},
                             {"ssim_avg", avg.ssim},
                             {"iterations", m.iterations},
                             {"stop_reason", m.stop_reason},
                             {"wall_seconds", m.wall_seconds}});
  }
  artifacts.push_back("report.json");
  rj["artifacts"] = artifacts;
  report.artifacts = artifacts;
  write_text(path_in(run_dir, "report.json"), rj.dump(2) + "\n");
  return report;
}

void cmd_sweep_rho(const RunConfig& cfg, const std::vector<double>& rhos) {
  require(!rhos.empty(), "sweep-rho: need at least one rho");
  const std::string dir = cfg.output_dir;
  const std::string hint = " (run 'simulate' first)";
  require_file(path_in(dir, "Y.adjm"), hint);
  require_file(path_in(dir, "T.adjm"), hint);
  const Matrix Y = load_matrix(path_in(dir, "Y.adjm"));
  const Matrix T = load_matrix(path_in(dir, "T.adjm"));
  const Scenario s = build_scenario(cfg);
  const TomoOperator W = scenario_operator(s);
  require_shape(Y, W.range_size(), T.cols(), "sweep-rho: Y does not match the configured geometry");

  for (double rho : rhos) {
    require(rho >= 0.0, "sweep-rho: rho must be >= 0");
    RunConfig run = cfg;
    run.method.adjust.rho = rho;
    run.method.adjust.max_iter = cfg.sweep.max_iter;
    run.method.adjust.eps_abs_tol = 0.0;
    run.method.adjust.eps_rel_tol = 0.0;
    run_method(run, "adjust", W, T, Y, static_cast<int>(cfg.phantom.materials.size()),
               path_in(dir, "history_rho_" + rho_tag(rho) + ".csv"));
  }
}

ExperimentReport cmd_pipeline(const RunConfig& cfg, const std::string& method) {
  cmd_simulate(cfg);
  if (method.empty()) {
    for (const auto& m : kMethods) cmd_reconstruct(cfg, m);
  } else {
    cmd_reconstruct(cfg, method);
  }
  ExperimentReport report = cmd_evaluate(cfg.output_dir);
  cmd_sweep_rho(cfg, cfg.sweep.rhos);
  return report;
}

}  // namespace adjust
