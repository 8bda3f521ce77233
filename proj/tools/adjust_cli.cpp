#include "adjust/config.hpp"
#include "adjust/experiment.hpp"
#include "adjust/io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <iostream>
#include <optional>

namespace {

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string method;
  std::string preset;
};

adjust::RunConfig resolve_config(const GlobalOptions& g) {
  adjust::RunConfig cfg = g.config.empty() ? adjust::RunConfig{} : adjust::load_config(g.config);
  if (!g.preset.empty()) adjust::apply_preset(cfg, g.preset);
  if (g.seed) cfg.seed = *g.seed;
  if (!g.out.empty()) cfg.output_dir = g.out;
  if (!g.method.empty()) cfg.method.name = g.method;
  cfg.validate();
  return cfg;
}

void print_summary(const adjust::ExperimentReport& report) {
  for (const auto& m : report.methods) {
    const auto avg = adjust::aggregate_saturated(m.match);
    std::cout << m.method << ": MSE_avg=" << avg.mse << " PSNR_avg=" << avg.psnr
              << " SSIM_avg=" << avg.ssim << '\n';
  }
}

// Regular grid plus points just below and at every K-edge, so piecewise-linear
// interpolation keeps the jumps sharp.
adjust::AttenuationTable export_table(double e_min, double e_max, double step, double scale) {
  if (!(e_min > 0.0 && e_max > e_min && step > 0.0))
    throw adjust::Error("export-table: need 0 < energy-min < energy-max and step > 0");
  std::vector<double> e;
  for (double x = e_min; x < e_max + 0.5 * step; x += step) e.push_back(std::min(x, e_max));
  for (const auto& el : adjust::reference_elements()) {
    if (el.k_edge_keV <= e_min || el.k_edge_keV >= e_max) continue;
    e.push_back(el.k_edge_keV - 1e-3);
    e.push_back(el.k_edge_keV);
  }
  std::sort(e.begin(), e.end());
  e.erase(std::unique(e.begin(), e.end()), e.end());
  return adjust::synthetic_attenuation_table(adjust::reference_elements(), e, scale);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral CT simulation, joint reconstruction/unmixing and evaluation"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--config", g.config, "JSON run configuration (config_version 1)")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Seed for noise and solver initialization");
  app.add_option("--out", g.out, "Run directory (overrides output_dir)");
  app.add_option("--method", g.method, "Reconstruction method")
      ->check(CLI::IsMember({"adjust", "cjoint", "ru", "ur"}));
  app.add_option("--preset", g.preset,
                 "Acquisition preset: full, sparse-angle, limited-view, sparse-channel, "
                 "noisy-<percent>");

  auto* simulate = app.add_subcommand("simulate", "Render the phantom and simulate the sinogram");

  auto* reconstruct = app.add_subcommand("reconstruct", "Run one method on a simulated run");
  std::optional<double> rho;
  std::optional<int> max_iter;
  reconstruct->add_option("--rho", rho, "ADJUST dual step rho")->check(CLI::NonNegativeNumber);
  reconstruct->add_option("--max-iter", max_iter, "Iteration limit (adjust, cjoint)")
      ->check(CLI::PositiveNumber);

  auto* evaluate = app.add_subcommand("evaluate", "Match and score every reconstruction in a run");

  auto* sweep = app.add_subcommand("sweep-rho", "ADJUST residual histories for several rho");
  std::vector<double> rhos;
  sweep->add_option("--rhos", rhos, "rho values (default from config)")
      ->delimiter(',')
      ->check(CLI::NonNegativeNumber);

  auto* pipeline = app.add_subcommand("pipeline", "simulate, reconstruct, evaluate, sweep-rho");

  auto* table = app.add_subcommand("export-table", "Write the synthetic attenuation table as CSV");
  std::string table_path;
  double e_min = 1.0, e_max = 80.0, e_step = 0.5, scale = 1.0;
  table->add_option("file", table_path, "Output CSV")->required();
  table->add_option("--energy-min", e_min, "keV")->capture_default_str();
  table->add_option("--energy-max", e_max, "keV")->capture_default_str();
  table->add_option("--step", e_step, "Grid spacing in keV")->capture_default_str();
  table->add_option("--scale", scale, "Attenuation scale")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (table->parsed()) {
      adjust::save_attenuation_csv(table_path, export_table(e_min, e_max, e_step, scale));
      std::cout << "attenuation table written to " << table_path << '\n';
      return 0;
    }
    adjust::RunConfig cfg = resolve_config(g);
    if (rho) cfg.method.adjust.rho = *rho;
    if (max_iter) {
      cfg.method.adjust.max_iter = *max_iter;
      cfg.method.cjoint.max_iter = *max_iter;
    }
    if (simulate->parsed()) {
      adjust::cmd_simulate(cfg);
      std::cout << "simulated into " << cfg.output_dir << '\n';
    } else if (reconstruct->parsed()) {
      adjust::cmd_reconstruct(cfg, cfg.method.name);
      std::cout << cfg.method.name << " reconstruction written to " << cfg.output_dir << '\n';
    } else if (evaluate->parsed()) {
      print_summary(adjust::cmd_evaluate(cfg.output_dir));
    } else if (sweep->parsed()) {
      adjust::cmd_sweep_rho(cfg, rhos.empty() ? cfg.sweep.rhos : rhos);
      std::cout << "rho sweep written to " << cfg.output_dir << '\n';
    } else if (pipeline->parsed()) {
      print_summary(adjust::cmd_pipeline(cfg, g.method));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
