#include "adjust/config.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace adjust {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kTwoPi = 6.28318530717958647692;
constexpr double kPi = 3.14159265358979323846;

void check_keys(const json& j, const std::string& section, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw Error("config: '" + section + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw Error("config: unknown key '" + section + "." + key + "'");
  }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& section) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error("config: bad value for '" + section + "." + key + "': " + e.what());
  }
}

std::string resolve(const std::string& path, const std::string& base_dir) {
  if (path.empty() || base_dir.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(base_dir) / path).lexically_normal().string();
}

InitMode parse_init(const std::string& s) {
  if (s == "random") return InitMode::random;
  if (s == "uniform") return InitMode::uniform;
  if (s == "zeros") return InitMode::zeros;
  throw Error("config: adjust.init must be random, uniform or zeros, got '" + s + "'");
}

std::string init_name(InitMode m) {
  switch (m) {
    case InitMode::random: return "random";
    case InitMode::uniform: return "uniform";
    case InitMode::zeros: return "zeros";
  }
  return "random";
}

DualUpdate parse_dual(const std::string& s) {
  if (s == "ascent") return DualUpdate::ascent;
  if (s == "as_printed") return DualUpdate::as_printed;
  throw Error("config: adjust.dual_update must be ascent or as_printed, got '" + s + "'");
}

std::string dual_name(DualUpdate d) { return d == DualUpdate::ascent ? "ascent" : "as_printed"; }

}  // namespace

bool is_method(const std::string& name) {
  return name == "adjust" || name == "cjoint" || name == "ru" || name == "ur";
}

std::vector<double> RunConfig::angle_list() const {
  const AngleSpec& a = geometry.angles;
  if (!a.list.empty()) return a.list;
  if (a.endpoint) {
    std::vector<double> out(static_cast<std::size_t>(a.count));
    const double step = a.count > 1 ? (a.stop - a.start) / (a.count - 1) : 0.0;
    for (int i = 0; i < a.count; ++i) out[static_cast<std::size_t>(i)] = a.start + i * step;
    return out;
  }
  return ParallelGeometry::equidistant(a.count, a.start, a.stop);
}

void RunConfig::validate() const {
  require(config_version == kConfigVersion,
          "config: unsupported config_version " + std::to_string(config_version));
  require(!output_dir.empty(), "config: output_dir must not be empty");

  require(phantom.kind == "disks" || phantom.kind == "mixed_disks" ||
              phantom.kind == "shepp_logan",
          "config: phantom.kind must be disks, mixed_disks or shepp_logan");
  require(phantom.size >= 16, "config: phantom.size must be >= 16");
  const auto m = static_cast<int>(phantom.materials.size());
  if (phantom.kind == "disks") require(m >= 1 && m <= 15, "config: disks needs 1..15 materials");
  if (phantom.kind == "mixed_disks") require(m >= 2 && m <= 6, "config: mixed_disks needs 2..6 materials");
  if (phantom.kind == "shepp_logan") require(m >= 2 && m <= 5, "config: shepp_logan needs 2..5 materials");

  const AngleSpec& a = geometry.angles;
  if (a.list.empty()) {
    require(a.count >= 1, "config: geometry.angles.count must be >= 1");
    require(a.start >= 0.0 && a.start < kTwoPi, "config: angle start must lie in [0, 2pi)");
    require(a.stop > a.start, "config: angle stop must exceed start");
    require(a.endpoint ? a.stop < kTwoPi : a.stop <= kTwoPi,
            "config: angle range must lie in [0, 2pi)");
  } else {
    for (double t : a.list) {
      require(std::isfinite(t) && t >= 0.0 && t < kTwoPi,
              "config: explicit angles must lie in [0, 2pi)");
    }
  }
  require(geometry.detectors >= 0, "config: geometry.detectors must be >= 0");
  require(geometry.detector_spacing >= 0.0, "config: geometry.detector_spacing must be >= 0");

  require(spectral.energy_min > 0.0 && spectral.energy_max > spectral.energy_min,
          "config: need 0 < energy_min < energy_max");
  require(spectral.channels >= 1, "config: spectral.channels must be >= 1");
  require(spectral.select_channels >= -1 && spectral.select_channels <= spectral.channels,
          "config: spectral.select_channels must be -1, 0 or in 1..channels");
  require(spectral.attenuation_scale > 0.0, "config: attenuation_scale must be > 0");
  if (spectral.attenuation != "synthetic") {
    require(fs::exists(spectral.attenuation),
            "config: attenuation file not found: " + spectral.attenuation);
  }

  require(source.kind == "flat" || source.kind == "file", "config: source.kind must be flat or file");
  require(source.photons > 0.0, "config: source.photons must be > 0");
  if (source.kind == "file") {
    require(fs::exists(source.path), "config: source file not found: " + source.path);
  }

  require(noise.gaussian_percent >= 0.0, "config: noise.gaussian_percent must be >= 0");

  require(is_method(method.name), "config: method.name must be adjust, cjoint, ru or ur");
  require(method.adjust.rho >= 0.0, "config: adjust.rho must be >= 0");
  require(method.adjust.max_iter >= 1, "config: adjust.max_iter must be >= 1");
  require(method.cjoint.max_iter >= 1, "config: cjoint.max_iter must be >= 1");
  require(method.two_step.lambda >= 0.0, "config: two_step.lambda must be >= 0");
  require(method.two_step.cg_iters >= 1 && method.two_step.nmf_iters >= 1 &&
              method.two_step.nmf_restarts >= 1,
          "config: two_step iteration counts must be >= 1");

  require(!sweep.rhos.empty(), "config: sweep.rhos must not be empty");
  for (double r : sweep.rhos) require(r >= 0.0, "config: sweep.rhos must be >= 0");
  require(sweep.max_iter >= 1, "config: sweep.max_iter must be >= 1");
}

RunConfig parse_config(const std::string& text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(std::string("config: ") + e.what());
  }
  check_keys(j, "", {"config_version", "seed", "output_dir", "preset", "phantom", "geometry",
                     "spectral", "source", "noise", "method", "sweep"});
  RunConfig cfg;
  if (!j.contains("config_version")) throw Error("config: missing config_version");
  read(j, "config_version", cfg.config_version, "");
  require(cfg.config_version == kConfigVersion,
          "config: unsupported config_version " + std::to_string(cfg.config_version));
  read(j, "seed", cfg.seed, "");
  read(j, "output_dir", cfg.output_dir, "");
  cfg.output_dir = resolve(cfg.output_dir, base_dir);

  if (j.contains("phantom")) {
    const json& p = j["phantom"];
    check_keys(p, "phantom", {"kind", "size", "materials"});
    read(p, "kind", cfg.phantom.kind, "phantom");
    read(p, "size", cfg.phantom.size, "phantom");
    read(p, "materials", cfg.phantom.materials, "phantom");
  }
  if (j.contains("geometry")) {
    const json& g = j["geometry"];
    check_keys(g, "geometry", {"angles", "detectors", "detector_spacing"});
    if (g.contains("angles")) {
      const json& a = g["angles"];
      check_keys(a, "geometry.angles", {"count", "start", "stop", "endpoint", "list"});
      read(a, "count", cfg.geometry.angles.count, "geometry.angles");
      read(a, "start", cfg.geometry.angles.start, "geometry.angles");
      read(a, "stop", cfg.geometry.angles.stop, "geometry.angles");
      read(a, "endpoint", cfg.geometry.angles.endpoint, "geometry.angles");
      read(a, "list", cfg.geometry.angles.list, "geometry.angles");
    }
    read(g, "detectors", cfg.geometry.detectors, "geometry");
    read(g, "detector_spacing", cfg.geometry.detector_spacing, "geometry");
  }
  if (j.contains("spectral")) {
    const json& s = j["spectral"];
    check_keys(s, "spectral", {"attenuation", "attenuation_scale", "energy_min", "energy_max",
                               "channels", "dictionary", "select_channels"});
    read(s, "attenuation", cfg.spectral.attenuation, "spectral");
    if (cfg.spectral.attenuation != "synthetic")
      cfg.spectral.attenuation = resolve(cfg.spectral.attenuation, base_dir);
    read(s, "attenuation_scale", cfg.spectral.attenuation_scale, "spectral");
    read(s, "energy_min", cfg.spectral.energy_min, "spectral");
    read(s, "energy_max", cfg.spectral.energy_max, "spectral");
    read(s, "channels", cfg.spectral.channels, "spectral");
    read(s, "dictionary", cfg.spectral.dictionary, "spectral");
    read(s, "select_channels", cfg.spectral.select_channels, "spectral");
  }
  if (j.contains("source")) {
    const json& s = j["source"];
    check_keys(s, "source", {"kind", "path", "photons"});
    read(s, "kind", cfg.source.kind, "source");
    read(s, "path", cfg.source.path, "source");
    cfg.source.path = resolve(cfg.source.path, base_dir);
    read(s, "photons", cfg.source.photons, "source");
  }
  if (j.contains("noise")) {
    const json& n = j["noise"];
    check_keys(n, "noise", {"poisson", "gaussian_percent"});
    read(n, "poisson", cfg.noise.poisson, "noise");
    read(n, "gaussian_percent", cfg.noise.gaussian_percent, "noise");
  }
  if (j.contains("method")) {
    const json& m = j["method"];
    check_keys(m, "method", {"name", "adjust", "cjoint", "two_step"});
    read(m, "name", cfg.method.name, "method");
    if (m.contains("adjust")) {
      const json& a = m["adjust"];
      check_keys(a, "method.adjust",
                 {"rho", "max_iter", "eps_abs_tol", "eps_rel_tol", "init", "dual_update"});
      read(a, "rho", cfg.method.adjust.rho, "method.adjust");
      read(a, "max_iter", cfg.method.adjust.max_iter, "method.adjust");
      read(a, "eps_abs_tol", cfg.method.adjust.eps_abs_tol, "method.adjust");
      read(a, "eps_rel_tol", cfg.method.adjust.eps_rel_tol, "method.adjust");
      std::string init = init_name(cfg.method.adjust.init);
      read(a, "init", init, "method.adjust");
      cfg.method.adjust.init = parse_init(init);
      std::string dual = dual_name(cfg.method.adjust.dual_update);
      read(a, "dual_update", dual, "method.adjust");
      cfg.method.adjust.dual_update = parse_dual(dual);
    }
    if (m.contains("cjoint")) {
      const json& c = m["cjoint"];
      check_keys(c, "method.cjoint", {"max_iter", "tol"});
      read(c, "max_iter", cfg.method.cjoint.max_iter, "method.cjoint");
      read(c, "tol", cfg.method.cjoint.tol, "method.cjoint");
    }
    if (m.contains("two_step")) {
      const json& t = m["two_step"];
      check_keys(t, "method.two_step",
                 {"lambda", "cg_iters", "cg_tol", "nmf_iters", "nmf_restarts"});
      read(t, "lambda", cfg.method.two_step.lambda, "method.two_step");
      read(t, "cg_iters", cfg.method.two_step.cg_iters, "method.two_step");
      read(t, "cg_tol", cfg.method.two_step.cg_tol, "method.two_step");
      read(t, "nmf_iters", cfg.method.two_step.nmf_iters, "method.two_step");
      read(t, "nmf_restarts", cfg.method.two_step.nmf_restarts, "method.two_step");
    }
  }
  if (j.contains("sweep")) {
    const json& s = j["sweep"];
    check_keys(s, "sweep", {"rhos", "max_iter"});
    read(s, "rhos", cfg.sweep.rhos, "sweep");
    read(s, "max_iter", cfg.sweep.max_iter, "sweep");
  }
  std::string preset;
  read(j, "preset", preset, "");
  if (!preset.empty()) apply_preset(cfg, preset);
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), fs::path(path).parent_path().string());
}

std::string dump_config(const RunConfig& cfg) {
  json j;
  j["config_version"] = cfg.config_version;
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir;
  j["phantom"] = {{"kind", cfg.phantom.kind},
                  {"size", cfg.phantom.size},
                  {"materials", cfg.phantom.materials}};
  json angles = {{"count", cfg.geometry.angles.count},
                 {"start", cfg.geometry.angles.start},
                 {"stop", cfg.geometry.angles.stop},
                 {"endpoint", cfg.geometry.angles.endpoint}};
  if (!cfg.geometry.angles.list.empty()) angles["list"] = cfg.geometry.angles.list;
  j["geometry"] = {{"angles", angles},
                   {"detectors", cfg.geometry.detectors},
                   {"detector_spacing", cfg.geometry.detector_spacing}};
  j["spectral"] = {{"attenuation", cfg.spectral.attenuation},
                   {"attenuation_scale", cfg.spectral.attenuation_scale},
                   {"energy_min", cfg.spectral.energy_min},
                   {"energy_max", cfg.spectral.energy_max},
                   {"channels", cfg.spectral.channels},
                   {"dictionary", cfg.spectral.dictionary},
                   {"select_channels", cfg.spectral.select_channels}};
  j["source"] = {{"kind", cfg.source.kind}, {"path", cfg.source.path}, {"photons", cfg.source.photons}};
  j["noise"] = {{"poisson", cfg.noise.poisson}, {"gaussian_percent", cfg.noise.gaussian_percent}};
  j["method"] = {
      {"name", cfg.method.name},
      {"adjust",
       {{"rho", cfg.method.adjust.rho},
        {"max_iter", cfg.method.adjust.max_iter},
        {"eps_abs_tol", cfg.method.adjust.eps_abs_tol},
        {"eps_rel_tol", cfg.method.adjust.eps_rel_tol},
        {"init", init_name(cfg.method.adjust.init)},
        {"dual_update", dual_name(cfg.method.adjust.dual_update)}}},
      {"cjoint", {{"max_iter", cfg.method.cjoint.max_iter}, {"tol", cfg.method.cjoint.tol}}},
      {"two_step",
       {{"lambda", cfg.method.two_step.lambda},
        {"cg_iters", cfg.method.two_step.cg_iters},
        {"cg_tol", cfg.method.two_step.cg_tol},
        {"nmf_iters", cfg.method.two_step.nmf_iters},
        {"nmf_restarts", cfg.method.two_step.nmf_restarts}}}};
  j["sweep"] = {{"rhos", cfg.sweep.rhos}, {"max_iter", cfg.sweep.max_iter}};
  return j.dump(2) + "\n";
}

void save_config(const std::string& path, const RunConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << dump_config(cfg);
  if (!out) throw Error("write to '" + path + "' failed");
}

std::vector<std::string> preset_names() {
  return {"full", "sparse-angle", "limited-view", "sparse-channel", "noisy-<percent>"};
}

void apply_preset(RunConfig& cfg, const std::string& name) {
  AngleSpec& a = cfg.geometry.angles;
  a.list.clear();
  a.start = 0.0;
  a.stop = kPi;
  a.endpoint = false;
  if (name == "full") {
    a.count = 180;
  } else if (name == "sparse-angle") {
    a.count = 10;
  } else if (name == "limited-view") {
    a.count = 60;
    a.stop = 2.0 * kPi / 3.0;
    a.endpoint = true;
  } else if (name == "sparse-channel") {
    a.count = 60;
    cfg.spectral.select_channels = -1;
  } else if (name.rfind("noisy-", 0) == 0) {
    double pct = 0.0;
    try {
      std::size_t used = 0;
      pct = std::stod(name.substr(6), &used);
      if (used != name.size() - 6) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw Error("unknown preset '" + name + "': noisy-<percent> needs a number");
    }
    require(pct >= 0.0, "preset noisy-<percent>: percent must be >= 0");
    a.count = 180;
    cfg.noise.poisson = true;
    cfg.noise.gaussian_percent = pct;
  } else {
    throw Error("unknown preset '" + name +
                "' (expected full, sparse-angle, limited-view, sparse-channel, noisy-<percent>)");
  }
  cfg.preset = name;
}

}  // namespace adjust
