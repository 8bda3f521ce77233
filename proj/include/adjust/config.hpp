#pragma once

#include "adjust/solvers.hpp"
#include "adjust/spectral.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace adjust {

inline constexpr int kConfigVersion = 1;

struct PhantomSpec {
  std::string kind = "disks";  ///< disks | mixed_disks | shepp_logan
  int size = 64;               ///< reconstruction grid is size x size
  /// One attenuation-table material per phantom class.
  std::vector<std::string> materials = {"Arsenic", "Selenium", "Bromine", "Krypton", "Rubidium"};
};

struct AngleSpec {
  int count = 60;
  double start = 0.0;
  double stop = 3.14159265358979323846;
  bool endpoint = false;      ///< include `stop` as the last angle
  std::vector<double> list;   ///< explicit angles; overrides the range when nonempty
};

struct GeometrySpec {
  AngleSpec angles;
  int detectors = 0;               ///< 0: ceil(sqrt(2) * size)
  double detector_spacing = 0.0;   ///< 0: reconstruction pixel size
};

struct SpectralSpec {
  std::string attenuation = "synthetic";  ///< "synthetic" or a CSV path
  double attenuation_scale = 1.0;         ///< synthetic model only
  double energy_min = 5.0;
  double energy_max = 35.0;
  int channels = 50;
  /// Dictionary rows in order; empty means every table material.
  std::vector<std::string> dictionary = {"Copper",  "Zinc",     "Gallium",   "Germanium",
                                         "Arsenic", "Selenium", "Bromine",   "Krypton",
                                         "Rubidium", "Strontium", "Yttrium", "Zirconium"};
  /// 0: all channels; > 0: that many channels by greedy pivoting on the
  /// dictionary; -1: as many channels as dictionary rows.
  int select_channels = 0;
};

struct SourceSpec {
  std::string kind = "flat";  ///< flat | file
  std::string path;
  double photons = 1e4;
};

struct MethodSpec {
  std::string name = "adjust";  ///< adjust | cjoint | ru | ur
  AapmConfig adjust;
  CJointConfig cjoint;
  TwoStepConfig two_step;
};

struct SweepSpec {
  std::vector<double> rhos = {0.0, 1e-2, 1e-1};
  int max_iter = 200;
};

struct RunConfig {
  int config_version = kConfigVersion;
  std::uint64_t seed = 0;
  std::string output_dir = "run";
  PhantomSpec phantom;
  GeometrySpec geometry;
  SpectralSpec spectral;
  SourceSpec source;
  NoiseConfig noise{true, 0.0};
  MethodSpec method;
  SweepSpec sweep;
  std::string preset;  ///< informational: last preset applied

  /// Throws on any inconsistent or out-of-range field.
  void validate() const;
  /// Explicit angles for the configured range or list.
  std::vector<double> angle_list() const;
};

/// Parses JSON text; missing keys keep their defaults, unknown keys are
/// errors. Relative paths are resolved against `base_dir`.
RunConfig parse_config(const std::string& text, const std::string& base_dir = "");
RunConfig load_config(const std::string& path);
std::string dump_config(const RunConfig& cfg);
void save_config(const std::string& path, const RunConfig& cfg);

/// full | sparse-angle | limited-view | sparse-channel | noisy-<percent>
void apply_preset(RunConfig& cfg, const std::string& name);
std::vector<std::string> preset_names();

bool is_method(const std::string& name);

}  // namespace adjust
