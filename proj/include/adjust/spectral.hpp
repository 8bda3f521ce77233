#pragma once

#include "adjust/common.hpp"
#include "adjust/phantoms.hpp"
#include "adjust/tomo.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace adjust {

/// Attenuation spectra mu_m(E) sampled on a shared ascending energy grid.
/// mu is (materials x energies).
struct AttenuationTable {
  std::vector<std::string> material_names;
  std::vector<double> energy_keV;
  Matrix mu;

  void validate() const;
  Index materials() const { return mu.rows(); }
};

/// Energetic centers of the C detector channels.
struct ChannelBinning {
  std::vector<double> centers;

  ChannelBinning() = default;
  explicit ChannelBinning(std::vector<double> centers_);
  /// C equidistant centers from e_min to e_max inclusive.
  static ChannelBinning uniform(double e_min, double e_max, int channels);
  Index channels() const { return static_cast<Index>(centers.size()); }
};

/// Flatfield intensity per channel.
struct SourceSpectrum {
  Vector intensity;

  /// Default: the same budget in every channel.
  static SourceSpectrum flat(Index channels, double photons = 1e4);
  /// Interpolates a sampled (energy, intensity) profile onto the channel
  /// centers and rescales so the brightest channel receives `photons`.
  static SourceSpectrum from_profile(const std::vector<double>& energy_keV,
                                     const std::vector<double>& profile,
                                     const ChannelBinning& binning, double photons = 1e4);
  void validate() const;
};

/// T is (D x C); row d is dictionary material d across channels.
struct SpectralDictionary {
  Matrix T;
  std::vector<std::string> names;

  Index size() const { return T.rows(); }
  Index channels() const { return T.cols(); }
  /// Rows picked by name, in the given order.
  SpectralDictionary subset(const std::vector<std::string>& wanted) const;
  /// Rows picked by index, in the given order.
  SpectralDictionary rows(const std::vector<Index>& idx) const;
  /// Columns (channels) picked by index.
  SpectralDictionary channels_subset(const std::vector<Index>& idx) const;
  Index index_of(const std::string& name) const;
};

struct NoiseConfig {
  bool poisson = false;
  /// Additive Gaussian noise on log-corrected data, in percent of rms(Y).
  double gaussian_percent = 0.0;
};

/// Piecewise-linear interpolation of every material at the channel centers.
SpectralDictionary bin_attenuation(const AttenuationTable& table, const ChannelBinning& binning);

/// Expected (or Poisson-sampled) photon counts, J x C. The phantom must live
/// on `recon_grid` refined by exactly 2 per axis.
Matrix simulate_counts(const MaterialMap& phantom_hi, const Grid2D& recon_grid,
                       const ParallelGeometry& geometry, const Eigen::Ref<const Matrix>& spectra,
                       const SourceSpectrum& source, const NoiseConfig& noise, std::uint64_t seed);

/// Counts below one photon are clamped to one before taking the log.
inline constexpr double kCountFloor = 1.0;

/// y_jc = -ln(max(counts_jc, 1) / I0_c).
Matrix log_correct(const Eigen::Ref<const Matrix>& counts, const SourceSpectrum& source);

/// Y + N(0, (percent/100 * rms(Y))^2), i.i.d.
Matrix add_gaussian_noise(const Eigen::Ref<const Matrix>& Y, double percent, std::uint64_t seed);

/// Greedy column-pivoted QR on T: k channel indices, sorted ascending.
std::vector<Index> select_channels(const SpectralDictionary& dict, Index k);

/// Greedy pivot order (unsorted) behind select_channels.
std::vector<Index> channel_pivot_order(const Eigen::Ref<const Matrix>& T, Index k);

/// Element used by the synthetic attenuation model.
struct ElementEdge {
  std::string name;
  int atomic_number;
  double k_edge_keV;
};

/// 42 elements from vanadium (Z = 23) to terbium (Z = 65), europium
/// omitted, with their K-edge energies.
const std::vector<ElementEdge>& reference_elements();

/// Synthetic K-edge attenuation model:
///   mu(E) = s * [ (Z/30)^4 (E_ref/E)^3 / (E < E_K ? jump : 1) + 0.02 (Z/30) ]
/// sampled on `energy_keV`. Values are dimensionless attenuation per unit
/// length of the normalized phantom frame.
AttenuationTable synthetic_attenuation_table(const std::vector<ElementEdge>& elements,
                                             const std::vector<double>& energy_keV,
                                             double scale = 1.0);

}  // namespace adjust
