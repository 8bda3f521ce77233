#include "adjust/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace adjust {

namespace {

// Linear interpolation on an ascending grid; x must lie inside [xs.front(), xs.back()].
template <class Values>
double interp(const std::vector<double>& xs, const Values& ys, double x) {
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  if (it == xs.end()) return ys[static_cast<Index>(xs.size() - 1)];
  if (it == xs.begin()) return ys[0];
  const auto hi = static_cast<Index>(it - xs.begin());
  const Index lo = hi - 1;
  const double x0 = xs[static_cast<std::size_t>(lo)];
  const double x1 = xs[static_cast<std::size_t>(hi)];
  const double t = (x - x0) / (x1 - x0);
  return (1.0 - t) * ys[lo] + t * ys[hi];
}

bool strictly_ascending(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] > v[i - 1])) return false;
  return true;
}

}  // namespace

void AttenuationTable::validate() const {
  require(!energy_keV.empty(), "AttenuationTable: empty energy grid");
  require(strictly_ascending(energy_keV), "AttenuationTable: energies must be strictly ascending");
  require(mu.rows() == static_cast<Index>(material_names.size()),
          "AttenuationTable: one row of mu per material required");
  require(mu.cols() == static_cast<Index>(energy_keV.size()),
          "AttenuationTable: mu columns must match the energy grid");
  require(mu.allFinite() && (mu.array() >= 0.0).all(),
          "AttenuationTable: mu must be finite and nonnegative");
}

ChannelBinning::ChannelBinning(std::vector<double> centers_) : centers(std::move(centers_)) {
  require(!centers.empty(), "ChannelBinning: need at least one channel");
  require(strictly_ascending(centers), "ChannelBinning: centers must be strictly ascending");
}

ChannelBinning ChannelBinning::uniform(double e_min, double e_max, int channels) {
  require(channels >= 1, "ChannelBinning::uniform: channels must be >= 1");
  require(channels == 1 || e_max > e_min, "ChannelBinning::uniform: e_max must exceed e_min");
  std::vector<double> c(static_cast<std::size_t>(channels));
  for (int i = 0; i < channels; ++i)
    c[static_cast<std::size_t>(i)] =
        channels == 1 ? e_min : e_min + (e_max - e_min) * i / (channels - 1);
  return ChannelBinning(std::move(c));
}

SourceSpectrum SourceSpectrum::flat(Index channels, double photons) {
  require(channels >= 1, "SourceSpectrum::flat: channels must be >= 1");
  require(photons > 0.0, "SourceSpectrum::flat: photon budget must be > 0");
  return SourceSpectrum{Vector::Constant(channels, photons)};
}

SourceSpectrum SourceSpectrum::from_profile(const std::vector<double>& energy_keV,
                                            const std::vector<double>& profile,
                                            const ChannelBinning& binning, double photons) {
  require(energy_keV.size() == profile.size() && !energy_keV.empty(),
          "SourceSpectrum: energy and intensity columns differ in length");
  require(strictly_ascending(energy_keV), "SourceSpectrum: energies must be strictly ascending");
  require(photons > 0.0, "SourceSpectrum: photon budget must be > 0");
  Vector v(binning.channels());
  for (Index c = 0; c < v.size(); ++c) {
    const double e = binning.centers[static_cast<std::size_t>(c)];
    require(e >= energy_keV.front() && e <= energy_keV.back(),
            "SourceSpectrum: channel center " + std::to_string(e) + " keV outside the profile");
    v[c] = interp(energy_keV, profile, e);
  }
  require((v.array() > 0.0).all(), "SourceSpectrum: intensity must be positive in every channel");
  SourceSpectrum s{v * (photons / v.maxCoeff())};
  return s;
}

void SourceSpectrum::validate() const {
  require(intensity.size() >= 1, "SourceSpectrum: empty");
  require(intensity.allFinite() && (intensity.array() > 0.0).all(),
          "SourceSpectrum: all entries must be positive");
}

SpectralDictionary SpectralDictionary::subset(const std::vector<std::string>& wanted) const {
  std::vector<Index> idx;
  for (const auto& name : wanted) idx.push_back(index_of(name));
  return rows(idx);
}

SpectralDictionary SpectralDictionary::rows(const std::vector<Index>& idx) const {
  SpectralDictionary out{Matrix(static_cast<Index>(idx.size()), T.cols()), {}};
  for (std::size_t i = 0; i < idx.size(); ++i) {
    require(idx[i] >= 0 && idx[i] < T.rows(), "SpectralDictionary::rows: index out of range");
    out.T.row(static_cast<Index>(i)) = T.row(idx[i]);
    out.names.push_back(names.empty() ? std::to_string(idx[i])
                                      : names[static_cast<std::size_t>(idx[i])]);
  }
  return out;
}

SpectralDictionary SpectralDictionary::channels_subset(const std::vector<Index>& idx) const {
  SpectralDictionary out{Matrix(T.rows(), static_cast<Index>(idx.size())), names};
  for (std::size_t i = 0; i < idx.size(); ++i) {
    require(idx[i] >= 0 && idx[i] < T.cols(), "SpectralDictionary: channel out of range");
    out.T.col(static_cast<Index>(i)) = T.col(idx[i]);
  }
  return out;
}

Index SpectralDictionary::index_of(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  require(it != names.end(), "SpectralDictionary: no material named '" + name + "'");
  return static_cast<Index>(it - names.begin());
}

SpectralDictionary bin_attenuation(const AttenuationTable& table, const ChannelBinning& binning) {
  table.validate();
  const double lo = table.energy_keV.front();
  const double hi = table.energy_keV.back();
  SpectralDictionary dict{Matrix(table.materials(), binning.channels()), table.material_names};
  for (Index c = 0; c < binning.channels(); ++c) {
    const double e = binning.centers[static_cast<std::size_t>(c)];
    require(e >= lo && e <= hi, "bin_attenuation: channel center " + std::to_string(e) +
                                    " keV outside table range [" + std::to_string(lo) + ", " +
                                    std::to_string(hi) + "]");
    for (Index d = 0; d < table.materials(); ++d) dict.T(d, c) = interp(table.energy_keV, table.mu.row(d), e);
  }
  return dict;
}

Matrix simulate_counts(const MaterialMap& phantom_hi, const Grid2D& recon_grid,
                       const ParallelGeometry& geometry, const Eigen::Ref<const Matrix>& spectra,
                       const SourceSpectrum& source, const NoiseConfig& noise,
                       std::uint64_t seed) {
  const Grid2D expected = recon_grid.refined(2);
  require(phantom_hi.grid.nx == expected.nx && phantom_hi.grid.ny == expected.ny &&
              std::abs(phantom_hi.grid.pixel_size - expected.pixel_size) <=
                  1e-12 * expected.pixel_size,
          "simulate_counts: phantom grid must be the reconstruction grid refined 2x per axis");
  require(phantom_hi.A.rows() == expected.size(), "simulate_counts: phantom rows != grid size");
  require_shape(spectra, phantom_hi.A.cols(), source.intensity.size(), "simulate_counts: spectra");
  require(spectra.allFinite() && (spectra.array() >= 0.0).all(),
          "simulate_counts: spectra must be nonnegative");
  source.validate();

  const TomoOperator op(phantom_hi.grid, geometry);
  const Matrix line = op.forward(phantom_hi.A) * spectra;  // J x C
  Matrix counts = (-line.array()).exp().matrix() * source.intensity.asDiagonal();

  if (noise.poisson) {
    std::mt19937_64 rng(seed);
    for (Index c = 0; c < counts.cols(); ++c) {
      for (Index j = 0; j < counts.rows(); ++j) {
        std::poisson_distribution<long long> dist(counts(j, c));
        counts(j, c) = static_cast<double>(dist(rng));
      }
    }
  }
  return counts;
}

Matrix log_correct(const Eigen::Ref<const Matrix>& counts, const SourceSpectrum& source) {
  require(counts.cols() == source.intensity.size(),
          "log_correct: counts have " + std::to_string(counts.cols()) + " channels, source has " +
              std::to_string(source.intensity.size()));
  source.validate();
  Matrix y(counts.rows(), counts.cols());
  for (Index c = 0; c < counts.cols(); ++c)
    for (Index j = 0; j < counts.rows(); ++j)
      y(j, c) = -std::log(std::max(counts(j, c), kCountFloor) / source.intensity[c]);
  return y;
}

Matrix add_gaussian_noise(const Eigen::Ref<const Matrix>& Y, double percent, std::uint64_t seed) {
  require(std::isfinite(percent) && percent >= 0.0, "add_gaussian_noise: strength must be >= 0");
  Matrix out = Y;
  if (percent == 0.0 || Y.size() == 0) return out;
  const double rms = std::sqrt(Y.squaredNorm() / static_cast<double>(Y.size()));
  const double sigma = percent / 100.0 * rms;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, sigma);
  for (Index c = 0; c < out.cols(); ++c)
    for (Index j = 0; j < out.rows(); ++j) out(j, c) += dist(rng);
  return out;
}

std::vector<Index> channel_pivot_order(const Eigen::Ref<const Matrix>& T, Index k) {
  require(k >= 1 && k <= T.cols(), "select_channels: k must be in [1, C]");
  Matrix r = T;
  std::vector<bool> used(static_cast<std::size_t>(T.cols()), false);
  std::vector<Index> order;
  const double scale = std::max(T.colwise().norm().maxCoeff(), 1e-300);
  for (Index step = 0; step < k; ++step) {
    Index best = -1;
    double best_norm = -1.0;
    for (Index c = 0; c < r.cols(); ++c) {
      if (used[static_cast<std::size_t>(c)]) continue;
      double n = r.col(c).norm();
      if (n <= 1e-12 * scale) n = 0.0;
      if (n > best_norm) {
        best_norm = n;
        best = c;
      }
    }
    used[static_cast<std::size_t>(best)] = true;
    order.push_back(best);
    if (best_norm > 0.0) {
      const Vector q = r.col(best) / r.col(best).norm();
      r -= q * (q.transpose() * r);
    }
  }
  return order;
}

std::vector<Index> select_channels(const SpectralDictionary& dict, Index k) {
  auto order = channel_pivot_order(dict.T, k);
  std::sort(order.begin(), order.end());
  return order;
}

const std::vector<ElementEdge>& reference_elements() {
  static const std::vector<ElementEdge> elements = {
      {"Vanadium", 23, 5.465},      {"Chromium", 24, 5.989},   {"Manganese", 25, 6.539},
      {"Iron", 26, 7.112},          {"Cobalt", 27, 7.709},     {"Nickel", 28, 8.333},
      {"Copper", 29, 8.979},        {"Zinc", 30, 9.659},       {"Gallium", 31, 10.367},
      {"Germanium", 32, 11.103},    {"Arsenic", 33, 11.867},   {"Selenium", 34, 12.658},
      {"Bromine", 35, 13.474},      {"Krypton", 36, 14.326},   {"Rubidium", 37, 15.200},
      {"Strontium", 38, 16.105},    {"Yttrium", 39, 17.038},   {"Zirconium", 40, 17.998},
      {"Niobium", 41, 18.986},      {"Molybdenum", 42, 20.000}, {"Technetium", 43, 21.044},
      {"Ruthenium", 44, 22.117},    {"Rhodium", 45, 23.220},   {"Palladium", 46, 24.350},
      {"Silver", 47, 25.514},       {"Cadmium", 48, 26.711},   {"Indium", 49, 27.940},
      {"Tin", 50, 29.200},          {"Antimony", 51, 30.491},  {"Tellurium", 52, 31.814},
      {"Iodine", 53, 33.169},       {"Xenon", 54, 34.561},     {"Cesium", 55, 35.985},
      {"Barium", 56, 37.441},       {"Lanthanum", 57, 38.925}, {"Cerium", 58, 40.443},
      {"Praseodymium", 59, 41.991}, {"Neodymium", 60, 43.569}, {"Promethium", 61, 45.184},
      {"Samarium", 62, 46.834},     {"Gadolinium", 64, 50.239}, {"Terbium", 65, 51.996},
  };
  return elements;
}

AttenuationTable synthetic_attenuation_table(const std::vector<ElementEdge>& elements,
                                             const std::vector<double>& energy_keV,
                                             double scale) {
  constexpr double kRefEnergy = 20.0;
  constexpr double kJump = 6.0;
  constexpr double kCompton = 0.02;
  require(scale > 0.0, "synthetic_attenuation_table: scale must be > 0");
  AttenuationTable table;
  table.energy_keV = energy_keV;
  table.mu.resize(static_cast<Index>(elements.size()), static_cast<Index>(energy_keV.size()));
  for (std::size_t m = 0; m < elements.size(); ++m) {
    const auto& el = elements[m];
    table.material_names.push_back(el.name);
    const double z = el.atomic_number / 30.0;
    for (std::size_t e = 0; e < energy_keV.size(); ++e) {
      const double energy = energy_keV[e];
      double photo = std::pow(z, 4) * std::pow(kRefEnergy / energy, 3);
      if (energy < el.k_edge_keV) photo /= kJump;
      table.mu(static_cast<Index>(m), static_cast<Index>(e)) = scale * (photo + kCompton * z);
    }
  }
  table.validate();
  return table;
}

}  // namespace adjust
