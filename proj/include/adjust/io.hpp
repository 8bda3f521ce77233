#pragma once

#include "adjust/common.hpp"
#include "adjust/solvers.hpp"
#include "adjust/spectral.hpp"

#include <cstdint>
#include <fstream>
#include <iosfwd>
#include <string>
#include <vector>

namespace adjust {

/// 17 significant digits, period decimal separator, independent of locale.
std::string format_double(double value);

/// Locale-independent parse of a whole field; throws with `where` on failure.
double parse_double(const std::string& field, const std::string& where);

// Attenuation table: header `energy_keV,<material>,...`, one row per energy.
AttenuationTable parse_attenuation_csv(std::istream& is, const std::string& source = "<stream>");
AttenuationTable load_attenuation_csv(const std::string& path);
void save_attenuation_csv(const std::string& path, const AttenuationTable& table);

/// Sampled source profile: header `energy_keV,intensity`.
struct SourceProfile {
  std::vector<double> energy_keV;
  std::vector<double> intensity;
};
SourceProfile parse_source_csv(std::istream& is, const std::string& source = "<stream>");
SourceProfile load_source_csv(const std::string& path);

// Binary matrix: "ADJM", u32 rows, u32 cols, rows*cols f64, all little-endian,
// row-major.
void save_matrix(const std::string& path, const Eigen::Ref<const Matrix>& m);
Matrix load_matrix(const std::string& path);
void write_matrix(std::ostream& os, const Eigen::Ref<const Matrix>& m);
Matrix read_matrix(std::istream& is, const std::string& source = "<stream>");

/// Plain numeric CSV, no header.
void save_matrix_csv(const std::string& path, const Eigen::Ref<const Matrix>& m);
Matrix load_matrix_csv(const std::string& path);

/// Binary PGM (P5), maxval 65535, big-endian samples. `image` is row-major
/// with `width` columns; values map linearly from [lo, hi] to [0, 65535].
void export_pgm16(const std::string& path, const Eigen::Ref<const Vector>& image, int width,
                  int height, double lo, double hi);

struct PgmImage {
  int width = 0;
  int height = 0;
  int maxval = 0;
  std::vector<std::uint16_t> pixels;
};
PgmImage read_pgm(const std::string& path);

/// Header `iter,objective,eps_abs,eps_rel,alpha,beta`.
void write_history_header(std::ostream& os);
void write_history_row(std::ostream& os, const IterationRecord& rec);
void save_history_csv(const std::string& path, const std::vector<IterationRecord>& history);

/// Appends one history row per call and flushes, so an interrupted run keeps
/// its partial log.
class HistoryWriter {
 public:
  explicit HistoryWriter(const std::string& path);
  void append(const IterationRecord& rec);

 private:
  std::ofstream out_;
};

}  // namespace adjust
