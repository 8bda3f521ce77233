#include "adjust/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace adjust {

std::string format_double(double value) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value,
                                 std::chars_format::general, 17);
  require(res.ec == std::errc(), "format_double: conversion failed");
  return std::string(buf.data(), res.ptr);
}

double parse_double(const std::string& field, const std::string& where) {
  const char* first = field.data();
  const char* last = first + field.size();
  while (first < last && std::isspace(static_cast<unsigned char>(*first))) ++first;
  while (last > first && std::isspace(static_cast<unsigned char>(last[-1]))) --last;
  if (first < last && *first == '+') ++first;
  double value = 0.0;
  const auto res = std::from_chars(first, last, value);
  if (first == last || res.ec != std::errc() || res.ptr != last) {
    throw Error(where + ": not a number: '" + field + "'");
  }
  return value;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string at(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line);
}

/// Reads the next non-blank line; false at end of input.
bool next_line(std::istream& is, std::string& line, std::size_t& lineno) {
  while (std::getline(is, line)) {
    ++lineno;
    if (!trim(line).empty()) return true;
  }
  return false;
}

std::ifstream open_in(const std::string& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  return in;
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  return out;
}

void finish_write(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw Error("write to '" + path + "' failed");
}

}  // namespace

AttenuationTable parse_attenuation_csv(std::istream& is, const std::string& source) {
  std::string line;
  std::size_t lineno = 0;
  if (!next_line(is, line, lineno)) throw Error(source + ": empty attenuation file");
  const auto header = split_csv(line);
  if (header.size() < 2 || header[0] != "energy_keV") {
    throw Error(at(source, lineno) + ": header must be 'energy_keV,<material>,...'");
  }
  AttenuationTable table;
  for (std::size_t c = 1; c < header.size(); ++c) {
    if (header[c].empty()) throw Error(at(source, lineno) + ": empty material name");
    table.material_names.push_back(header[c]);
  }
  const std::size_t m = table.material_names.size();

  std::vector<std::vector<double>> rows;
  while (next_line(is, line, lineno)) {
    const auto fields = split_csv(line);
    const std::string where = at(source, lineno);
    if (fields.size() != m + 1) {
      throw Error(where + ": expected " + std::to_string(m + 1) + " fields, got " +
                  std::to_string(fields.size()));
    }
    const double e = parse_double(fields[0], where);
    if (!std::isfinite(e) || e <= 0.0) throw Error(where + ": energy must be positive");
    if (!table.energy_keV.empty() && e <= table.energy_keV.back()) {
      throw Error(where + ": energies must be strictly ascending");
    }
    std::vector<double> row(m);
    for (std::size_t c = 0; c < m; ++c) {
      row[c] = parse_double(fields[c + 1], where);
      if (!std::isfinite(row[c]) || row[c] < 0.0) {
        throw Error(where + ": attenuation of '" + table.material_names[c] +
                    "' must be finite and >= 0");
      }
    }
    table.energy_keV.push_back(e);
    rows.push_back(std::move(row));
  }
  if (rows.size() < 2) throw Error(source + ": need at least two energies");

  table.mu.resize(static_cast<Index>(m), static_cast<Index>(rows.size()));
  for (std::size_t e = 0; e < rows.size(); ++e)
    for (std::size_t c = 0; c < m; ++c)
      table.mu(static_cast<Index>(c), static_cast<Index>(e)) = rows[e][c];
  table.validate();
  return table;
}

AttenuationTable load_attenuation_csv(const std::string& path) {
  auto in = open_in(path);
  return parse_attenuation_csv(in, path);
}

void save_attenuation_csv(const std::string& path, const AttenuationTable& table) {
  table.validate();
  auto out = open_out(path);
  out << "energy_keV";
  for (const auto& n : table.material_names) out << ',' << n;
  out << '\n';
  for (std::size_t e = 0; e < table.energy_keV.size(); ++e) {
    out << format_double(table.energy_keV[e]);
    for (Index c = 0; c < table.mu.rows(); ++c)
      out << ',' << format_double(table.mu(c, static_cast<Index>(e)));
    out << '\n';
  }
  finish_write(out, path);
}

SourceProfile parse_source_csv(std::istream& is, const std::string& source) {
  std::string line;
  std::size_t lineno = 0;
  if (!next_line(is, line, lineno)) throw Error(source + ": empty source file");
  const auto header = split_csv(line);
  if (header.size() != 2 || header[0] != "energy_keV" || header[1] != "intensity") {
    throw Error(at(source, lineno) + ": header must be 'energy_keV,intensity'");
  }
  SourceProfile p;
  while (next_line(is, line, lineno)) {
    const auto fields = split_csv(line);
    const std::string where = at(source, lineno);
    if (fields.size() != 2) {
      throw Error(where + ": expected 2 fields, got " + std::to_string(fields.size()));
    }
    const double e = parse_double(fields[0], where);
    const double v = parse_double(fields[1], where);
    if (!std::isfinite(e) || e <= 0.0) throw Error(where + ": energy must be positive");
    if (!p.energy_keV.empty() && e <= p.energy_keV.back()) {
      throw Error(where + ": energies must be strictly ascending");
    }
    if (!std::isfinite(v) || v < 0.0) throw Error(where + ": intensity must be finite and >= 0");
    p.energy_keV.push_back(e);
    p.intensity.push_back(v);
  }
  if (p.energy_keV.size() < 2) throw Error(source + ": need at least two energies");
  return p;
}

SourceProfile load_source_csv(const std::string& path) {
  auto in = open_in(path);
  return parse_source_csv(in, path);
}

namespace {

constexpr std::array<char, 4> kMagic = {'A', 'D', 'J', 'M'};

void put_u32(std::ostream& os, std::uint32_t v) {
  const std::array<char, 4> b = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                                 static_cast<char>((v >> 16) & 0xff),
                                 static_cast<char>((v >> 24) & 0xff)};
  os.write(b.data(), 4);
}

std::uint32_t get_u32(std::istream& is, const std::string& source) {
  std::array<unsigned char, 4> b{};
  if (!is.read(reinterpret_cast<char*>(b.data()), 4)) throw Error(source + ": truncated header");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f64(std::ostream& os, double v) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, &v, sizeof bits);
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[static_cast<std::size_t>(i)] = static_cast<char>((bits >> (8 * i)) & 0xff);
  os.write(b.data(), 8);
}

}  // namespace

void write_matrix(std::ostream& os, const Eigen::Ref<const Matrix>& m) {
  constexpr auto limit = static_cast<Index>(std::numeric_limits<std::uint32_t>::max());
  require(m.rows() <= limit && m.cols() <= limit, "write_matrix: dimensions exceed u32");
  os.write(kMagic.data(), 4);
  put_u32(os, static_cast<std::uint32_t>(m.rows()));
  put_u32(os, static_cast<std::uint32_t>(m.cols()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) put_f64(os, m(i, j));
}

Matrix read_matrix(std::istream& is, const std::string& source) {
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), 4)) throw Error(source + ": truncated header");
  if (magic != kMagic) throw Error(source + ": bad magic, not an ADJM matrix file");
  const std::uint32_t rows = get_u32(is, source);
  const std::uint32_t cols = get_u32(is, source);
  const std::size_t count = static_cast<std::size_t>(rows) * cols;
  std::vector<unsigned char> raw(count * 8);
  if (count > 0 && !is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
    throw Error(source + ": truncated data, expected " + std::to_string(count) + " values");
  }
  if (is.peek() != std::char_traits<char>::eof()) throw Error(source + ": trailing bytes after data");
  Matrix m(rows, cols);
  for (std::size_t k = 0; k < count; ++k) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(raw[k * 8 + static_cast<std::size_t>(i)]) << (8 * i);
    double v = 0.0;
    std::memcpy(&v, &bits, sizeof v);
    m(static_cast<Index>(k / cols), static_cast<Index>(k % cols)) = v;
  }
  return m;
}

void save_matrix(const std::string& path, const Eigen::Ref<const Matrix>& m) {
  auto out = open_out(path, std::ios::out | std::ios::binary | std::ios::trunc);
  write_matrix(out, m);
  finish_write(out, path);
}

Matrix load_matrix(const std::string& path) {
  auto in = open_in(path, std::ios::in | std::ios::binary);
  return read_matrix(in, path);
}

void save_matrix_csv(const std::string& path, const Eigen::Ref<const Matrix>& m) {
  auto out = open_out(path);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
  finish_write(out, path);
}

Matrix load_matrix_csv(const std::string& path) {
  auto in = open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (next_line(in, line, lineno)) {
    const auto fields = split_csv(line);
    const std::string where = at(path, lineno);
    if (!rows.empty() && fields.size() != rows.front().size()) {
      throw Error(where + ": expected " + std::to_string(rows.front().size()) + " fields, got " +
                  std::to_string(fields.size()));
    }
    std::vector<double> row;
    for (const auto& f : fields) row.push_back(parse_double(f, where));
    rows.push_back(std::move(row));
  }
  Matrix m(static_cast<Index>(rows.size()), rows.empty() ? 0 : static_cast<Index>(rows[0].size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

void export_pgm16(const std::string& path, const Eigen::Ref<const Vector>& image, int width,
                  int height, double lo, double hi) {
  require(width > 0 && height > 0, "export_pgm16: dimensions must be positive");
  require(image.size() == static_cast<Index>(width) * height,
          "export_pgm16: image has " + std::to_string(image.size()) + " pixels, expected " +
              std::to_string(static_cast<Index>(width) * height));
  require(std::isfinite(lo) && std::isfinite(hi) && lo < hi, "export_pgm16: need min < max");
  auto out = open_out(path, std::ios::out | std::ios::binary | std::ios::trunc);
  out << "P5\n" << width << ' ' << height << "\n65535\n";
  std::vector<char> data(static_cast<std::size_t>(image.size()) * 2);
  for (Index k = 0; k < image.size(); ++k) {
    double t = (image[k] - lo) / (hi - lo);
    if (!(t > 0.0)) t = 0.0;  // also maps NaN to 0
    if (t > 1.0) t = 1.0;
    const auto v = static_cast<std::uint16_t>(std::lround(t * 65535.0));
    data[static_cast<std::size_t>(2 * k)] = static_cast<char>(v >> 8);
    data[static_cast<std::size_t>(2 * k + 1)] = static_cast<char>(v & 0xff);
  }
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  finish_write(out, path);
}

PgmImage read_pgm(const std::string& path) {
  auto in = open_in(path, std::ios::in | std::ios::binary);
  auto token = [&]() {
    std::string t;
    char c = 0;
    while (in.get(c)) {
      if (c == '#') {
        std::string skip;
        std::getline(in, skip);
      } else if (!std::isspace(static_cast<unsigned char>(c))) {
        t.push_back(c);
        break;
      }
    }
    while (in.get(c) && !std::isspace(static_cast<unsigned char>(c))) t.push_back(c);
    if (t.empty()) throw Error(path + ": truncated PGM header");
    return t;
  };
  if (token() != "P5") throw Error(path + ": not a binary PGM (P5)");
  PgmImage img;
  try {
    img.width = std::stoi(token());
    img.height = std::stoi(token());
    img.maxval = std::stoi(token());
  } catch (const std::logic_error&) {
    throw Error(path + ": malformed PGM header");
  }
  if (img.width <= 0 || img.height <= 0 || img.maxval <= 0 || img.maxval > 65535) {
    throw Error(path + ": invalid PGM dimensions or maxval");
  }
  const std::size_t n = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height);
  const std::size_t bytes = img.maxval > 255 ? 2 : 1;
  std::vector<unsigned char> raw(n * bytes);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
    throw Error(path + ": truncated PGM data");
  }
  img.pixels.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    img.pixels[k] = bytes == 2 ? static_cast<std::uint16_t>((raw[2 * k] << 8) | raw[2 * k + 1])
                               : raw[k];
  }
  return img;
}

void write_history_header(std::ostream& os) { os << "iter,objective,eps_abs,eps_rel,alpha,beta\n"; }

void write_history_row(std::ostream& os, const IterationRecord& rec) {
  os << rec.iter << ',' << format_double(rec.objective) << ',' << format_double(rec.eps_abs)
     << ',' << format_double(rec.eps_rel) << ',' << format_double(rec.alpha) << ','
     << format_double(rec.beta) << '\n';
}

void save_history_csv(const std::string& path, const std::vector<IterationRecord>& history) {
  auto out = open_out(path);
  write_history_header(out);
  for (const auto& r : history) write_history_row(out, r);
  finish_write(out, path);
}

HistoryWriter::HistoryWriter(const std::string& path) : out_(open_out(path)) {
  write_history_header(out_);
  out_.flush();
}

void HistoryWriter::append(const IterationRecord& rec) {
  write_history_row(out_, rec);
  out_.flush();
  if (!out_) throw Error("history write failed");
}

}  // namespace adjust
