#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "vrem/data.hpp"
#include "vrem/errors.hpp"

namespace vrem {
namespace {

constexpr char kMagic[4] = {'E', 'M', 'D', 'S'};

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::vector<std::string_view> split_cells(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

RawDataset parse_csv(const std::string& text, bool has_header) {
  std::vector<double> values;
  std::size_t d = 0;
  std::size_t n = 0;
  std::size_t row = 0;
  std::size_t pos = 0;
  bool header_pending = has_header;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    const std::string_view line = trim(std::string_view(text).substr(pos, nl - pos));
    pos = nl + 1;
    ++row;
    if (line.empty()) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    const auto cells = split_cells(line);
    if (d == 0) d = cells.size();
    if (cells.size() != d)
      throw ParseError("expected " + std::to_string(d) + " columns, found " +
                           std::to_string(cells.size()),
                       row, std::min(cells.size(), d) + 1);
    for (std::size_t j = 0; j < cells.size(); ++j) {
      const auto cell = trim(cells[j]);
      double v = 0.0;
      const char* first = cell.data();
      const char* last = first + cell.size();
      if (!cell.empty() && *first == '+') ++first;
      const auto res = std::from_chars(first, last, v);
      if (cell.empty() || res.ec != std::errc() || res.ptr != last)
        throw ParseError("not a number: '" + std::string(cell) + "'", row, j + 1);
      if (!std::isfinite(v)) throw ParseError("non-finite value", row, j + 1);
      values.push_back(v);
    }
    ++n;
  }
  if (n == 0) throw ParseError("no data rows", row, 0);
  RawDataset out;
  out.values = Eigen::Map<const RowMatrix>(values.data(), static_cast<Eigen::Index>(n),
                                           static_cast<Eigen::Index>(d));
  return out;
}

template <class T>
T read_le(const std::string& bytes, std::size_t offset) {
  T v;
  std::memcpy(&v, bytes.data() + offset, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    auto* p = reinterpret_cast<unsigned char*>(&v);
    std::reverse(p, p + sizeof(T));
  }
  return v;
}

template <class T>
void write_le(std::ostream& out, T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto* p = reinterpret_cast<unsigned char*>(&v);
    std::reverse(p, p + sizeof(T));
  }
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

RawDataset parse_packed(const std::string& bytes) {
  if (bytes.size() < 20 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw ParseError("missing EMDS header", 0, 0);
  const auto n = read_le<std::uint64_t>(bytes, 4);
  const auto d = read_le<std::uint64_t>(bytes, 12);
  if (n == 0 || d == 0) throw ParseError("empty dataset", 0, 0);
  if (d > (bytes.size() - 20) / 8 || n > (bytes.size() - 20) / 8 / d ||
      bytes.size() != 20 + 8 * n * d)
    throw ParseError("payload size does not match n = " + std::to_string(n) +
                         ", d = " + std::to_string(d),
                     0, 0);
  RawDataset out;
  out.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  std::size_t off = 20;
  for (std::uint64_t i = 0; i < n; ++i)
    for (std::uint64_t j = 0; j < d; ++j, off += 8) {
      const double v = read_le<double>(bytes, off);
      if (!std::isfinite(v)) throw ParseError("non-finite value", i + 1, j + 1);
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
  return out;
}

}  // namespace

DataFormat data_format_from_string(const std::string& text) {
  if (text == "csv") return DataFormat::kCsv;
  if (text == "packed-binary" || text == "emds" || text == "bin") return DataFormat::kPackedBinary;
  throw ArgumentError("unknown data format '" + text + "'");
}

DataFormat data_format_from_path(const std::string& path) {
  auto ends_with = [&](const char* ext) {
    const std::size_t len = std::strlen(ext);
    return path.size() >= len && path.compare(path.size() - len, len, ext) == 0;
  };
  return ends_with(".emds") || ends_with(".bin") ? DataFormat::kPackedBinary : DataFormat::kCsv;
}

RawDataset load_dataset(const std::string& path, DataFormat format, bool has_header) {
  const std::string bytes = read_all(path);
  RawDataset out = format == DataFormat::kCsv ? parse_csv(bytes, has_header) : parse_packed(bytes);
  out.provenance = "file " + path + " fnv1a=" + hex64(fnv1a(bytes));
  return out;
}

void save_dataset(const RawDataset& data, const std::string& path, DataFormat format) {
  if (data.rows() == 0 || data.cols() == 0) throw ArgumentError("empty dataset");
  if (!data.values.allFinite()) throw ArgumentError("dataset has non-finite entries");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  if (format == DataFormat::kPackedBinary) {
    out.write(kMagic, 4);
    write_le<std::uint64_t>(out, data.rows());
    write_le<std::uint64_t>(out, data.cols());
    for (Eigen::Index i = 0; i < data.values.rows(); ++i)
      for (Eigen::Index j = 0; j < data.values.cols(); ++j) write_le<double>(out, data.values(i, j));
  } else {
    char buf[32];
    for (Eigen::Index i = 0; i < data.values.rows(); ++i) {
      for (Eigen::Index j = 0; j < data.values.cols(); ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", data.values(i, j));
        if (j) out << ',';
        out << buf;
      }
      out << '\n';
    }
  }
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace vrem
