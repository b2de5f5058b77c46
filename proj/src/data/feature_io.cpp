#include "opencon/data/feature_io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "opencon/core/error.hpp"

namespace opencon::data {

static_assert(std::endian::native == std::endian::little, "feature files assume a little-endian host");

namespace {

constexpr char kMagic[4] = {'O', 'C', 'F', 'T'};
constexpr std::uint32_t kVersion = 1;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

[[noreturn]] void parse_error(std::size_t line, std::size_t offset, const std::string& what) {
  fail(ErrorCode::ParseError, "line " + std::to_string(line) + ", offset " + std::to_string(offset) +
                                  ": " + what);
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

template <class T>
bool parse_number(std::string_view field, T& value) {
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  return ec == std::errc() && ptr == last;
}

}  // namespace

FeatureFormat format_from_path(const std::filesystem::path& path) {
  return path.extension() == ".ocft" ? FeatureFormat::Binary : FeatureFormat::Csv;
}

Dataset parse_csv(std::string_view text) {
  Dataset ds;
  std::size_t line_no = 0;
  std::size_t offset = 0;
  bool have_header = false;
  while (offset < text.size()) {
    auto end = text.find('\n', offset);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(offset, end - offset);
    const std::size_t line_offset = offset;
    offset = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    const auto fields = split_commas(line);
    if (!have_header) {
      if (fields.size() < 2 || fields[0] != "id" || fields[1] != "label") {
        parse_error(line_no, line_offset, "header must start with id,label");
      }
      for (std::size_t k = 2; k < fields.size(); ++k) {
        if (fields[k] != "f" + std::to_string(k - 2)) {
          parse_error(line_no, line_offset, "feature column " + std::to_string(k - 2) + " misnamed");
        }
      }
      ds.dim = fields.size() - 2;
      have_header = true;
      continue;
    }
    if (fields.size() != ds.dim + 2) {
      fail(ErrorCode::DimensionMismatch, "line " + std::to_string(line_no) + ": expected " +
                                             std::to_string(ds.dim) + " features, got " +
                                             std::to_string(fields.size() < 2 ? 0 : fields.size() - 2));
    }
    Sample s;
    if (!parse_number(fields[0], s.id)) parse_error(line_no, line_offset, "bad id");
    if (!parse_number(fields[1], s.true_class) || s.true_class < kNoLabel) {
      parse_error(line_no, line_offset, "bad label");
    }
    s.input.resize(ds.dim);
    std::size_t field_offset = line_offset + fields[0].size() + fields[1].size() + 2;
    for (std::size_t k = 0; k < ds.dim; ++k) {
      float f = 0.0f;
      if (!parse_number(fields[k + 2], f) || !std::isfinite(f)) {
        parse_error(line_no, field_offset, "bad feature f" + std::to_string(k));
      }
      s.input[k] = static_cast<double>(f);
      field_offset += fields[k + 2].size() + 1;
    }
    ds.samples.push_back(std::move(s));
  }
  if (!have_header) parse_error(1, 0, "missing header");
  return ds;
}

namespace {

template <class T>
T read_pod(const std::string& buf, std::size_t& pos) {
  if (pos + sizeof(T) > buf.size()) {
    fail(ErrorCode::ParseError, "truncated binary feature file at offset " + std::to_string(pos));
  }
  T v;
  std::memcpy(&v, buf.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

template <class T>
void write_pod(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

Dataset parse_binary(const std::string& buf) {
  std::size_t pos = 0;
  if (buf.size() < 4 || std::memcmp(buf.data(), kMagic, 4) != 0) {
    fail(ErrorCode::ParseError, "bad magic at offset 0");
  }
  pos = 4;
  const auto version = read_pod<std::uint32_t>(buf, pos);
  if (version != kVersion) fail(ErrorCode::ParseError, "unsupported version " + std::to_string(version));
  const auto n = read_pod<std::uint32_t>(buf, pos);
  const auto m = read_pod<std::uint32_t>(buf, pos);
  const auto has_labels = read_pod<std::uint8_t>(buf, pos);
  const std::size_t need = std::size_t{n} * m * 4 + (has_labels ? std::size_t{n} * 4 : 0);
  if (buf.size() - pos != need) {
    fail(ErrorCode::DimensionMismatch, "payload is " + std::to_string(buf.size() - pos) +
                                           " bytes, header implies " + std::to_string(need));
  }
  Dataset ds;
  ds.dim = m;
  ds.samples.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    auto& s = ds.samples[i];
    s.id = i;
    s.input.resize(m);
    for (std::uint32_t k = 0; k < m; ++k) s.input[k] = static_cast<double>(read_pod<float>(buf, pos));
  }
  for (std::uint32_t i = 0; i < n; ++i) {
    ds.samples[i].true_class = has_labels ? read_pod<std::int32_t>(buf, pos) : kNoLabel;
  }
  return ds;
}

}  // namespace

Dataset read_features(const std::filesystem::path& path, FeatureFormat format) {
  const std::string buf = read_file(path);
  return format == FeatureFormat::Binary ? parse_binary(buf) : parse_csv(buf);
}

void write_features(const std::filesystem::path& path, const Dataset& dataset, FeatureFormat format,
                    bool with_labels) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  for (const auto& s : dataset.samples) {
    if (s.input.size() != dataset.dim) fail(ErrorCode::DimensionMismatch, "sample dimension differs");
  }
  if (format == FeatureFormat::Binary) {
    out.write(kMagic, 4);
    write_pod<std::uint32_t>(out, kVersion);
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(dataset.samples.size()));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(dataset.dim));
    write_pod<std::uint8_t>(out, with_labels ? 1 : 0);
    for (const auto& s : dataset.samples) {
      for (double x : s.input) write_pod<float>(out, static_cast<float>(x));
    }
    if (with_labels) {
      for (const auto& s : dataset.samples) write_pod<std::int32_t>(out, s.true_class);
    }
  } else {
    out << "id,label";
    for (std::size_t k = 0; k < dataset.dim; ++k) out << ",f" << k;
    out << '\n';
    char buf[64];
    for (const auto& s : dataset.samples) {
      out << s.id << ',' << (with_labels ? s.true_class : kNoLabel);
      for (double x : s.input) {
        // Shortest representation that round-trips the f32 value.
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), static_cast<float>(x));
        out << ',' << std::string_view(buf, static_cast<std::size_t>(ptr - buf));
      }
      out << '\n';
    }
  }
  if (!out) fail(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace opencon::data
