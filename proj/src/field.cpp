#include "field.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace heatflow {

TemperatureField::TemperatureField(int height, int width, double fill)
    : height_(height), width_(width) {
  if (height < 1 || width < 1) {
    fail(ErrorCode::invalid_argument,
         "TemperatureField: dimensions must be positive, got " +
             std::to_string(height) + "x" + std::to_string(width));
  }
  values_.assign(static_cast<size_t>(height) * width, fill);
}

TemperatureField::TemperatureField(int height, int width,
                                   std::vector<double> values)
    : height_(height), width_(width), values_(std::move(values)) {
  if (height < 1 || width < 1 ||
      values_.size() != static_cast<size_t>(height) * width) {
    fail(ErrorCode::invalid_argument,
         "TemperatureField: value count does not match " +
             std::to_string(height) + "x" + std::to_string(width));
  }
}

bool TemperatureField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

TemperatureField make_problem(const BoundarySpec& spec) {
  if (spec.size < 3) {
    fail(ErrorCode::invalid_argument,
         "make_problem: size must be at least 3, got " +
             std::to_string(spec.size));
  }
  for (double edge : {spec.top, spec.bottom, spec.left, spec.right}) {
    if (!std::isfinite(edge)) {
      fail(ErrorCode::invalid_argument,
           "make_problem: edge temperatures must be finite");
    }
  }
  const int n = spec.size;
  TemperatureField field(n, n, 0.0);
  for (int j = 0; j < n; ++j) field(0, j) = spec.top;
  for (int j = 0; j < n; ++j) field(n - 1, j) = spec.bottom;
  for (int i = 0; i < n; ++i) field(i, 0) = spec.left;
  for (int i = 0; i < n; ++i) field(i, n - 1) = spec.right;
  return field;
}

BoundarySpec sample_boundary(Rng& rng, int size) {
  if (size < 3) {
    fail(ErrorCode::invalid_argument,
         "sample_boundary: size must be at least 3, got " +
             std::to_string(size));
  }
  BoundarySpec spec;
  spec.top = rng.uniform(0.0, kTemperatureRange);
  spec.bottom = rng.uniform(0.0, kTemperatureRange);
  spec.left = rng.uniform(0.0, kTemperatureRange);
  spec.right = rng.uniform(0.0, kTemperatureRange);
  spec.size = size;
  return spec;
}

ErrorReport per_pixel_error(const TemperatureField& predicted,
                            const TemperatureField& truth) {
  if (!predicted.same_shape(truth)) {
    fail(ErrorCode::dimension_mismatch,
         "per_pixel_error: shapes differ, " + std::to_string(predicted.height()) +
             "x" + std::to_string(predicted.width()) + " vs " +
             std::to_string(truth.height()) + "x" +
             std::to_string(truth.width()));
  }
  const auto p = predicted.values();
  const auto t = truth.values();
  double sum = 0.0, sum_sq = 0.0, max_err = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    double err = std::abs(p[i] - t[i]) / kTemperatureRange * 100.0;
    sum += err;
    sum_sq += err * err;
    max_err = std::max(max_err, err);
  }
  ErrorReport report;
  report.n_pixels = static_cast<int64_t>(p.size());
  report.mean_percent = sum / static_cast<double>(report.n_pixels);
  double variance =
      sum_sq / static_cast<double>(report.n_pixels) -
      report.mean_percent * report.mean_percent;
  report.std_percent = std::sqrt(std::max(variance, 0.0));
  report.max_percent = max_err;
  return report;
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) fail(ErrorCode::internal, "format_double failed");
  return std::string(buf, ptr);
}

namespace {

double parse_double(std::string_view token, const std::filesystem::path& path,
                    int line_no) {
  double value = 0.0;
  auto begin = token.data();
  auto end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    fail(ErrorCode::parse, path.string() + ":" + std::to_string(line_no) +
                               ": invalid number '" + std::string(token) + "'");
  }
  return value;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    fail(ErrorCode::io, "cannot open for writing: " + path.string());
  }
  return out;
}

std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    fail(ErrorCode::io, "cannot open for reading: " + path.string());
  }
  return in;
}

}  // namespace

void write_field_csv(const TemperatureField& field,
                     const std::filesystem::path& path) {
  auto out = open_for_write(path);
  std::string line;
  for (int i = 0; i < field.height(); ++i) {
    line.clear();
    for (int j = 0; j < field.width(); ++j) {
      if (j > 0) line += ',';
      line += format_double(field(i, j));
    }
    line += '\n';
    out << line;
  }
  if (!out) fail(ErrorCode::io, "write failed: " + path.string());
}

TemperatureField read_field_csv(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  std::vector<double> values;
  std::string line;
  int width = -1;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      fail(ErrorCode::parse,
           path.string() + ":" + std::to_string(line_no) + ": empty row");
    }
    int cols = 0;
    size_t pos = 0;
    while (pos <= line.size()) {
      size_t comma = line.find(',', pos);
      size_t end = (comma == std::string::npos) ? line.size() : comma;
      values.push_back(
          parse_double(std::string_view(line).substr(pos, end - pos), path,
                       line_no));
      ++cols;
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (width == -1) {
      width = cols;
    } else if (cols != width) {
      fail(ErrorCode::parse, path.string() + ":" + std::to_string(line_no) +
                                 ": expected " + std::to_string(width) +
                                 " columns, got " + std::to_string(cols));
    }
  }
  if (width <= 0 || values.empty()) {
    fail(ErrorCode::parse, path.string() + ":1: no data rows");
  }
  int height = static_cast<int>(values.size()) / width;
  return TemperatureField(height, width, std::move(values));
}

void write_field_pgm(const TemperatureField& field,
                     const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << "P2\n" << field.width() << ' ' << field.height() << "\n10000\n";
  std::string line;
  for (int i = 0; i < field.height(); ++i) {
    line.clear();
    for (int j = 0; j < field.width(); ++j) {
      double v = std::clamp(field(i, j), 0.0, kTemperatureRange);
      long pixel = std::lround(v * 100.0);
      if (j > 0) line += ' ';
      line += std::to_string(pixel);
    }
    line += '\n';
    out << line;
  }
  if (!out) fail(ErrorCode::io, "write failed: " + path.string());
}

TemperatureField read_field_pgm(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  // Token scanner with '#' comment skipping, tracking line numbers.
  int line_no = 1;
  auto next_token = [&](bool required) -> std::string {
    std::string token;
    char c;
    while (in.get(c)) {
      if (c == '\n') {
        ++line_no;
        if (!token.empty()) return token;
        continue;
      }
      if (c == '#') {
        std::string rest;
        std::getline(in, rest);
        ++line_no;
        if (!token.empty()) return token;
        continue;
      }
      if (c == ' ' || c == '\t' || c == '\r') {
        if (!token.empty()) return token;
        continue;
      }
      token += c;
    }
    if (token.empty() && required) {
      fail(ErrorCode::parse, path.string() + ":" + std::to_string(line_no) +
                                 ": unexpected end of file");
    }
    return token;
  };

  if (next_token(true) != "P2") {
    fail(ErrorCode::format, path.string() + ":1: not a P2 PGM file");
  }
  auto parse_int = [&](const std::string& token) -> long {
    long v = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
      fail(ErrorCode::parse, path.string() + ":" + std::to_string(line_no) +
                                 ": invalid integer '" + token + "'");
    }
    return v;
  };
  long width = parse_int(next_token(true));
  long height = parse_int(next_token(true));
  long maxval = parse_int(next_token(true));
  if (width < 1 || height < 1) {
    fail(ErrorCode::format, path.string() + ": invalid dimensions");
  }
  if (maxval != 10000) {
    fail(ErrorCode::format, path.string() + ": expected maxval 10000, got " +
                                std::to_string(maxval));
  }
  std::vector<double> values;
  values.reserve(static_cast<size_t>(width) * height);
  for (long i = 0; i < width * height; ++i) {
    long pixel = parse_int(next_token(true));
    if (pixel < 0 || pixel > maxval) {
      fail(ErrorCode::parse, path.string() + ":" + std::to_string(line_no) +
                                 ": pixel out of range: " +
                                 std::to_string(pixel));
    }
    values.push_back(static_cast<double>(pixel) / 100.0);
  }
  return TemperatureField(static_cast<int>(height), static_cast<int>(width),
                          std::move(values));
}

void write_field(const TemperatureField& field,
                 const std::filesystem::path& path) {
  auto ext = path.extension().string();
  if (ext == ".csv") {
    write_field_csv(field, path);
  } else if (ext == ".pgm") {
    write_field_pgm(field, path);
  } else {
    fail(ErrorCode::invalid_argument,
         "unsupported field extension '" + ext + "' (use .csv or .pgm): " +
             path.string());
  }
}

TemperatureField read_field(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  if (ext == ".csv") return read_field_csv(path);
  if (ext == ".pgm") return read_field_pgm(path);
  fail(ErrorCode::invalid_argument,
       "unsupported field extension '" + ext + "' (use .csv or .pgm): " +
           path.string());
}

}  // namespace heatflow
