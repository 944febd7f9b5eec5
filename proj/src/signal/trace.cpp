#include "signal/trace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "common/error.hpp"

namespace gaitfuse::signal {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    std::size_t b = 0;
    while (b < cell.size() && cell[b] == ' ') ++b;
    out.push_back(cell.substr(b));
  }
  return out;
}

double parse_number(const std::string& s, std::size_t line_no) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v))
    fail(ErrorCode::Parse, "line " + std::to_string(line_no) + ": bad number '" + s + "'");
  return v;
}

void append_number(std::string& out, double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

}  // namespace

void SensorTrace::validate() const {
  require(sample_rate > 0.0 && std::isfinite(sample_rate), ErrorCode::InvalidArgument,
          "sample rate must be positive");
  require(size() >= 1, ErrorCode::InvalidArgument, "trace is empty");
  for (const auto& a : axes) {
    require(a.size() == size(), ErrorCode::InvalidArgument, "axis lengths differ");
    for (double v : a)
      require(std::isfinite(v), ErrorCode::InvalidArgument, "trace holds a non-finite sample");
  }
}

SensorTrace SensorTrace::slice(std::size_t begin, std::size_t count) const {
  require(begin + count <= size(), ErrorCode::InvalidArgument, "slice out of range");
  SensorTrace t{sample_rate, {}, subject_id};
  for (int a = 0; a < 3; ++a)
    t.axes[a].assign(axes[a].begin() + static_cast<std::ptrdiff_t>(begin),
                     axes[a].begin() + static_cast<std::ptrdiff_t>(begin + count));
  return t;
}

SensorTrace ingest_csv(const std::filesystem::path& path, std::optional<double> sample_rate) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line).empty())
    fail(ErrorCode::EmptyInput, path.string() + " is empty");

  const auto header = split_csv_line(line);
  std::array<std::size_t, 4> col{};
  const std::array<const char*, 4> names{"t", "ax", "ay", "az"};
  std::string missing;
  for (std::size_t k = 0; k < 4; ++k) {
    auto it = std::find(header.begin(), header.end(), names[k]);
    if (it == header.end()) missing += std::string(missing.empty() ? "" : ",") + names[k];
    else col[k] = static_cast<std::size_t>(it - header.begin());
  }
  if (!missing.empty())
    fail(ErrorCode::MissingColumns, path.string() + " lacks column(s) " + missing);

  std::vector<double> t;
  std::array<std::vector<double>, 3> raw;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    for (std::size_t c : col)
      if (c >= cells.size())
        fail(ErrorCode::Parse, "line " + std::to_string(line_no) + " has too few fields");
    const double ti = parse_number(cells[col[0]], line_no);
    if (!t.empty() && ti <= t.back())
      fail(ErrorCode::NonMonotoneTime,
           "time does not increase at line " + std::to_string(line_no));
    t.push_back(ti);
    for (int a = 0; a < 3; ++a) raw[a].push_back(parse_number(cells[col[a + 1]], line_no));
  }
  if (t.empty()) fail(ErrorCode::EmptyInput, path.string() + " has no samples");

  const double span = t.back() - t.front();
  double rate = 1.0;
  if (sample_rate) {
    rate = *sample_rate;
  } else if (t.size() > 1) {
    rate = static_cast<double>(t.size() - 1) / span;
  }
  require(rate > 0.0 && std::isfinite(rate), ErrorCode::InvalidArgument,
          "sample rate must be positive");

  SensorTrace trace;
  trace.sample_rate = rate;
  trace.subject_id = path.stem().string();
  const auto n = static_cast<std::size_t>(std::floor(span * rate + 1e-9)) + 1;
  for (auto& a : trace.axes) a.reserve(n);
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ti = t.front() + static_cast<double>(i) / rate;
    while (j + 1 < t.size() && t[j + 1] <= ti) ++j;
    for (int a = 0; a < 3; ++a) {
      if (j + 1 >= t.size()) {
        trace.axes[a].push_back(raw[a][j]);
      } else {
        const double w = (ti - t[j]) / (t[j + 1] - t[j]);
        trace.axes[a].push_back(raw[a][j] + w * (raw[a][j + 1] - raw[a][j]));
      }
    }
  }
  return trace;
}

void write_csv(const SensorTrace& trace, const std::filesystem::path& path) {
  std::string out = "t,ax,ay,az\n";
  out.reserve(trace.size() * 64);
  for (std::size_t i = 0; i < trace.size(); ++i) {
    append_number(out, static_cast<double>(i) / trace.sample_rate);
    for (int a = 0; a < 3; ++a) {
      out += ',';
      append_number(out, trace.axes[a][i]);
    }
    out += '\n';
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  f << out;
  if (!f) fail(ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace gaitfuse::signal
