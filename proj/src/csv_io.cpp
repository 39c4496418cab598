#include "magloc/csv_io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>

namespace magloc {

std::string echo_line(const std::string& config_hash, std::uint64_t seed) {
  return "# config_hash=" + config_hash + " seed=" + std::to_string(seed);
}

void write_sample_header(std::ostream& os, const std::string& config_hash, std::uint64_t seed) {
  os << echo_line(config_hash, seed) << '\n' << kSampleHeader << '\n';
}

void write_sample_row(std::ostream& os, const SensorSample& s) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f,%.6f\n", s.t, s.field.x(), s.field.y(), s.field.z());
  os << buf;
}

void write_estimate_header(std::ostream& os, const std::string& config_hash, std::uint64_t seed) {
  os << echo_line(config_hash, seed) << '\n' << kEstimateHeader << '\n';
}

void write_estimate_row(std::ostream& os, double t, const PositionEstimate& est) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f,%s\n", t, est.position.x(), est.position.y(),
                std::string(to_string(est.quality)).c_str());
  os << buf;
}

std::optional<SensorSample> parse_sample_row(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::array<double, 4> v{};
  const char* p = line.data();
  const char* end = line.data() + line.size();
  for (std::size_t i = 0; i < v.size(); ++i) {
    while (p < end && *p == ' ') ++p;
    const auto [ptr, ec] = std::from_chars(p, end, v[i]);
    if (ec != std::errc() || !std::isfinite(v[i])) return std::nullopt;
    p = ptr;
    while (p < end && *p == ' ') ++p;
    if (i + 1 < v.size()) {
      if (p == end || *p != ',') return std::nullopt;
      ++p;
    }
  }
  if (p != end) return std::nullopt;
  return SensorSample{v[0], Vec3(v[1], v[2], v[3])};
}

std::optional<SensorSample> SampleCsvReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_no_;
    std::string_view view(line);
    if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
    if (view.empty() || view.front() == '#' || view == kSampleHeader) continue;
    if (auto s = parse_sample_row(view)) return s;
    ++malformed_;
    bad_lines_.push_back(line_no_);
  }
  return std::nullopt;
}

std::vector<SensorSample> read_samples(std::istream& in, std::size_t* malformed) {
  SampleCsvReader reader(in);
  std::vector<SensorSample> out;
  while (auto s = reader.next()) out.push_back(*s);
  if (malformed) *malformed = reader.malformed();
  return out;
}

}  // namespace magloc
