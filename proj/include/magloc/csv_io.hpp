#ifndef MAGLOC_CSV_IO_HPP
#define MAGLOC_CSV_IO_HPP

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "magloc/signal_synth.hpp"
#include "magloc/solver.hpp"

namespace magloc {

// Sample CSV: optional leading `#` comment lines, then the header
// `t,hx,hy,hz`, then one row per sample (t with 6 decimals, fields in µT).
// Estimate CSV: `t,x,y,quality`.
inline constexpr std::string_view kSampleHeader = "t,hx,hy,hz";
inline constexpr std::string_view kEstimateHeader = "t,x,y,quality";

std::string echo_line(const std::string& config_hash, std::uint64_t seed);

void write_sample_header(std::ostream& os, const std::string& config_hash, std::uint64_t seed);
void write_sample_row(std::ostream& os, const SensorSample& s);

void write_estimate_header(std::ostream& os, const std::string& config_hash, std::uint64_t seed);
void write_estimate_row(std::ostream& os, double t, const PositionEstimate& est);

/// Parses one data row; nullopt if it is malformed.
std::optional<SensorSample> parse_sample_row(std::string_view line);

/// Incremental reader. Comment lines, blank lines and the header are skipped;
/// malformed rows are counted and skipped.
class SampleCsvReader {
 public:
  explicit SampleCsvReader(std::istream& in) : in_(in) {}

  std::optional<SensorSample> next();
  std::size_t malformed() const { return malformed_; }
  std::size_t line_number() const { return line_no_; }
  /// Line numbers of skipped rows.
  const std::vector<std::size_t>& malformed_lines() const { return bad_lines_; }

 private:
  std::istream& in_;
  std::size_t malformed_ = 0;
  std::size_t line_no_ = 0;
  std::vector<std::size_t> bad_lines_;
};

std::vector<SensorSample> read_samples(std::istream& in, std::size_t* malformed = nullptr);

}  // namespace magloc

#endif  // MAGLOC_CSV_IO_HPP
