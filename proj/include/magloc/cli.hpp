#ifndef MAGLOC_CLI_HPP
#define MAGLOC_CLI_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace magloc {

/// Number of sensors a link can carry: floor(throughput / (rate · bytes)).
/// DomainError on non-positive input.
std::uint64_t capacity(double throughput_bytes_per_s, double update_rate_hz, double bytes_per_update);

/// Entry point behind the `magloc` executable. `args` excludes the program
/// name. `in` stands in for standard input when a path is '-'; `out`/`err`
/// for standard output/error. Returns the process exit status.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace magloc

#endif  // MAGLOC_CLI_HPP
