#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace qilab {

// Failure categories surfaced by library operations. Every throwing operation
// documents which kinds it can raise; the CLI maps any Error to exit code 2.
enum class ErrorKind {
  invalid_params,
  size_cap,
  empty_generation,
  empty_map,
  degenerate_domain,
  net_mismatch,
  disconnected,
  pole_or_below,
  wrong_net,
  no_edges,
  no_c1_estimate,
  boundary_map_undefined,
  nonpositive_c,
  too_few_points,
  nonpositive_values,
  coincident_points,
  io_error,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& message);
  ErrorKind kind() const { return kind_; }

private:
  ErrorKind kind_;
};

// Deterministic random stream. All randomness in the library flows from a
// single 64-bit seed through named derived streams, and doubles are produced
// from raw bits, so results are identical across platforms and thread counts.
class Rng {
public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64();
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  // Uniform integer in [0, n).
  uint64_t below(uint64_t n);
  // Standard normal via Box-Muller (deterministic, no cached spare).
  double normal();
  // Independent stream labeled by a string, derived from this stream's seed
  // without advancing it.
  Rng derive(const std::string& label) const;
  Rng derive(uint64_t label) const;

private:
  uint64_t state_;
};

// Shortest round-trip-safe decimal rendering used for all CSV numbers.
std::string format_double(double v);

// FNV-1a string hash (used for naming derived random streams).
uint64_t hash64(const std::string& s);

}  // namespace qilab
