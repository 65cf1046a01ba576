#include "qilab/common.hpp"

#include <cmath>
#include <cstdio>

namespace qilab {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_params: return "InvalidParams";
    case ErrorKind::size_cap: return "SizeCap";
    case ErrorKind::empty_generation: return "EmptyGeneration";
    case ErrorKind::empty_map: return "EmptyMap";
    case ErrorKind::degenerate_domain: return "DegenerateDomain";
    case ErrorKind::net_mismatch: return "NetMismatch";
    case ErrorKind::disconnected: return "Disconnected";
    case ErrorKind::pole_or_below: return "PoleOrBelow";
    case ErrorKind::wrong_net: return "WrongNet";
    case ErrorKind::no_edges: return "NoEdges";
    case ErrorKind::no_c1_estimate: return "NoC1Estimate";
    case ErrorKind::boundary_map_undefined: return "BoundaryMapUndefined";
    case ErrorKind::nonpositive_c: return "NonpositiveC";
    case ErrorKind::too_few_points: return "TooFewPoints";
    case ErrorKind::nonpositive_values: return "NonpositiveValues";
    case ErrorKind::coincident_points: return "CoincidentPoints";
    case ErrorKind::io_error: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

namespace {

inline uint64_t splitmix64(uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

uint64_t Rng::next_u64() { return splitmix64(state_); }

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

uint64_t Rng::below(uint64_t n) {
  if (n == 0) return 0;
  // Rejection sampling to avoid modulo bias.
  const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  uint64_t v = next_u64();
  while (v >= limit) v = next_u64();
  return v % n;
}

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

Rng Rng::derive(const std::string& label) const { return derive(hash64(label)); }

Rng Rng::derive(uint64_t label) const {
  uint64_t s = state_ ^ (0x9E3779B97F4A7C15ULL + label);
  splitmix64(s);  // decorrelate nearby labels
  return Rng(s);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

uint64_t hash64(const std::string& s) {
  uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace qilab
