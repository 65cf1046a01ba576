#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace qilab {

// Execution policy: `serial` is the reference implementation, `parallel` the
// OpenMP one. Both must produce identical results; tests compare them.
enum class Exec { serial, parallel };

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Plain parallel loop over [0, n). The body must not depend on ordering.
template <class F>
void parallel_for(Exec exec, int64_t n, F&& body) {
  if (exec == Exec::parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) body(i);
    return;
#endif
  }
  for (int64_t i = 0; i < n; ++i) body(i);
}

// Deterministic chunked loop: the chunk grid depends only on (n, chunk), never
// on the thread count, so per-chunk partial results can be combined in chunk
// order to give bit-identical totals under any parallelism.
template <class F>
void parallel_chunks(Exec exec, int64_t n, int64_t chunk, F&& body) {
  if (chunk <= 0) chunk = 1;
  const int64_t n_chunks = (n + chunk - 1) / chunk;
  if (exec == Exec::parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
    for (int64_t c = 0; c < n_chunks; ++c) {
      const int64_t lo = c * chunk;
      const int64_t hi = lo + chunk < n ? lo + chunk : n;
      body(c, lo, hi);
    }
    return;
#endif
  }
  for (int64_t c = 0; c < n_chunks; ++c) {
    const int64_t lo = c * chunk;
    const int64_t hi = lo + chunk < n ? lo + chunk : n;
    body(c, lo, hi);
  }
}

// Sum of f(i) over [0, n) with a fixed chunk grid: partials are accumulated
// serially within each chunk and combined in chunk order.
template <class F>
double deterministic_sum(Exec exec, int64_t n, int64_t chunk, F&& f) {
  const int64_t n_chunks = chunk > 0 ? (n + chunk - 1) / chunk : 0;
  std::vector<double> partial(static_cast<size_t>(n_chunks), 0.0);
  parallel_chunks(exec, n, chunk, [&](int64_t c, int64_t lo, int64_t hi) {
    double s = 0.0;
    for (int64_t i = lo; i < hi; ++i) s += f(i);
    partial[static_cast<size_t>(c)] = s;
  });
  double total = 0.0;
  for (double s : partial) total += s;
  return total;
}

}  // namespace qilab
