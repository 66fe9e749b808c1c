#pragma once

#include <exception>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace capit {

/// Selects the OpenMP kernel or its serial reference. Both must produce
/// bit-identical results; the serial path exists for testing and benchmarks.
enum class Execution { Serial, Parallel };

/// Worker count for Parallel loops: CAPIT_THREADS when set and positive,
/// capped by the OpenMP maximum.
int worker_count();

/// Runs body(i) for i in [0, n). Each index must write only its own output
/// slot. The first exception (lowest index) is rethrown after the loop.
template <class Body>
void for_each_index(long n, Execution exec, Body&& body) {
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  if (exec == Execution::Serial || n < 2) {
    for (long i = 0; i < n; ++i) {
      try {
        body(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  } else {
#ifdef _OPENMP
    const int threads = worker_count();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
#endif
    for (long i = 0; i < n; ++i) {
      try {
        body(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace capit
