#include "capit/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

namespace capit {

int worker_count() {
#ifdef _OPENMP
  int limit = omp_get_max_threads();
#else
  int limit = 1;
#endif
  if (const char* env = std::getenv("CAPIT_THREADS")) {
    try {
      const int requested = std::stoi(env);
      if (requested > 0) limit = std::min(limit, requested);
    } catch (...) {
      // unparsable value: ignore
    }
  }
  return std::max(limit, 1);
}

}  // namespace capit
