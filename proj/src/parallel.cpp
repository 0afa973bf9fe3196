#include "kmdr/parallel.hpp"

#include <omp.h>

#include <cstdlib>
#include <string>

namespace kmdr::parallel {

void set_threads(int n) {
  if (n >= 1) omp_set_num_threads(n);
}

int max_threads() { return omp_get_max_threads(); }

int threads_from_env() {
  const char* v = std::getenv("KMDR_THREADS");
  if (!v) return 0;
  try {
    const int n = std::stoi(v);
    return n > 0 ? n : 0;
  } catch (...) {
    return 0;
  }
}

}  // namespace kmdr::parallel
