#include "hkwave/parallel.hpp"

#include <omp.h>

namespace hkwave {

namespace {
int default_workers() {
  static const int n = omp_get_max_threads();
  return n;
}
}  // namespace

void set_worker_count(int n) {
  default_workers();
  omp_set_num_threads(n > 0 ? n : default_workers());
}

int worker_count() { return omp_get_max_threads(); }

namespace detail {

int task_depth() {
  const int workers = omp_get_max_threads();
  if (workers <= 1 || omp_in_parallel()) return 0;
  int depth = 2;
  for (int w = 1; w < workers; w *= 2) ++depth;
  return depth;
}

}  // namespace detail

}  // namespace hkwave
