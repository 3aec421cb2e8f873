#pragma once

#include <cstddef>
#include <stdexcept>
#include <utility>

namespace hkwave {

/// Sets the number of OpenMP workers used by the library (n <= 0 restores the default).
void set_worker_count(int n);
int worker_count();

namespace detail {

int task_depth();

template <class T, class Leaf, class Combine>
T tree_reduce_range(std::size_t lo, std::size_t hi, Leaf& leaf, Combine& combine, int depth) {
  if (hi - lo == 1) return leaf(lo);
  const std::size_t mid = lo + (hi - lo) / 2;
  if (depth <= 0) {
    T left = tree_reduce_range<T>(lo, mid, leaf, combine, 0);
    T right = tree_reduce_range<T>(mid, hi, leaf, combine, 0);
    combine(left, right);
    return left;
  }
  T left{};
#pragma omp task default(shared) firstprivate(lo, mid, depth)
  left = tree_reduce_range<T>(lo, mid, leaf, combine, depth - 1);
  T right = tree_reduce_range<T>(mid, hi, leaf, combine, depth - 1);
#pragma omp taskwait
  combine(left, right);
  return left;
}

}  // namespace detail

/// Reduces leaf(0), ..., leaf(n-1) over a fixed midpoint-split binary tree: the result
/// of combine(left, right) (which folds right into left) never depends on the worker
/// count or on scheduling. Leaves may run concurrently.
template <class T, class Leaf, class Combine>
T tree_reduce(std::size_t n_leaves, Leaf leaf, Combine combine) {
  if (n_leaves == 0) throw std::invalid_argument("tree_reduce: no leaves");
  const int depth = detail::task_depth();
  if (depth == 0 || n_leaves == 1) return detail::tree_reduce_range<T>(0, n_leaves, leaf, combine, 0);
  T result{};
#pragma omp parallel
#pragma omp single
  result = detail::tree_reduce_range<T>(0, n_leaves, leaf, combine, depth);
  return result;
}

}  // namespace hkwave
