#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "flowforms/types.hpp"

namespace flowforms::util {

/** i-th element (1-based) of the van der Corput sequence in the given base. */
double halton(std::uint64_t i, unsigned base);

/** Low-discrepancy point in [0,1)^dim (Halton, bases 2,3,5,7,11,13,...). */
Vec halton_point(std::uint64_t i, int dim);

/**
 * `count` low-discrepancy probe points inside the box [lo, hi], skipping the
 * first `skip` sequence elements. Deterministic for fixed arguments.
 */
std::vector<Vec> probe_box(const Vec& lo, const Vec& hi, int count,
                           std::uint64_t skip = 0);

/** Gauss-Legendre nodes and weights on [-1, 1]. */
std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n);

/**
 * Worker count for parallel loops: the FLOWFORMS_WORKERS environment variable
 * when set (>=1), otherwise std::thread::hardware_concurrency().
 */
unsigned worker_count();

/**
 * Runs body(begin, end) over a contiguous partition of [0, n) on `workers`
 * threads (0 = worker_count()). Each index must write only to its own slot so
 * results do not depend on the partition.
 */
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& body,
                  unsigned workers = 0);

/** FNV-1a 64-bit content hash, rendered as 16 hex digits. */
std::string fnv1a_hex(const std::string& bytes);

/** Shortest round-trip decimal rendering of a double (C locale). */
std::string format_double(double v);

}  // namespace flowforms::util
