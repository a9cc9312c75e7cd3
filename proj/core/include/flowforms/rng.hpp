#pragma once

#include <array>
#include <cstdint>

#include "flowforms/types.hpp"

namespace flowforms::rng {

/**
 * Philox-4x32-10 block cipher. Input: 128-bit counter + 64-bit key, output:
 * four 32-bit words. Stateless, so random access into a stream is O(1).
 */
std::array<std::uint32_t, 4> philox4x32(const std::array<std::uint32_t, 4>& ctr,
                                        const std::array<std::uint32_t, 2>& key);

/**
 * Counter-based Gaussian stream for one Monte Carlo sample.
 *
 * A stream is keyed by (master_seed, sample_index); individual draws are
 * addressed by (step, component). Draws are therefore independent of thread
 * scheduling and of the order in which they are requested, which makes
 * ensembles bit-reproducible for any worker count. One Philox block yields a
 * Box-Muller pair, so components 2m and 2m+1 of a given step share a block.
 */
class NoiseStream {
 public:
  NoiseStream() = default;
  NoiseStream(std::uint64_t master_seed, std::uint64_t sample_index)
      : seed_(master_seed), sample_(sample_index) {}

  /** Standard normal draw addressed by (step, component). */
  double normal(std::uint64_t step, std::uint32_t component) const;

  /** Fills out(0..k-1) with the normals of components 0..k-1 at `step`. */
  void normals(std::uint64_t step, Eigen::Ref<Vec> out) const;

  /** Uniform draw in (0,1) addressed by (step, component). */
  double uniform(std::uint64_t step, std::uint32_t component) const;

  std::uint64_t master_seed() const { return seed_; }
  std::uint64_t sample_index() const { return sample_; }

 private:
  std::array<std::uint32_t, 4> block(std::uint64_t step,
                                     std::uint32_t pair) const;

  std::uint64_t seed_ = 0;
  std::uint64_t sample_ = 0;
};

}  // namespace flowforms::rng
