#include "flowforms/rng.hpp"

#include <cmath>

namespace flowforms::rng {

namespace {

constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;  // golden ratio
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;  // sqrt(3) - 1
constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;

inline void mul_hilo(std::uint32_t a, std::uint32_t b, std::uint32_t* hi,
                     std::uint32_t* lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  *hi = static_cast<std::uint32_t>(p >> 32);
  *lo = static_cast<std::uint32_t>(p);
}

inline void round_once(std::array<std::uint32_t, 4>& c,
                       const std::array<std::uint32_t, 2>& k) {
  std::uint32_t hi0, lo0, hi1, lo1;
  mul_hilo(kPhiloxM0, c[0], &hi0, &lo0);
  mul_hilo(kPhiloxM1, c[2], &hi1, &lo1);
  c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

/** Maps 64 random bits to a uniform double in the open interval (0,1). */
inline double to_unit_open(std::uint32_t a, std::uint32_t b) {
  const std::uint64_t x = (static_cast<std::uint64_t>(a) << 32) | b;
  return static_cast<double>(x >> 11) * 0x1p-53 + 0x1p-54;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(const std::array<std::uint32_t, 4>& ctr,
                                        const std::array<std::uint32_t, 2>& key) {
  std::array<std::uint32_t, 4> c = ctr;
  std::array<std::uint32_t, 2> k = key;
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      k[0] += kPhiloxW0;
      k[1] += kPhiloxW1;
    }
    round_once(c, k);
  }
  return c;
}

std::array<std::uint32_t, 4> NoiseStream::block(std::uint64_t step,
                                                std::uint32_t pair) const {
  const std::array<std::uint32_t, 4> ctr = {
      static_cast<std::uint32_t>(sample_),
      static_cast<std::uint32_t>(sample_ >> 32),
      static_cast<std::uint32_t>(step),
      (static_cast<std::uint32_t>(step >> 32) << 16) ^ pair};
  const std::array<std::uint32_t, 2> key = {
      static_cast<std::uint32_t>(seed_),
      static_cast<std::uint32_t>(seed_ >> 32)};
  return philox4x32(ctr, key);
}

double NoiseStream::normal(std::uint64_t step, std::uint32_t component) const {
  const auto r = block(step, component / 2);
  const double u1 = to_unit_open(r[0], r[1]);
  const double u2 = to_unit_open(r[2], r[3]);
  const double rad = std::sqrt(-2.0 * std::log(u1));
  const double ang = 2.0 * M_PI * u2;
  return (component % 2 == 0) ? rad * std::cos(ang) : rad * std::sin(ang);
}

void NoiseStream::normals(std::uint64_t step, Eigen::Ref<Vec> out) const {
  const int k = static_cast<int>(out.size());
  for (int p = 0; 2 * p < k; ++p) {
    const auto r = block(step, static_cast<std::uint32_t>(p));
    const double u1 = to_unit_open(r[0], r[1]);
    const double u2 = to_unit_open(r[2], r[3]);
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * M_PI * u2;
    out(2 * p) = rad * std::cos(ang);
    if (2 * p + 1 < k) out(2 * p + 1) = rad * std::sin(ang);
  }
}

double NoiseStream::uniform(std::uint64_t step, std::uint32_t component) const {
  const auto r = block(step, component / 2);
  return (component % 2 == 0) ? to_unit_open(r[0], r[1])
                              : to_unit_open(r[2], r[3]);
}

}  // namespace flowforms::rng
