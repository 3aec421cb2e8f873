#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace hkwave {

/// Philox4x32-10 counter-based generator. Output depends only on (key, counter),
/// so any sample index can be regenerated without touching its neighbours.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  explicit Philox4x32(std::uint64_t seed)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  Counter operator()(Counter counter) const;

 private:
  Key key_;
};

/// Uniform double in the open interval (0, 1) built from 53 random bits.
double to_open_unit(std::uint32_t hi, std::uint32_t lo);

/// Fills `out` with independent standard normal deviates belonging to sample
/// `index` of `stream`. The values are a pure function of (seed, stream, index).
void normal_deviates(std::uint64_t seed, std::uint32_t stream, std::uint64_t index,
                     std::span<double> out);

}  // namespace hkwave
