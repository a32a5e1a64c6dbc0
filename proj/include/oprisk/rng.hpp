#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace oprisk {

// Philox4x32-10 (Salmon et al., "Parallel random numbers: as easy as 1, 2, 3").
// A stateless bijection of a 128-bit counter under a 64-bit key.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter counter, Key key) noexcept;
};

// A reproducible random stream addressed by (seed, stream_id).
//
// Draw k of the stream is a pure function of (seed, stream_id, k), so two
// streams with the same address produce the same sequence no matter which
// thread consumes them or in what order. Satisfies
// UniformRandomBitGenerator, so it plugs into <random> distributions.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  // Child stream whose id mixes this stream's id with `label`.
  RngStream substream(std::uint64_t label) const noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept;

  // Uniform on the open interval (0, 1).
  double uniform() noexcept;

 private:
  void refill() noexcept;

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t block_index_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
};

std::uint64_t mix64(std::uint64_t x) noexcept;

}  // namespace oprisk
