#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace splitree {

// Philox4x32-10 counter-based generator. A stream is addressed by
// (master_seed, stream_index): the seed is the key, the stream index fills
// the upper half of the counter and the lower half counts blocks.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t master_seed, std::uint64_t stream_index);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  // Uniform on the open interval (0, 1).
  double uniform();
  // Exponential with the given rate; +inf when rate == 0.
  double exponential(double rate);
  std::uint64_t poisson(double mean);
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int used_ = 2;
};

// Derives an independent master seed for a named sub-experiment.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

}  // namespace splitree
