#pragma once

#include <array>
#include <cstdint>

namespace splitleap {

/// Counter-based random stream (Philox4x32-10). The pair (seed, stream_id)
/// selects an independent substream; the sequence depends on nothing else, so
/// results are reproducible regardless of how paths are scheduled.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint64_t next_u64() {
    if (available_ == 0) refill();
    return buffer_[static_cast<std::size_t>(--available_)];
  }
  /// Uniform on the open interval (0, 1).
  double uniform() {
    // 53 random bits centred in their cell: never 0, never 1.
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }
  /// -ln(u) / rate. Throws InvalidArgument for rate <= 0.
  double exponential(double rate);
  /// Exact Poisson variate: inversion for small means, transformed rejection
  /// (PTRS) otherwise. Throws InvalidArgument on negative or non-finite mean.
  std::int64_t poisson(double mean);

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int available_ = 0;
};

/// Mean threshold between inversion and rejection sampling.
inline constexpr double kPoissonInversionLimit = 10.0;

/// One Philox4x32-10 block, exposed for known-answer tests.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// log(k!) accurate to double precision.
double log_factorial(std::int64_t k);

}  // namespace splitleap
