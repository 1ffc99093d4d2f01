#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <string>

namespace pamlab {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

/// Philox4x32 with 10 rounds (Salmon et al., SC'11). Pure function of
/// (counter, key); this is what makes every stream addressable in isolation.
PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key);

/// Which part of the code consumes a stream. Part of the counter, so two
/// purposes never share random numbers even with equal replica/step ids.
enum class Purpose : std::uint32_t {
  Noise = 1,
  Bridges = 2,
  Variational = 3,
  Synthetic = 4,
  Assignment = 5,
  Girsanov = 6,
  ExitTime = 7,
};

/// Address of one random stream: a 64-bit master seed plus the
/// (purpose, replica, step) counter fields. Block index is the remaining
/// counter word and advances as numbers are drawn.
struct StreamId {
  std::uint64_t seed = 0;
  Purpose purpose = Purpose::Noise;
  std::uint32_t replica = 0;
  std::uint32_t step = 0;

  std::string label() const;
};

/// Counter-based generator over a single StreamId. Cheap to construct, so
/// callers build one per (replica, step) instead of sharing state.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit Stream(StreamId id);

  const StreamId& id() const noexcept { return id_; }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return next_u64(); }

  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform();
  /// Standard normal via Box-Muller; pairs are cached.
  double normal();
  void fill_normal(std::span<double> out);

 private:
  void refill();

  StreamId id_;
  PhiloxKey key_;
  std::uint32_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int buffered_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// SplitMix64 finalizer, used to derive sub-seeds.
std::uint64_t mix64(std::uint64_t x);

}  // namespace pamlab
