#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace netform {

// Counter-based splittable stream.  Output k of a stream is a bijective mix
// of (key + k * golden), so any draw can be regenerated from (key, k) alone,
// and child streams are keyed by hashing the parent key with a tag.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  RandomStream() = default;
  explicit RandomStream(std::uint64_t seed) : key_(mix(seed ^ 0x6a09e667f3bcc909ULL)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix(key_ + kGolden * ++counter_); }

  RandomStream child(std::uint64_t tag) const;
  RandomStream child(std::string_view tag) const;
  // child(a).child(b) in one call
  RandomStream child(std::uint64_t a, std::uint64_t b) const { return child(a).child(b); }

  std::uint64_t key() const { return key_; }
  std::uint64_t position() const { return counter_; }

  static std::uint64_t mix(std::uint64_t z);

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
  std::uint64_t key_ = 0x853c49e6748fea9bULL;
  std::uint64_t counter_ = 0;
};

// Purpose tags separating the independent random inputs of one replication.
namespace stream_tag {
inline constexpr std::uint64_t population = 1;
inline constexpr std::uint64_t equilibrium_crn = 2;
inline constexpr std::uint64_t data_shocks = 3;
inline constexpr std::uint64_t moment_crn = 4;
inline constexpr std::uint64_t instrument_crn = 5;
inline constexpr std::uint64_t variance_crn = 6;
}  // namespace stream_tag

}  // namespace netform
