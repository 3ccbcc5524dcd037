#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fliprand {

/// Raised when the operating system cannot supply seed entropy.
class EntropyUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Deterministic, seedable stream of uniform random bits.
///
/// Raw 64-bit words come from xoshiro256**. Sub-word draws (next_bits) are
/// served from a bit buffer, most-significant bit first, so a run of
/// next_bits calls consumes exactly the bits of consecutive next_word calls
/// in stream order. next_word bypasses the buffer.
///
/// A BitSource has a single owner; parallel work uses independent sources.
class BitSource {
 public:
  static constexpr int kWordBits = 64;

  /// Seeds from std::random_device. `token` selects the device (see
  /// std::random_device); the effective seed is available via seed().
  static BitSource from_entropy(const std::string& token = "default");

  /// Deterministic state expansion from a non-empty byte string.
  static BitSource from_seed(std::string_view seed);

  /// Restores a source from serialize() output.
  static BitSource from_state(std::string_view serialized);

  std::uint64_t next_word() noexcept {
    const std::uint64_t result = std::rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = std::rotl(state_[3], 45);
    return result;
  }

  /// k fresh bits as an integer in [0, 2^k), 1 <= k <= 64.
  std::uint64_t next_bits(int k) {
    if (k < 1 || k > kWordBits) {
      throw std::out_of_range("BitSource::next_bits: k must lie in [1, 64]");
    }
    return take_bits(k);
  }

  bool next_bit() noexcept { return take_bits(1) != 0; }

  /// Printable, versioned snapshot of the generator and bit buffer.
  std::string serialize() const;

  const std::string& seed() const noexcept { return seed_; }
  int buffered_bits() const noexcept { return buffered_; }

  friend bool operator==(const BitSource&, const BitSource&) = default;

 private:
  BitSource() = default;

  std::uint64_t take_bits(int k) noexcept {
    if (k <= buffered_) {
      buffered_ -= k;
      const std::uint64_t out = buffer_ >> buffered_;
      buffer_ = buffered_ == 0 ? 0 : buffer_ & ((std::uint64_t{1} << buffered_) - 1);
      return k == kWordBits ? out : out & ((std::uint64_t{1} << k) - 1);
    }
    // Old remainder supplies the high bits, the fresh word the low ones.
    const int need = k - buffered_;
    const std::uint64_t high = buffer_;
    const std::uint64_t word = next_word();
    const std::uint64_t out =
        (need == kWordBits ? 0 : high << need) | (word >> (kWordBits - need));
    buffered_ = kWordBits - need;
    buffer_ = buffered_ == 0 ? 0 : word & ((std::uint64_t{1} << buffered_) - 1);
    return out;
  }

  std::array<std::uint64_t, 4> state_{};
  std::uint64_t buffer_ = 0;  // low `buffered_` bits are unconsumed
  int buffered_ = 0;
  std::string seed_;
};

}  // namespace fliprand
