#include "fliprand/bitstream.hpp"

#include <charconv>
#include <cstdio>
#include <random>
#include <vector>

namespace fliprand {
namespace {

constexpr std::string_view kStateTag = "xoshiro256ss-v1";

std::string to_hex(std::string_view bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (const unsigned char c : bytes) {
    out.push_back(kDigits[c >> 4]);
    out.push_back(kDigits[c & 0xF]);
  }
  return out;
}

std::string from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw std::invalid_argument("odd-length hex field");
  std::string out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    unsigned value = 0;
    const auto [ptr, ec] = std::from_chars(hex.data() + i, hex.data() + i + 2, value, 16);
    if (ec != std::errc{} || ptr != hex.data() + i + 2) {
      throw std::invalid_argument("malformed hex field");
    }
    out.push_back(static_cast<char>(value));
  }
  return out;
}

std::uint64_t parse_word(std::string_view field) {
  if (field.size() != 16) throw std::invalid_argument("state word must be 16 hex digits");
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value, 16);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw std::invalid_argument("malformed state word");
  }
  return value;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

}  // namespace

BitSource BitSource::from_seed(std::string_view seed) {
  if (seed.empty()) throw std::invalid_argument("BitSource::from_seed: empty seed");

  // Bytes are packed little-endian into 32-bit words; the length is mixed in
  // so that seeds differing only by trailing NULs stay distinct.
  std::vector<std::uint32_t> words((seed.size() + 3) / 4 + 1, 0);
  for (std::size_t i = 0; i < seed.size(); ++i) {
    words[i / 4] |= std::uint32_t{static_cast<unsigned char>(seed[i])} << (8 * (i % 4));
  }
  words.back() = static_cast<std::uint32_t>(seed.size());
  std::seed_seq seq(words.begin(), words.end());
  std::array<std::uint32_t, 8> expanded{};
  seq.generate(expanded.begin(), expanded.end());

  BitSource src;
  for (std::size_t i = 0; i < 4; ++i) {
    src.state_[i] = (std::uint64_t{expanded[2 * i]} << 32) | expanded[2 * i + 1];
  }
  if (src.state_ == std::array<std::uint64_t, 4>{}) src.state_[0] = 0x9E3779B97F4A7C15ULL;
  src.seed_ = std::string(seed);
  return src;
}

BitSource BitSource::from_entropy(const std::string& token) {
  std::array<std::uint32_t, 8> raw{};
  try {
    std::random_device device(token);
    for (auto& w : raw) w = device();
  } catch (const std::exception& e) {
    throw EntropyUnavailable(std::string("entropy source unavailable: ") + e.what());
  }
  std::string seed;
  char buf[9];
  for (const auto w : raw) {
    std::snprintf(buf, sizeof buf, "%08x", w);
    seed += buf;
  }
  return from_seed(seed);
}

std::string BitSource::serialize() const {
  // tag:s0.s1.s2.s3:buffer:buffered:hex(seed)
  std::string out(kStateTag);
  char buf[17];
  for (std::size_t i = 0; i < 4; ++i) {
    out.push_back(i == 0 ? ':' : '.');
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(state_[i]));
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(buffer_));
  out += ':';
  out += buf;
  out += ':';
  out += std::to_string(buffered_);
  out += ':';
  out += to_hex(seed_);
  return out;
}

BitSource BitSource::from_state(std::string_view serialized) {
  const auto fields = split(serialized, ':');
  if (fields.size() != 5 || fields[0] != kStateTag) {
    throw std::invalid_argument("BitSource::from_state: unrecognized state string");
  }
  const auto words = split(fields[1], '.');
  if (words.size() != 4) throw std::invalid_argument("BitSource::from_state: need 4 state words");

  BitSource src;
  for (std::size_t i = 0; i < 4; ++i) src.state_[i] = parse_word(words[i]);
  if (src.state_ == std::array<std::uint64_t, 4>{}) {
    throw std::invalid_argument("BitSource::from_state: all-zero generator state");
  }
  src.buffer_ = parse_word(fields[2]);

  int buffered = -1;
  const auto count = fields[3];
  const auto [ptr, ec] = std::from_chars(count.data(), count.data() + count.size(), buffered);
  if (ec != std::errc{} || ptr != count.data() + count.size() || buffered < 0 ||
      buffered >= kWordBits) {
    throw std::invalid_argument("BitSource::from_state: bad buffered-bit count");
  }
  if (buffered < kWordBits && (src.buffer_ >> buffered) != 0) {
    throw std::invalid_argument("BitSource::from_state: buffer has bits beyond its count");
  }
  src.buffered_ = buffered;
  src.seed_ = from_hex(fields[4]);
  return src;
}

}  // namespace fliprand
