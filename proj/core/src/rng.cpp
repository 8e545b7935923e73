#include "besq/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "besq/error.hpp"

namespace besq {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

// splitmix64 finalizer; spreads nearby seeds over the key space.
std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

PhiloxCounter philox4x32_10(PhiloxCounter c, PhiloxKey k) noexcept {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, c[0], hi0, lo0);
    mulhilo(kPhiloxM1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kPhiloxW0;
    k[1] += kPhiloxW1;
  }
  return c;
}

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_index) noexcept
    : master_seed_(master_seed), stream_index_(stream_index) {
  const std::uint64_t k = mix64(master_seed);
  key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
}

void RngStream::seek(std::uint64_t word_position) noexcept { word_position_ = word_position; }

void RngStream::refill() noexcept {
  const std::uint64_t block = word_position_ >> 1;
  const PhiloxCounter out = philox4x32_10(
      {static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32),
       static_cast<std::uint32_t>(stream_index_), static_cast<std::uint32_t>(stream_index_ >> 32)},
      key_);
  block_ = {static_cast<std::uint64_t>(out[0]) | (static_cast<std::uint64_t>(out[1]) << 32),
            static_cast<std::uint64_t>(out[2]) | (static_cast<std::uint64_t>(out[3]) << 32)};
  block_index_ = block;
}

RngStream::result_type RngStream::operator()() noexcept {
  if ((word_position_ >> 1) != block_index_) refill();
  const std::uint64_t word = block_[word_position_ & 1u];
  ++word_position_;
  return word;
}

double RngStream::uniform() noexcept {
  return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() noexcept {
  // Align to a word pair so every normal owns one Philox block.
  word_position_ = (word_position_ + 1) & ~std::uint64_t{1};
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void RngStream::fill(std::span<double> out) {
  for (double& x : out) x = normal();
}

void ZeroNormals::fill(std::span<double> out) {
  for (double& x : out) x = 0.0;
}

ScriptedNormals::ScriptedNormals(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw InvalidInput("ScriptedNormals: empty script");
}

void ScriptedNormals::fill(std::span<double> out) {
  for (double& x : out) {
    x = values_[next_];
    next_ = (next_ + 1) % values_.size();
  }
}

}  // namespace besq
