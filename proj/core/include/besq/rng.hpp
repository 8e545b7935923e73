#pragma once

// Counter-based random streams. A stream is identified by
// (master_seed, stream_index); its n-th output is a pure function of that key
// and n, so paths can be integrated in any order or on any thread.

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace besq {

// Philox4x32 with 10 rounds (Salmon et al., Random123).
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key) noexcept;

// Source of standard normal variates consumed by the integrators. Production
// code uses RngStream; tests inject fixed sequences.
class NormalSource {
 public:
  virtual ~NormalSource() = default;
  virtual void fill(std::span<double> out) = 0;
};

class RngStream final : public NormalSource {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t master_seed, std::uint64_t stream_index) noexcept;

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  std::uint64_t stream_index() const noexcept { return stream_index_; }
  // Number of 64-bit words consumed so far.
  std::uint64_t position() const noexcept { return word_position_; }
  // Jump to the given word position.
  void seek(std::uint64_t word_position) noexcept;

  // UniformRandomBitGenerator interface, for <random> distributions.
  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }
  result_type operator()() noexcept;

  // Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform() noexcept;
  // Standard normal; Box-Muller on two consecutive words, one variate per
  // pair of words so that the k-th normal depends only on words 2k, 2k+1.
  double normal() noexcept;

  void fill(std::span<double> out) override;

 private:
  void refill() noexcept;

  std::uint64_t master_seed_;
  std::uint64_t stream_index_;
  PhiloxKey key_;
  std::uint64_t word_position_ = 0;
  std::array<std::uint64_t, 2> block_{};
  std::uint64_t block_index_ = ~std::uint64_t{0};
};

// All zeros: drift-only stepping.
class ZeroNormals final : public NormalSource {
 public:
  void fill(std::span<double> out) override;
};

// Replays a fixed list, cycling when exhausted.
class ScriptedNormals final : public NormalSource {
 public:
  explicit ScriptedNormals(std::vector<double> values);
  void fill(std::span<double> out) override;

 private:
  std::vector<double> values_;
  std::size_t next_ = 0;
};

}  // namespace besq
