#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace opencon {

enum class Stream : std::uint32_t { Data = 1, Augment = 2, Init = 3, Theory = 4 };

std::string_view to_string(Stream s);

// Seeded generator with named sub-streams. The engine (mt19937_64) and the
// std::seed_seq mixing are fully specified by the standard; the uniform and
// normal transforms are implemented here because the std distributions are
// implementation-defined. Together that makes draws identical across
// toolchains.
class Rng {
 public:
  Rng(std::uint64_t seed, Stream stream);

  std::uint64_t next_u64() { return engine_(); }
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  // Uniform integer in [0, n); n must be > 0.
  std::uint64_t below(std::uint64_t n);
  double normal();
  bool bernoulli(double p) { return uniform() < p; }

  template <class It>
  void shuffle(It first, It last) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      const auto j = below(i);
      using std::swap;
      swap(first[i - 1], first[j]);
    }
  }

  std::uint64_t seed() const noexcept { return seed_; }
  Stream stream() const noexcept { return stream_; }

  // Text snapshot of the full generator state (engine + cached normal).
  std::string save_state() const;
  void load_state(const std::string& state);

  friend bool operator==(const Rng& a, const Rng& b) {
    return a.engine_ == b.engine_ && a.has_spare_ == b.has_spare_ && a.spare_ == b.spare_;
  }

 private:
  std::uint64_t seed_;
  Stream stream_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace opencon
