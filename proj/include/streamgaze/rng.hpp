#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace streamgaze {

inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t hash = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Per-item seed from (global seed, video, task, index).
inline std::uint64_t derive_seed(std::uint64_t global, std::string_view video_id, std::string_view task,
                                 std::int64_t index) {
  std::uint64_t h = fnv1a(video_id);
  h = fnv1a("\x1f", h);
  h = fnv1a(task, h);
  return splitmix64(h ^ splitmix64(global) ^ splitmix64(static_cast<std::uint64_t>(index) + 0x51ed27ULL));
}

/// Platform-stable random source. std::mt19937_64 is fully specified by the
/// standard; the distributions are not, so bounded draws are done here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, n). n must be > 0.
  std::size_t uniform(std::size_t n) {
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return static_cast<std::size_t>(v % bound);
  }

  /// Uniform double in [0, 1).
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform_real(double lo, double hi) { return lo + (hi - lo) * unit(); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = uniform(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  /// k distinct elements, in draw order. Returns fewer if the pool is short.
  template <typename T>
  std::vector<T> sample(std::vector<T> pool, std::size_t k) {
    std::vector<T> out;
    for (std::size_t i = 0; i < k && !pool.empty(); ++i) {
      std::size_t j = uniform(pool.size());
      out.push_back(pool[j]);
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(j));
    }
    return out;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace streamgaze
