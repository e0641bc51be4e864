#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace chartcycle {

std::string sha256_hex(std::string_view data);

/// Seeded generator whose derived draws are identical across standard
/// libraries (std distributions are implementation-defined, so only raw
/// mt19937_64 output is used).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform index in [0, n); n must be positive.
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[index(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

/// Runs fn(i) for i in [0, n) on at most `width` threads. Exceptions from
/// fn propagate (the first one wins) after all workers stop.
void parallel_for(std::size_t n, std::size_t width, const std::function<void(std::size_t)>& fn);

std::string base64_encode(std::string_view bytes);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace chartcycle
