#pragma once

#include <cstdint>
#include <random>

namespace invlp {

// mt19937_64 with hand-written distributions so draws are identical across standard libraries.
// Independent streams: Rng::stream(seed, id) seeds the engine with splitmix64(seed ^ splitmix64(id)).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  static Rng stream(std::uint64_t seed, std::uint64_t id);

  std::uint64_t next() { return eng_(); }
  double uniform();  // [0, 1), 53 bits
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  double uniform_open_left();  // (0, 1]
  double normal();             // Box-Muller
  int index(int n);            // uniform in [0, n)

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

// Stream ids used by the generators.
namespace streams {
constexpr std::uint64_t hidden = 1;
constexpr std::uint64_t experiment = 1'000;        // + experiment index
constexpr std::uint64_t noise = 1'000'000;         // + experiment index
constexpr std::uint64_t test = 2'000'000;          // + test point index
constexpr std::uint64_t adaptive = 3'000'000;      // + step
constexpr std::uint64_t reference = 4'000'000;
}  // namespace streams

}  // namespace invlp
