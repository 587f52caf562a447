#include "invlp/rng.hpp"

#include <cmath>
#include <numbers>

namespace invlp {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng Rng::stream(std::uint64_t seed, std::uint64_t id) { return Rng(splitmix64(seed ^ splitmix64(id))); }

double Rng::uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

double Rng::uniform_open_left() { return static_cast<double>((eng_() >> 11) + 1) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double r = std::sqrt(-2.0 * std::log(uniform_open_left()));
  double t = 2.0 * std::numbers::pi * uniform();
  spare_ = r * std::sin(t);
  has_spare_ = true;
  return r * std::cos(t);
}

int Rng::index(int n) {
  const std::uint64_t un = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % un);
  std::uint64_t v;
  do v = eng_();
  while (v >= limit);
  return static_cast<int>(v % un);
}

}  // namespace invlp
