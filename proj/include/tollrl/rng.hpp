#pragma once

#include <cstdint>
#include <random>

namespace tollrl {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent streams per (master seed, episode index, purpose).
enum class Stream : std::uint64_t { demand = 1, observation = 2, policy = 3, tolls = 4, init = 5 };

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index, Stream stream = Stream::demand) {
  return splitmix64(splitmix64(splitmix64(master) ^ index) + static_cast<std::uint64_t>(stream));
}

inline std::mt19937_64 make_rng(std::uint64_t master, std::uint64_t index, Stream stream) {
  return std::mt19937_64(derive_seed(master, index, stream));
}

}  // namespace tollrl
