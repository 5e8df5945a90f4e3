#include "plast/rng.hpp"

namespace plast {

namespace {

std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t root, std::string_view label,
                          std::uint64_t index) {
  // FNV-1a over the label, folded with root and index through splitmix
  // finalizers.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return mix(mix(root + 0x9e3779b97f4a7c15ULL) ^ mix(h) ^
             mix(index + 0x632be59bd9b4e019ULL));
}

}  // namespace plast
