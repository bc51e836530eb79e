#include "netform/rng.hpp"

namespace netform {

std::uint64_t RandomStream::mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

RandomStream RandomStream::child(std::uint64_t tag) const {
  RandomStream out;
  out.key_ = mix(key_ ^ mix(tag + 0x3c6ef372fe94f82bULL));
  out.counter_ = 0;
  return out;
}

RandomStream RandomStream::child(std::string_view tag) const {
  // FNV-1a over the tag bytes
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return child(h);
}

}  // namespace netform
