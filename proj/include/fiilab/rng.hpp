#pragma once

// Counter-based random numbers.
//
// Every random draw in the library is a pure function of
//   key     = (master seed, replica index)
//   counter = (block index, 0, 0, stream tag)
// evaluated with Philox4x64-10 (Salmon et al., SC'11). One block yields four
// 64-bit words. Uniform doubles take the top 53 bits: u = (w >> 11) * 2^-53.
// This contract is frozen: changing it changes every sampled matrix.

#include <array>
#include <cstdint>

namespace fiilab {

using u64 = std::uint64_t;

// Distinct consumers of randomness get distinct counter tags so their
// streams never overlap for the same (master, replica) key.
enum class StreamTag : u64 {
  matrix_entries = 0,
  index_choice = 1,
  bootstrap = 2,
  probe_pairs = 3,
  test_data = 4,
};

struct SeedPair {
  u64 master = 0;
  u64 replica = 0;

  friend bool operator==(const SeedPair&, const SeedPair&) = default;
};

namespace detail {

inline void mul_hilo(u64 a, u64 b, u64& hi, u64& lo) {
  const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
  hi = static_cast<u64>(p >> 64);
  lo = static_cast<u64>(p);
}

}  // namespace detail

using PhiloxBlock = std::array<u64, 4>;

inline PhiloxBlock philox4x64_10(PhiloxBlock ctr, std::array<u64, 2> key) {
  constexpr u64 kM0 = 0xD2E7470EE14C6C93ULL;
  constexpr u64 kM1 = 0xCA5A826395121157ULL;
  constexpr u64 kW0 = 0x9E3779B97F4A7C15ULL;
  constexpr u64 kW1 = 0xBB67AE8584CAA73BULL;
  for (int round = 0; round < 10; ++round) {
    u64 hi0, lo0, hi1, lo1;
    detail::mul_hilo(kM0, ctr[0], hi0, lo0);
    detail::mul_hilo(kM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

inline double to_unit_interval(u64 w) {
  return static_cast<double>(w >> 11) * 0x1.0p-53;
}

// Random access into one tagged stream: word(n) is the n-th 64-bit word.
// Caches the most recent block so sequential access costs one Philox call
// per four words.
class CounterStream {
 public:
  CounterStream(SeedPair seed, StreamTag tag)
      : key_{seed.master, seed.replica}, tag_(static_cast<u64>(tag)) {}

  u64 word(u64 n) {
    const u64 block = n >> 2;
    if (!valid_ || block != cached_block_) {
      cache_ = philox4x64_10({block, 0, 0, tag_}, key_);
      cached_block_ = block;
      valid_ = true;
    }
    return cache_[n & 3];
  }

  double uniform(u64 n) { return to_unit_interval(word(n)); }

  // Uniform integer in [0, bound) via the multiply-high map.
  u64 below(u64 n, u64 bound) {
    u64 hi, lo;
    detail::mul_hilo(word(n), bound, hi, lo);
    return hi;
  }

 private:
  std::array<u64, 2> key_;
  u64 tag_;
  PhiloxBlock cache_{};
  u64 cached_block_ = 0;
  bool valid_ = false;
};

// Sequential view over a CounterStream for consumers that only need
// "the next number".
class SequentialStream {
 public:
  SequentialStream(SeedPair seed, StreamTag tag) : stream_(seed, tag) {}

  double uniform() { return stream_.uniform(pos_++); }
  u64 below(u64 bound) { return stream_.below(pos_++, bound); }
  u64 position() const { return pos_; }

 private:
  CounterStream stream_;
  u64 pos_ = 0;
};

}  // namespace fiilab
