#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <stdexcept>
#include <vector>

#include "fhelab/opcount.hpp"

namespace fhelab {

using u64 = std::uint64_t;
using u128 = unsigned __int128;
using i64 = std::int64_t;

struct Modulus {
    u64 q = 0;
    int bits = 0;
    // floor(2^128 / q), split in two words
    u64 ratio_hi = 0, ratio_lo = 0;
    // primitive 2N-th root of unity, 0 when not NTT-enabled
    u64 root = 0;
    u64 ring_degree = 0;

    Modulus() = default;
    explicit Modulus(u64 q);
};

struct ShoupConst {
    u64 operand = 0;
    u64 precomp = 0;  // floor(operand * 2^64 / q)
};

#ifndef NDEBUG
#define FHELAB_RANGE(x, m) \
    do { if ((x) >= (m).q) throw std::logic_error("residue out of range"); } while (0)
#else
#define FHELAB_RANGE(x, m) ((void)0)
#endif

inline u64 barrett_reduce_128(u128 z, const Modulus& m) {
    u64 lo = static_cast<u64>(z), hi = static_cast<u64>(z >> 64);
    u128 t = static_cast<u128>(lo) * m.ratio_lo;
    u64 carry = static_cast<u64>(t >> 64);
    t = static_cast<u128>(lo) * m.ratio_hi;
    u64 a = static_cast<u64>(t) + carry;
    u64 c1 = static_cast<u64>(t >> 64) + (a < carry);
    t = static_cast<u128>(hi) * m.ratio_lo;
    u64 b = static_cast<u64>(t) + a;
    u64 c2 = static_cast<u64>(t >> 64) + (b < a);
    u64 qhat = hi * m.ratio_hi + c1 + c2;
    u64 r = lo - qhat * m.q;
    return r >= m.q ? r - m.q : r;
}

inline u64 barrett_reduce_64(u64 x, const Modulus& m) {
    return barrett_reduce_128(static_cast<u128>(x), m);
}

inline u64 mod_add(u64 x, u64 y, const Modulus& m) {
    FHELAB_RANGE(x, m);
    FHELAB_RANGE(y, m);
    u64 s = x + y;
    return s >= m.q ? s - m.q : s;
}

inline u64 mod_sub(u64 x, u64 y, const Modulus& m) {
    FHELAB_RANGE(x, m);
    FHELAB_RANGE(y, m);
    return x >= y ? x - y : x + m.q - y;
}

inline u64 mod_neg(u64 x, const Modulus& m) { return x ? m.q - x : 0; }

inline u64 mod_mul_barrett(u64 x, u64 y, const Modulus& m) {
    FHELAB_RANGE(x, m);
    FHELAB_RANGE(y, m);
    return barrett_reduce_128(static_cast<u128>(x) * y, m);
}

ShoupConst make_shoup(u64 operand, const Modulus& m);

inline u64 mod_mul_shoup(u64 y, const ShoupConst& c, const Modulus& m) {
    FHELAB_RANGE(y, m);
    u64 qhat = static_cast<u64>((static_cast<u128>(y) * c.precomp) >> 64);
    u64 r = c.operand * y - qhat * m.q;
    return r >= m.q ? r - m.q : r;
}

// Sum with a single reduction at the end; u128 holds 2^66 residues below 2^62.
u64 lazy_sum(std::span<const u64> xs, const Modulus& m);

u64 mod_pow(u64 base, u64 e, const Modulus& m);
u64 mod_inv(u64 x, const Modulus& m);

bool is_prime(u64 n);

// Smallest prime >= 2^(bits-1), q = 1 mod 2N, outside `exclude`.
Modulus gen_ntt_prime(int bits, u64 ring_degree, const std::set<u64>& exclude = {});

// `count` NTT primes as close as possible to `target`, alternating above/below so
// rescaling by them keeps the scale near target.
std::vector<Modulus> gen_ntt_primes_near(double target, int count, u64 ring_degree,
                                         std::set<u64>& taken);

}  // namespace fhelab
