#include "fhelab/zq.hpp"

#include <algorithm>
#include <cmath>

namespace fhelab {

OpCounter& op_counter() {
    thread_local OpCounter c;
    return c;
}

Modulus::Modulus(u64 q_) : q(q_) {
    if (q < 2 || q >= (u64(1) << 62)) throw std::invalid_argument("modulus out of range");
    bits = 64 - __builtin_clzll(q);
    // 2^128 / q via long division on 64-bit halves
    u128 top = (~u128(0)) / q;
    // ~0 = 2^128 - 1, so floor((2^128-1)/q) equals floor(2^128/q) unless q divides 2^128
    ratio_hi = static_cast<u64>(top >> 64);
    ratio_lo = static_cast<u64>(top);
}

ShoupConst make_shoup(u64 operand, const Modulus& m) {
    FHELAB_RANGE(operand, m);
    ShoupConst c;
    c.operand = operand;
    c.precomp = static_cast<u64>((static_cast<u128>(operand) << 64) / m.q);
    return c;
}

u64 lazy_sum(std::span<const u64> xs, const Modulus& m) {
    if (xs.size() > (std::size_t(1) << 62))
        throw std::invalid_argument("lazy_sum: accumulator overflow risk");
    u128 acc = 0;
    for (u64 x : xs) acc += x;
    return barrett_reduce_128(acc, m);
}

u64 mod_pow(u64 base, u64 e, const Modulus& m) {
    u64 r = 1 % m.q, b = base % m.q;
    while (e) {
        if (e & 1) r = mod_mul_barrett(r, b, m);
        b = mod_mul_barrett(b, b, m);
        e >>= 1;
    }
    return r;
}

u64 mod_inv(u64 x, const Modulus& m) {
    if (x % m.q == 0) throw std::domain_error("no inverse");
    return mod_pow(x % m.q, m.q - 2, m);
}

namespace {

u64 mulmod_raw(u64 a, u64 b, u64 n) { return static_cast<u64>(static_cast<u128>(a) * b % n); }

u64 powmod_raw(u64 a, u64 e, u64 n) {
    u64 r = 1 % n;
    a %= n;
    while (e) {
        if (e & 1) r = mulmod_raw(r, a, n);
        a = mulmod_raw(a, a, n);
        e >>= 1;
    }
    return r;
}

}  // namespace

bool is_prime(u64 n) {
    if (n < 2) return false;
    static const u64 small[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
    for (u64 p : small) {
        if (n % p == 0) return n == p;
    }
    u64 d = n - 1;
    int s = 0;
    while ((d & 1) == 0) {
        d >>= 1;
        ++s;
    }
    // these bases are deterministic for all n < 2^64
    for (u64 a : small) {
        u64 x = powmod_raw(a, d, n);
        if (x == 1 || x == n - 1) continue;
        bool composite = true;
        for (int r = 1; r < s; ++r) {
            x = mulmod_raw(x, x, n);
            if (x == n - 1) {
                composite = false;
                break;
            }
        }
        if (composite) return false;
    }
    return true;
}

namespace {

u64 find_root(const Modulus& m, u64 two_n) {
    for (u64 x = 2; x < m.q; ++x) {
        u64 g = mod_pow(x, (m.q - 1) / two_n, m);
        if (mod_pow(g, two_n / 2, m) == m.q - 1) return g;
    }
    throw std::runtime_error("no primitive root");
}

Modulus finish(u64 q, u64 ring_degree) {
    Modulus m(q);
    m.ring_degree = ring_degree;
    m.root = find_root(m, 2 * ring_degree);
    return m;
}

}  // namespace

Modulus gen_ntt_prime(int bits, u64 ring_degree, const std::set<u64>& exclude) {
    if (bits < 20 || bits > 62) throw std::invalid_argument("gen_ntt_prime: bits out of range");
    if (ring_degree == 0 || (ring_degree & (ring_degree - 1)))
        throw std::invalid_argument("gen_ntt_prime: N must be a power of two");
    u64 two_n = 2 * ring_degree;
    u64 lo = u64(1) << (bits - 1), hi = (bits == 64) ? ~u64(0) : (u64(1) << bits);
    u64 c = (lo + two_n - 1) / two_n * two_n + 1;
    for (; c < hi; c += two_n) {
        if (!exclude.count(c) && is_prime(c)) return finish(c, ring_degree);
    }
    throw std::runtime_error("gen_ntt_prime: exhausted");
}

std::vector<Modulus> gen_ntt_primes_near(double target, int count, u64 ring_degree,
                                         std::set<u64>& taken) {
    u64 two_n = 2 * ring_degree;
    u64 center = static_cast<u64>(std::llround(target)) / two_n * two_n + 1;
    u64 up = center, down = center - two_n;
    std::vector<Modulus> out;
    bool go_up = true;
    while (static_cast<int>(out.size()) < count) {
        u64& c = go_up ? up : down;
        while (taken.count(c) || !is_prime(c)) c = go_up ? c + two_n : c - two_n;
        taken.insert(c);
        out.push_back(finish(c, ring_degree));
        go_up = !go_up;
    }
    return out;
}

}  // namespace fhelab
