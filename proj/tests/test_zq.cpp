#include <random>

#include "doctest.h"
#include "fhelab/zq.hpp"

using namespace fhelab;

namespace {

u64 ref_mul(u64 a, u64 b, u64 q) { return static_cast<u64>(static_cast<u128>(a) * b % q); }

}  // namespace

TEST_CASE("barrett and shoup match the u128 oracle on 10^6 random cases") {
    std::mt19937_64 rng(7);
    const std::vector<u64> qs = {0x3fffffffffffffc5ULL >> 1, 1152921504606584833ULL, 65537, 12289, 3};
    std::size_t checked = 0;
    for (u64 q : qs) {
        Modulus m(q);
        std::uniform_int_distribution<u64> d(0, q - 1);
        for (int i = 0; i < 200000; ++i) {
            u64 a = d(rng), b = d(rng);
            u64 want = ref_mul(a, b, q);
            REQUIRE(mod_mul_barrett(a, b, m) == want);
            REQUIRE(mod_mul_shoup(a, make_shoup(b, m), m) == want);
            ++checked;
        }
        // edges
        for (u64 a : {u64(0), u64(1), q - 1})
            for (u64 b : {u64(0), u64(1), q - 1}) CHECK(mod_mul_barrett(a, b, m) == ref_mul(a, b, q));
    }
    CHECK(checked == 1000000);
}

TEST_CASE("add, sub, neg stay in range") {
    Modulus m(12289);
    CHECK(mod_add(12288, 1, m) == 0);
    CHECK(mod_sub(0, 1, m) == 12288);
    CHECK(mod_neg(0, m) == 0);
    CHECK(mod_neg(5, m) == 12284);
}

TEST_CASE("barrett_reduce_128 against % on wide inputs") {
    std::mt19937_64 rng(11);
    Modulus m(1152921504606584833ULL);
    for (int i = 0; i < 10000; ++i) {
        u128 z = (static_cast<u128>(rng() % m.q) * (rng() % m.q)) + rng() % m.q;
        CHECK(barrett_reduce_128(z, m) == static_cast<u64>(z % m.q));
    }
}

TEST_CASE("lazy_sum equals sum mod q") {
    Modulus m(65537);
    std::vector<u64> xs(1000);
    u64 ref = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        xs[i] = (i * 7919) % m.q;
        ref = (ref + xs[i]) % m.q;
    }
    CHECK(lazy_sum(xs, m) == ref);
}

TEST_CASE("inverse and pow") {
    Modulus m(12289);
    for (u64 x = 1; x < 200; ++x) CHECK(mod_mul_barrett(x, mod_inv(x, m), m) == 1);
    CHECK(mod_pow(3, 12288, m) == 1);
    CHECK_THROWS(mod_inv(0, m));
}

TEST_CASE("primality") {
    CHECK(is_prime(2));
    CHECK(is_prime(12289));
    CHECK_FALSE(is_prime(1));
    CHECK_FALSE(is_prime(561));                      // Carmichael
    CHECK_FALSE(is_prime(3215031751ULL));            // strong pseudoprime to 2,3,5,7
    CHECK(is_prime(1152921504606584833ULL));
}

TEST_CASE("ntt primes carry a primitive 2N-th root") {
    std::set<u64> taken;
    for (u64 n : {u64(8), u64(4096)}) {
        Modulus m = gen_ntt_prime(40, n, taken);
        CHECK(m.q % (2 * n) == 1);
        CHECK(is_prime(m.q));
        CHECK(mod_pow(m.root, n, m) == m.q - 1);
        CHECK(mod_pow(m.root, 2 * n, m) == 1);
    }
    auto near = gen_ntt_primes_near(0x1p40, 6, 4096, taken);
    for (auto& m : near) {
        CHECK(std::fabs(double(m.q) / 0x1p40 - 1) < 0x1p-10);
        CHECK(taken.count(m.q) == 1);
    }
}

TEST_CASE("constructing an out of range modulus fails") {
    CHECK_THROWS(Modulus(1));
    CHECK_THROWS(Modulus(u64(1) << 62));
}
