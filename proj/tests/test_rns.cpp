#include <boost/multiprecision/cpp_int.hpp>
#include <random>

#include "doctest.h"
#include "fhelab/rns.hpp"

using namespace fhelab;
using boost::multiprecision::cpp_int;

namespace {

RnsBasis make_basis(std::size_t n, int count, int bits, std::set<u64>& taken) {
    RnsBasis b;
    for (int i = 0; i < count; ++i) {
        Modulus m = gen_ntt_prime(bits, n, taken);
        taken.insert(m.q);
        b.primes.push_back(std::make_shared<const NttTables>(m, n));
    }
    return b;
}

RnsPoly random_poly(const RnsBasis& b, std::size_t n, Rep r, std::mt19937_64& rng) {
    RnsPoly p(b, n, r);
    for (std::size_t l = 0; l < b.size(); ++l)
        for (std::size_t t = 0; t < n; ++t) p.limb(l)[t] = rng() % b.mod(l).q;
    return p;
}

cpp_int product(const RnsBasis& b) {
    cpp_int q = 1;
    for (std::size_t i = 0; i < b.size(); ++i) q *= b.mod(i).q;
    return q;
}

// exact CRT lift of coefficient t into [0, Q)
cpp_int crt(const RnsPoly& p, std::size_t t) {
    cpp_int Q = product(p.basis), x = 0;
    for (std::size_t i = 0; i < p.limbs(); ++i) {
        u64 qi = p.basis.mod(i).q;
        cpp_int qh = Q / qi;
        u64 qh_mod = static_cast<u64>(qh % qi);
        u64 inv = mod_inv(qh_mod, p.basis.mod(i));
        x += qh * cpp_int(mod_mul_barrett(p.limb(i)[t], inv, p.basis.mod(i)));
    }
    return x % Q;
}

cpp_int centered(cpp_int x, const cpp_int& Q) {
    x %= Q;
    if (x < 0) x += Q;
    if (x > Q / 2) x -= Q;
    return x;
}

}  // namespace

TEST_CASE("ntt roundtrip is exact") {
    std::set<u64> taken;
    std::mt19937_64 rng(3);
    for (std::size_t n : {8u, 64u, 4096u}) {
        auto b = make_basis(n, 3, 50, taken);
        auto p = random_poly(b, n, Rep::coefficient, rng);
        CHECK(intt(ntt(p)) == p);
        auto e = random_poly(b, n, Rep::evaluation, rng);
        CHECK(ntt(intt(e)) == e);
    }
}

TEST_CASE("ntt product equals schoolbook negacyclic convolution at N=8") {
    std::set<u64> taken;
    std::mt19937_64 rng(5);
    const std::size_t n = 8;
    auto b = make_basis(n, 2, 30, taken);
    for (int trial = 0; trial < 50; ++trial) {
        auto x = random_poly(b, n, Rep::coefficient, rng);
        auto y = random_poly(b, n, Rep::coefficient, rng);
        auto z = intt(mul(ntt(x), ntt(y)));
        for (std::size_t l = 0; l < b.size(); ++l) {
            const Modulus& m = b.mod(l);
            std::vector<u64> ref(n, 0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    u64 pr = mod_mul_barrett(x.limb(l)[i], y.limb(l)[j], m);
                    std::size_t k = i + j;
                    if (k < n) ref[k] = mod_add(ref[k], pr, m);
                    else ref[k - n] = mod_sub(ref[k - n], pr, m);
                }
            for (std::size_t k = 0; k < n; ++k) REQUIRE(z.limb(l)[k] == ref[k]);
        }
    }
}

TEST_CASE("ntt of a constant is flat and evaluates at odd powers of the root") {
    std::set<u64> taken;
    const std::size_t n = 8;
    auto b = make_basis(n, 1, 30, taken);
    RnsPoly c(b, n, Rep::coefficient);
    c.limb(0)[0] = 42;
    auto e = ntt(c);
    for (std::size_t t = 0; t < n; ++t) CHECK(e.limb(0)[t] == 42);
    // Vandermonde oracle: the multiset of NTT outputs equals {p(psi^(2i+1))}
    std::mt19937_64 rng(9);
    auto p = random_poly(b, n, Rep::coefficient, rng);
    auto pe = ntt(p);
    const Modulus& m = b.mod(0);
    std::multiset<u64> want, got(pe.limb(0), pe.limb(0) + n);
    for (std::size_t i = 0; i < n; ++i) {
        u64 x = mod_pow(m.root, 2 * i + 1, m), acc = 0, pw = 1;
        for (std::size_t k = 0; k < n; ++k) {
            acc = mod_add(acc, mod_mul_barrett(p.limb(0)[k], pw, m), m);
            pw = mod_mul_barrett(pw, x, m);
        }
        want.insert(acc);
    }
    CHECK(want == got);
}

TEST_CASE("automorph composition and group order") {
    std::set<u64> taken;
    std::mt19937_64 rng(13);
    const std::size_t n = 16;
    auto b = make_basis(n, 2, 30, taken);
    for (Rep r : {Rep::coefficient, Rep::evaluation}) {
        auto p = random_poly(b, n, r, rng);
        CHECK(automorph(p, 0) == p);
        CHECK(automorph(automorph(p, 1), 1) == automorph(p, 2));
        RnsPoly q = p;
        for (std::size_t i = 0; i < n / 2; ++i) q = automorph(q, 1);
        CHECK(q == p);
    }
    // the two representations agree
    auto p = random_poly(b, n, Rep::coefficient, rng);
    CHECK(ntt(automorph(p, 3)) == automorph(ntt(p), 3));
    CHECK(ntt(automorph_galois(p, 2 * n - 1)) == automorph_galois(ntt(p), 2 * n - 1));
}

TEST_CASE("basis conversion matches the big-integer CRT oracle up to a multiple of Q") {
    std::set<u64> taken;
    std::mt19937_64 rng(17);
    const std::size_t n = 16;
    auto src = make_basis(n, 3, 40, taken);
    auto dst = make_basis(n, 2, 45, taken);
    auto p = random_poly(src, n, Rep::coefficient, rng);
    auto c = basis_convert(p, dst);
    cpp_int Q = product(src);
    for (std::size_t t = 0; t < n; ++t) {
        cpp_int x = crt(p, t);
        bool ok = false;
        // fast conversion returns x + u*Q with 0 <= u < k
        for (int u = 0; u < 3 && !ok; ++u) {
            bool all = true;
            for (std::size_t j = 0; j < dst.size(); ++j)
                all &= static_cast<u64>((x + u * Q) % dst.mod(j).q) == c.limb(j)[t];
            ok = all;
        }
        REQUIRE(ok);
    }
    RnsPoly zero(src, n, Rep::coefficient);
    for (auto v : basis_convert(zero, dst).data) CHECK(v == 0);
    // single source limb is plain reduction
    auto one = random_poly(src.slice(0, 1), n, Rep::coefficient, rng);
    auto oc = basis_convert(one, dst);
    for (std::size_t j = 0; j < dst.size(); ++j)
        for (std::size_t t = 0; t < n; ++t) CHECK(oc.limb(j)[t] == one.limb(0)[t] % dst.mod(j).q);
}

TEST_CASE("mod_up preserves the value in the exact regime") {
    std::set<u64> taken;
    std::mt19937_64 rng(19);
    const std::size_t n = 16;
    auto src = make_basis(n, 2, 40, taken);
    auto ext = make_basis(n, 1, 45, taken);
    CHECK(mod_up(ntt(RnsPoly(src, n, Rep::coefficient)), RnsBasis{}) == ntt(RnsPoly(src, n, Rep::coefficient)));
    auto p = random_poly(src, n, Rep::coefficient, rng);
    auto up = intt(mod_up(p, ext));
    cpp_int Q = product(src);
    for (std::size_t t = 0; t < n; ++t) {
        cpp_int x = crt(p, t);
        cpp_int y = crt(up, t);
        cpp_int diff = y - x;
        CHECK(diff % Q == 0);
        CHECK(diff / Q < 2);
    }
    CHECK_THROWS(mod_up(p, src.slice(0, 1)));
}

TEST_CASE("mod_down rounds x/P within the pinned bound") {
    std::set<u64> taken;
    std::mt19937_64 rng(23);
    const std::size_t n = 16;
    auto keep = make_basis(n, 4, 45, taken);
    for (std::size_t d : {1u, 2u, 3u}) {
        auto drop = make_basis(n, static_cast<int>(d), 50, taken);
        RnsBasis full = keep.concat(drop);
        auto x = random_poly(full, n, Rep::coefficient, rng);
        auto y = mod_down(x, d);
        cpp_int Q = product(keep), P = product(drop), QP = Q * P;
        const double bound = keep.size() / 2.0 + 1;  // l/2 + 1
        for (std::size_t t = 0; t < n; ++t) {
            cpp_int xv = crt(x, t);
            cpp_int yv = crt(y, t);
            // compare y*P against x modulo QP with a small centered difference
            cpp_int diff = centered(yv * P - xv, QP);
            double err = std::fabs(diff.convert_to<double>() / P.convert_to<double>());
            REQUIRE(err <= bound);
        }
        // exact divisibility
        RnsPoly yy = random_poly(keep, n, Rep::coefficient, rng);
        auto up = p_mod_up(ntt(yy), drop);
        for (std::size_t l = keep.size(); l < up.limbs(); ++l)
            for (std::size_t t = 0; t < n; ++t) CHECK(up.limb(l)[t] == 0);
        CHECK(intt(mod_down(up, d)) == yy);
    }
    auto x = random_poly(keep, n, Rep::coefficient, rng);
    CHECK_THROWS(mod_down(x, keep.size()));
}

TEST_CASE("decomp partitions contiguous limbs") {
    std::set<u64> taken;
    std::mt19937_64 rng(29);
    auto b = make_basis(8, 7, 30, taken);
    auto p = random_poly(b, 8, Rep::evaluation, rng);
    auto ds = decomp(p, 3);
    REQUIRE(ds.size() == 3);
    CHECK(ds[0].limbs() == 3);
    CHECK(ds[2].limbs() == 1);
    std::vector<u64> cat;
    for (auto& d : ds) cat.insert(cat.end(), d.data.begin(), d.data.end());
    CHECK(cat == p.data);
    CHECK(decomp(drop_limbs(p, 3), 3).size() == 1);
}

TEST_CASE("kernel op counts follow the primitive convention") {
    std::set<u64> taken;
    std::mt19937_64 rng(31);
    const std::size_t n = 64;
    auto b = make_basis(n, 3, 40, taken);
    auto ext = make_basis(n, 2, 45, taken);
    auto p = random_poly(b, n, Rep::coefficient, rng);
    CountScope s;
    auto e = ntt(p);
    CHECK(op_counter().mults == 3 * (n / 2) * 6);
    CHECK(op_counter().adds == 3 * n * 6);
    op_counter() = OpCounter{0, 0, true};
    basis_convert(p, ext);
    CHECK(op_counter().mults == n * (3 + 3 * 2));
    CHECK(op_counter().adds == n * 3 * 2);
}
