#pragma once

#include <memory>
#include <vector>

#include "fhelab/zq.hpp"

namespace fhelab {

// Per-prime NTT tables for the negacyclic ring Z_q[X]/(X^N+1).
struct NttTables {
    Modulus mod;
    std::size_t n = 0;
    int log_n = 0;
    std::vector<ShoupConst> psi;      // bit-reversed powers of the 2N-th root
    std::vector<ShoupConst> psi_inv;  // bit-reversed powers of its inverse
    ShoupConst n_inv;

    NttTables(const Modulus& m, std::size_t n);
    void forward(u64* a) const;
    void inverse(u64* a) const;
};

using PrimeRef = std::shared_ptr<const NttTables>;

struct RnsBasis {
    std::vector<PrimeRef> primes;

    std::size_t size() const { return primes.size(); }
    const Modulus& mod(std::size_t i) const { return primes[i]->mod; }
    RnsBasis slice(std::size_t from, std::size_t to) const;
    RnsBasis concat(const RnsBasis& other) const;
    bool contains(u64 q) const;
    std::vector<u64> moduli() const;
};

enum class Rep { coefficient, evaluation };

struct RnsPoly {
    RnsBasis basis;
    std::size_t n = 0;
    Rep rep = Rep::coefficient;
    std::vector<u64> data;  // limb-major

    RnsPoly() = default;
    RnsPoly(RnsBasis b, std::size_t n, Rep r);

    std::size_t limbs() const { return basis.size(); }
    u64* limb(std::size_t i) { return data.data() + i * n; }
    const u64* limb(std::size_t i) const { return data.data() + i * n; }
    bool operator==(const RnsPoly& o) const;
};

// Exact op counts of the kernels below; the cost model builds on these.
struct KernelCost {
    double mults = 0, adds = 0;
};
KernelCost ntt_cost(std::size_t n, double limbs, bool inverse);
KernelCost bconv_cost(std::size_t n, double from, double to);

RnsPoly ntt(const RnsPoly& p);
RnsPoly intt(const RnsPoly& p);
void ntt_inplace(RnsPoly& p);
void intt_inplace(RnsPoly& p);

// Galois map X -> X^g for odd g; pure index permutation in either representation.
RnsPoly automorph_galois(const RnsPoly& p, u64 g);
// psi_k : X -> X^(5^k mod 2N)
RnsPoly automorph(const RnsPoly& p, std::size_t k);
u64 galois_element(std::size_t k, std::size_t n);

RnsPoly basis_convert(const RnsPoly& p, const RnsBasis& target);
RnsPoly mod_up(const RnsPoly& p, const RnsBasis& extension);
// Same, but the output follows the limb order of `full` (a superset of p.basis).
RnsPoly mod_up_to(const RnsPoly& p, const RnsBasis& full);
// Divide by the product of the limbs listed in `drop` (indices into p.basis).
RnsPoly mod_down(const RnsPoly& p, const std::vector<std::size_t>& drop);
// Drops the trailing `count` limbs.
RnsPoly mod_down(const RnsPoly& p, std::size_t count);
std::vector<RnsPoly> decomp(const RnsPoly& p, std::size_t alpha);
RnsPoly p_mod_up(const RnsPoly& p, const RnsBasis& extension);

// Keep the first `count` limbs (exact level drop, no rounding).
RnsPoly drop_limbs(const RnsPoly& p, std::size_t count);

// limb-wise helpers
RnsPoly add(const RnsPoly& a, const RnsPoly& b);
RnsPoly sub(const RnsPoly& a, const RnsPoly& b);
RnsPoly neg(const RnsPoly& a);
RnsPoly mul(const RnsPoly& a, const RnsPoly& b);
void add_inplace(RnsPoly& a, const RnsPoly& b);
void mul_scalar_inplace(RnsPoly& a, const std::vector<u64>& per_limb);

// Embed signed integer coefficients into every limb of `b`.
RnsPoly from_signed(const std::vector<i64>& coeffs, const RnsBasis& b);

}  // namespace fhelab
