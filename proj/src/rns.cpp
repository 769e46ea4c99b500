#include "fhelab/rns.hpp"

#include <algorithm>
#include <map>
#include <mutex>

namespace fhelab {

namespace {

std::size_t bitrev(std::size_t x, int bits) {
    std::size_t r = 0;
    for (int i = 0; i < bits; ++i) {
        r = (r << 1) | (x & 1);
        x >>= 1;
    }
    return r;
}

int ilog2(std::size_t n) {
    int l = 0;
    while ((std::size_t(1) << l) < n) ++l;
    return l;
}

}  // namespace

NttTables::NttTables(const Modulus& m, std::size_t n_) : mod(m), n(n_), log_n(ilog2(n_)) {
    if (m.root == 0 || m.ring_degree != n) throw std::invalid_argument("prime lacks a 2N-th root for this N");
    u64 root_inv = mod_inv(m.root, m);
    psi.resize(n);
    psi_inv.resize(n);
    u64 p = 1, pi = 1;
    std::vector<u64> pw(n), pwi(n);
    for (std::size_t i = 0; i < n; ++i) {
        pw[i] = p;
        pwi[i] = pi;
        p = mod_mul_barrett(p, m.root, m);
        pi = mod_mul_barrett(pi, root_inv, m);
    }
    for (std::size_t i = 0; i < n; ++i) {
        psi[i] = make_shoup(pw[bitrev(i, log_n)], m);
        psi_inv[i] = make_shoup(pwi[bitrev(i, log_n)], m);
    }
    n_inv = make_shoup(mod_inv(n % m.q, m), m);
}

void NttTables::forward(u64* a) const {
    const u64 q = mod.q;
    std::size_t t = n;
    for (std::size_t m = 1; m < n; m <<= 1) {
        t >>= 1;
        for (std::size_t i = 0; i < m; ++i) {
            std::size_t j1 = 2 * i * t;
            const ShoupConst& s = psi[m + i];
            for (std::size_t j = j1; j < j1 + t; ++j) {
                u64 u = a[j];
                u64 v = mod_mul_shoup(a[j + t], s, mod);
                u64 x = u + v;
                a[j] = x >= q ? x - q : x;
                a[j + t] = u >= v ? u - v : u + q - v;
            }
        }
    }
}

void NttTables::inverse(u64* a) const {
    const u64 q = mod.q;
    std::size_t t = 1;
    for (std::size_t m = n; m > 1; m >>= 1) {
        std::size_t j1 = 0, h = m >> 1;
        for (std::size_t i = 0; i < h; ++i) {
            const ShoupConst& s = psi_inv[h + i];
            for (std::size_t j = j1; j < j1 + t; ++j) {
                u64 u = a[j], v = a[j + t];
                u64 x = u + v;
                a[j] = x >= q ? x - q : x;
                a[j + t] = mod_mul_shoup(u >= v ? u - v : u + q - v, s, mod);
            }
            j1 += 2 * t;
        }
        t <<= 1;
    }
    for (std::size_t j = 0; j < n; ++j) a[j] = mod_mul_shoup(a[j], n_inv, mod);
}

RnsBasis RnsBasis::slice(std::size_t from, std::size_t to) const {
    RnsBasis b;
    b.primes.assign(primes.begin() + from, primes.begin() + to);
    return b;
}

RnsBasis RnsBasis::concat(const RnsBasis& other) const {
    RnsBasis b = *this;
    b.primes.insert(b.primes.end(), other.primes.begin(), other.primes.end());
    return b;
}

bool RnsBasis::contains(u64 q) const {
    for (auto& p : primes)
        if (p->mod.q == q) return true;
    return false;
}

std::vector<u64> RnsBasis::moduli() const {
    std::vector<u64> v;
    for (auto& p : primes) v.push_back(p->mod.q);
    return v;
}

RnsPoly::RnsPoly(RnsBasis b, std::size_t n_, Rep r) : basis(std::move(b)), n(n_), rep(r), data(basis.size() * n_, 0) {}

bool RnsPoly::operator==(const RnsPoly& o) const {
    return n == o.n && rep == o.rep && basis.moduli() == o.basis.moduli() && data == o.data;
}

KernelCost ntt_cost(std::size_t n, double limbs, bool inverse) {
    double logn = ilog2(n);
    KernelCost c;
    c.mults = limbs * (n / 2.0 * logn + (inverse ? double(n) : 0.0));
    c.adds = limbs * n * logn;
    return c;
}

KernelCost bconv_cost(std::size_t n, double from, double to) {
    KernelCost c;
    if (from <= 1) return c;
    c.mults = n * (from + from * to);
    c.adds = n * from * to;
    return c;
}

namespace {

void charge(const KernelCost& c) { fhelab::charge(static_cast<u64>(c.mults), static_cast<u64>(c.adds)); }

void require_same(const RnsPoly& a, const RnsPoly& b) {
    if (a.n != b.n || a.rep != b.rep || a.basis.moduli() != b.basis.moduli())
        throw std::invalid_argument("basis/representation mismatch");
}

}  // namespace

void ntt_inplace(RnsPoly& p) {
    if (p.rep != Rep::coefficient) throw std::logic_error("ntt: expected coefficient representation");
    for (std::size_t i = 0; i < p.limbs(); ++i) p.basis.primes[i]->forward(p.limb(i));
    charge(ntt_cost(p.n, p.limbs(), false));
    p.rep = Rep::evaluation;
}

void intt_inplace(RnsPoly& p) {
    if (p.rep != Rep::evaluation) throw std::logic_error("intt: expected evaluation representation");
    for (std::size_t i = 0; i < p.limbs(); ++i) p.basis.primes[i]->inverse(p.limb(i));
    charge(ntt_cost(p.n, p.limbs(), true));
    p.rep = Rep::coefficient;
}

RnsPoly ntt(const RnsPoly& p) {
    RnsPoly r = p;
    ntt_inplace(r);
    return r;
}

RnsPoly intt(const RnsPoly& p) {
    RnsPoly r = p;
    intt_inplace(r);
    return r;
}

u64 galois_element(std::size_t k, std::size_t n) {
    u64 two_n = 2 * n, g = 1;
    for (std::size_t i = 0; i < k; ++i) g = g * 5 % two_n;
    return g;
}

namespace {

std::mutex g_cache_mu;
std::map<std::pair<std::size_t, u64>, std::vector<std::size_t>> g_perm;

const std::vector<std::size_t>& eval_permutation(std::size_t n, u64 g) {
    std::lock_guard<std::mutex> lk(g_cache_mu);
    auto key = std::make_pair(n, g);
    auto it = g_perm.find(key);
    if (it != g_perm.end()) return it->second;
    int bits = ilog2(n);
    u64 two_n = 2 * n;
    std::vector<std::size_t> perm(n);
    for (std::size_t j = 0; j < n; ++j) {
        u64 e = 2 * bitrev(j, bits) + 1;
        u64 t = e * g % two_n;
        perm[j] = bitrev((t - 1) / 2, bits);
    }
    return g_perm.emplace(key, std::move(perm)).first->second;
}

struct ConvTable {
    std::vector<ShoupConst> qhat_inv;      // per source limb
    std::vector<std::vector<u64>> qhat;    // [target][source]
};

std::map<std::pair<std::vector<u64>, std::vector<u64>>, ConvTable> g_conv;

const ConvTable& conv_table(const RnsBasis& from, const RnsBasis& to) {
    std::lock_guard<std::mutex> lk(g_cache_mu);
    auto key = std::make_pair(from.moduli(), to.moduli());
    auto it = g_conv.find(key);
    if (it != g_conv.end()) return it->second;
    ConvTable t;
    std::size_t k = from.size();
    for (std::size_t i = 0; i < k; ++i) {
        const Modulus& qi = from.mod(i);
        u64 prod = 1;
        for (std::size_t l = 0; l < k; ++l)
            if (l != i) prod = mod_mul_barrett(prod, from.mod(l).q % qi.q, qi);
        t.qhat_inv.push_back(make_shoup(mod_inv(prod, qi), qi));
    }
    for (std::size_t j = 0; j < to.size(); ++j) {
        const Modulus& pj = to.mod(j);
        std::vector<u64> row(k);
        for (std::size_t i = 0; i < k; ++i) {
            u64 prod = 1;
            for (std::size_t l = 0; l < k; ++l)
                if (l != i) prod = mod_mul_barrett(prod, from.mod(l).q % pj.q, pj);
            row[i] = prod;
        }
        t.qhat.push_back(std::move(row));
    }
    return g_conv.emplace(std::move(key), std::move(t)).first->second;
}

}  // namespace

RnsPoly automorph_galois(const RnsPoly& p, u64 g) {
    if ((g & 1) == 0) throw std::invalid_argument("galois element must be odd");
    RnsPoly r(p.basis, p.n, p.rep);
    const std::size_t n = p.n;
    if (p.rep == Rep::evaluation) {
        const auto& perm = eval_permutation(n, g % (2 * n));
        for (std::size_t l = 0; l < p.limbs(); ++l) {
            const u64* src = p.limb(l);
            u64* dst = r.limb(l);
            for (std::size_t j = 0; j < n; ++j) dst[j] = src[perm[j]];
        }
    } else {
        u64 two_n = 2 * n;
        for (std::size_t l = 0; l < p.limbs(); ++l) {
            const Modulus& m = p.basis.mod(l);
            const u64* src = p.limb(l);
            u64* dst = r.limb(l);
            for (std::size_t i = 0; i < n; ++i) {
                u64 t = i * g % two_n;
                if (t < n) dst[t] = src[i];
                else dst[t - n] = mod_neg(src[i], m);
            }
        }
    }
    return r;
}

RnsPoly automorph(const RnsPoly& p, std::size_t k) { return automorph_galois(p, galois_element(k, p.n)); }

RnsPoly basis_convert(const RnsPoly& p, const RnsBasis& target) {
    if (p.rep != Rep::coefficient) throw std::logic_error("basis_convert: expected coefficient representation");
    const std::size_t n = p.n, k = p.limbs();
    RnsPoly out(target, n, Rep::coefficient);
    if (k == 1) {
        for (std::size_t j = 0; j < target.size(); ++j)
            for (std::size_t c = 0; c < n; ++c) out.limb(j)[c] = barrett_reduce_64(p.limb(0)[c], target.mod(j));
        return out;
    }
    const ConvTable& t = conv_table(p.basis, target);
    std::vector<u64> y(k * n);
    for (std::size_t i = 0; i < k; ++i) {
        const Modulus& qi = p.basis.mod(i);
        for (std::size_t c = 0; c < n; ++c) y[i * n + c] = mod_mul_shoup(p.limb(i)[c], t.qhat_inv[i], qi);
    }
    std::vector<u128> acc(n);
    for (std::size_t j = 0; j < target.size(); ++j) {
        const Modulus& pj = target.mod(j);
        std::fill(acc.begin(), acc.end(), 0);
        u64* dst = out.limb(j);
        std::size_t pending = 0;
        for (std::size_t i = 0; i < k; ++i) {
            u64 w = t.qhat[j][i];
            const u64* yi = &y[i * n];
            for (std::size_t c = 0; c < n; ++c) acc[c] += static_cast<u128>(yi[c]) * w;
            if (++pending == 15) {
                for (std::size_t c = 0; c < n; ++c) acc[c] = barrett_reduce_128(acc[c], pj);
                pending = 0;
            }
        }
        for (std::size_t c = 0; c < n; ++c) dst[c] = barrett_reduce_128(acc[c], pj);
    }
    charge(bconv_cost(n, k, target.size()));
    return out;
}

namespace {

// Representation of p on `full` (which must contain p.basis); missing limbs come
// from fast basis conversion.
RnsPoly extend(const RnsPoly& p, const RnsBasis& full) {
    RnsBasis missing;
    std::vector<std::size_t> src_of(full.size(), SIZE_MAX);
    for (std::size_t j = 0; j < full.size(); ++j) {
        bool found = false;
        for (std::size_t i = 0; i < p.limbs(); ++i) {
            if (p.basis.mod(i).q == full.mod(j).q) {
                src_of[j] = i;
                found = true;
                break;
            }
        }
        if (!found) missing.primes.push_back(full.primes[j]);
    }
    if (missing.size() + p.limbs() != full.size()) throw std::invalid_argument("mod_up: source not contained in target");
    RnsPoly eval = p;
    RnsPoly coef = p;
    if (p.rep == Rep::evaluation) intt_inplace(coef);
    else ntt_inplace(eval);
    RnsPoly conv = basis_convert(coef, missing);
    ntt_inplace(conv);
    RnsPoly out(full, p.n, Rep::evaluation);
    std::size_t mi = 0;
    for (std::size_t j = 0; j < full.size(); ++j) {
        const u64* src = src_of[j] != SIZE_MAX ? eval.limb(src_of[j]) : conv.limb(mi++);
        std::copy(src, src + p.n, out.limb(j));
    }
    return out;
}

}  // namespace

RnsPoly mod_up(const RnsPoly& p, const RnsBasis& extension) {
    for (auto& e : extension.primes)
        if (p.basis.contains(e->mod.q)) throw std::invalid_argument("mod_up: overlapping prime sets");
    if (extension.size() == 0) return p;
    return extend(p, p.basis.concat(extension));
}

RnsPoly mod_up_to(const RnsPoly& p, const RnsBasis& full) { return extend(p, full); }

RnsPoly mod_down(const RnsPoly& p, const std::vector<std::size_t>& drop) {
    if (drop.empty()) return p;
    if (drop.size() >= p.limbs()) throw std::invalid_argument("mod_down: drop count must be below limb count");
    std::vector<bool> dropped(p.limbs(), false);
    for (auto d : drop) {
        if (d >= p.limbs() || dropped[d]) throw std::invalid_argument("mod_down: bad drop index");
        dropped[d] = true;
    }
    RnsBasis keep_b, drop_b;
    std::vector<std::size_t> keep_idx;
    for (std::size_t i = 0; i < p.limbs(); ++i) {
        if (dropped[i]) drop_b.primes.push_back(p.basis.primes[i]);
        else {
            keep_b.primes.push_back(p.basis.primes[i]);
            keep_idx.push_back(i);
        }
    }
    const std::size_t n = p.n;
    RnsPoly xd(drop_b, n, p.rep);
    for (std::size_t i = 0; i < drop.size(); ++i) std::copy(p.limb(drop[i]), p.limb(drop[i]) + n, xd.limb(i));
    if (xd.rep == Rep::evaluation) intt_inplace(xd);
    RnsPoly conv = basis_convert(xd, keep_b);
    if (p.rep == Rep::evaluation) ntt_inplace(conv);
    RnsPoly out(keep_b, n, p.rep);
    for (std::size_t j = 0; j < keep_idx.size(); ++j) {
        const Modulus& m = keep_b.mod(j);
        u64 pinv = 1;
        for (auto& d : drop_b.primes) pinv = mod_mul_barrett(pinv, d->mod.q % m.q, m);
        ShoupConst s = make_shoup(mod_inv(pinv, m), m);
        const u64* x = p.limb(keep_idx[j]);
        const u64* c = conv.limb(j);
        u64* o = out.limb(j);
        for (std::size_t t = 0; t < n; ++t) o[t] = mod_mul_shoup(mod_sub(x[t], c[t], m), s, m);
    }
    fhelab::charge(keep_idx.size() * n, keep_idx.size() * n);
    return out;
}

RnsPoly mod_down(const RnsPoly& p, std::size_t count) {
    std::vector<std::size_t> drop;
    for (std::size_t i = p.limbs() - std::min(count, p.limbs()); i < p.limbs(); ++i) drop.push_back(i);
    return mod_down(p, drop);
}

std::vector<RnsPoly> decomp(const RnsPoly& p, std::size_t alpha) {
    if (alpha == 0) throw std::invalid_argument("decomp: alpha must be positive");
    std::vector<RnsPoly> out;
    for (std::size_t from = 0; from < p.limbs(); from += alpha) {
        std::size_t to = std::min(from + alpha, p.limbs());
        RnsPoly d(p.basis.slice(from, to), p.n, p.rep);
        std::copy(p.limb(from), p.limb(to), d.data.begin());
        out.push_back(std::move(d));
    }
    return out;
}

RnsPoly p_mod_up(const RnsPoly& p, const RnsBasis& extension) {
    RnsPoly out(p.basis.concat(extension), p.n, p.rep);
    for (std::size_t i = 0; i < p.limbs(); ++i) {
        const Modulus& m = p.basis.mod(i);
        u64 pm = 1;
        for (auto& e : extension.primes) pm = mod_mul_barrett(pm, e->mod.q % m.q, m);
        ShoupConst s = make_shoup(pm, m);
        const u64* x = p.limb(i);
        u64* o = out.limb(i);
        for (std::size_t t = 0; t < p.n; ++t) o[t] = mod_mul_shoup(x[t], s, m);
    }
    fhelab::charge(p.limbs() * p.n, 0);
    return out;
}

RnsPoly drop_limbs(const RnsPoly& p, std::size_t count) {
    if (count > p.limbs() || count == 0) throw std::invalid_argument("drop_limbs: bad count");
    RnsPoly r(p.basis.slice(0, count), p.n, p.rep);
    std::copy(p.data.begin(), p.data.begin() + count * p.n, r.data.begin());
    return r;
}

RnsPoly add(const RnsPoly& a, const RnsPoly& b) {
    RnsPoly r = a;
    add_inplace(r, b);
    return r;
}

void add_inplace(RnsPoly& a, const RnsPoly& b) {
    require_same(a, b);
    for (std::size_t l = 0; l < a.limbs(); ++l) {
        const Modulus& m = a.basis.mod(l);
        u64* x = a.limb(l);
        const u64* y = b.limb(l);
        for (std::size_t t = 0; t < a.n; ++t) x[t] = mod_add(x[t], y[t], m);
    }
    fhelab::charge(0, a.limbs() * a.n);
}

RnsPoly sub(const RnsPoly& a, const RnsPoly& b) {
    require_same(a, b);
    RnsPoly r = a;
    for (std::size_t l = 0; l < a.limbs(); ++l) {
        const Modulus& m = a.basis.mod(l);
        u64* x = r.limb(l);
        const u64* y = b.limb(l);
        for (std::size_t t = 0; t < a.n; ++t) x[t] = mod_sub(x[t], y[t], m);
    }
    fhelab::charge(0, a.limbs() * a.n);
    return r;
}

RnsPoly neg(const RnsPoly& a) {
    RnsPoly r = a;
    for (std::size_t l = 0; l < a.limbs(); ++l) {
        const Modulus& m = a.basis.mod(l);
        u64* x = r.limb(l);
        for (std::size_t t = 0; t < a.n; ++t) x[t] = mod_neg(x[t], m);
    }
    return r;
}

RnsPoly mul(const RnsPoly& a, const RnsPoly& b) {
    require_same(a, b);
    if (a.rep != Rep::evaluation) throw std::logic_error("mul: expected evaluation representation");
    RnsPoly r = a;
    for (std::size_t l = 0; l < a.limbs(); ++l) {
        const Modulus& m = a.basis.mod(l);
        u64* x = r.limb(l);
        const u64* y = b.limb(l);
        for (std::size_t t = 0; t < a.n; ++t) x[t] = mod_mul_barrett(x[t], y[t], m);
    }
    fhelab::charge(a.limbs() * a.n, 0);
    return r;
}

void mul_scalar_inplace(RnsPoly& a, const std::vector<u64>& per_limb) {
    if (per_limb.size() != a.limbs()) throw std::invalid_argument("mul_scalar: limb count mismatch");
    for (std::size_t l = 0; l < a.limbs(); ++l) {
        const Modulus& m = a.basis.mod(l);
        ShoupConst s = make_shoup(per_limb[l] % m.q, m);
        u64* x = a.limb(l);
        for (std::size_t t = 0; t < a.n; ++t) x[t] = mod_mul_shoup(x[t], s, m);
    }
    fhelab::charge(a.limbs() * a.n, 0);
}

RnsPoly from_signed(const std::vector<i64>& coeffs, const RnsBasis& b) {
    RnsPoly r(b, coeffs.size(), Rep::coefficient);
    for (std::size_t l = 0; l < b.size(); ++l) {
        const Modulus& m = b.mod(l);
        u64* x = r.limb(l);
        for (std::size_t t = 0; t < coeffs.size(); ++t) {
            i64 c = coeffs[t];
            u64 v = barrett_reduce_64(static_cast<u64>(c < 0 ? -c : c), m);
            x[t] = c < 0 ? mod_neg(v, m) : v;
        }
    }
    return r;
}

}  // namespace fhelab
