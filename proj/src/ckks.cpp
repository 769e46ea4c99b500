#include "fhelab/ckks.hpp"

#include <sodium.h>

#include <cmath>
#include <cstring>
#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace fhelab {

std::uint64_t CkksParams::hash() const {
    // FNV-1a over the fields that change the ring or the chain
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xff;
            h *= 1099511628211ULL;
        }
    };
    mix(log_n);
    mix(static_cast<std::uint64_t>(L));
    mix(static_cast<std::uint64_t>(dnum));
    mix(static_cast<std::uint64_t>(std::llround(std::log2(delta) * 1024)));
    mix(static_cast<std::uint64_t>(q0_bits));
    mix(static_cast<std::uint64_t>(special_bits));
    return h;
}

namespace {

RnsBasis make_basis(const std::vector<Modulus>& ms, std::size_t n) {
    RnsBasis b;
    for (auto& m : ms) b.primes.push_back(std::make_shared<const NttTables>(m, n));
    return b;
}

// residue of round(x) without going through a 64-bit integer when |x| is large
u64 residue_of(double x, const Modulus& m) {
    double r = std::nearbyint(x);
    if (std::fabs(r) < 0x1p62) {
        i64 v = static_cast<i64>(r);
        u64 a = barrett_reduce_64(static_cast<u64>(v < 0 ? -v : v), m);
        return v < 0 ? mod_neg(a, m) : a;
    }
    int e = 0;
    double mant = std::frexp(r, &e);  // r = mant * 2^e, |mant| in [0.5, 1)
    i64 im = static_cast<i64>(std::ldexp(mant, 53));
    u64 a = barrett_reduce_64(static_cast<u64>(im < 0 ? -im : im), m);
    a = mod_mul_barrett(a, mod_pow(2, static_cast<u64>(e - 53), m), m);
    return im < 0 ? mod_neg(a, m) : a;
}

RnsPoly coeffs_to_poly(const std::vector<double>& c, const RnsBasis& b) {
    RnsPoly p(b, c.size(), Rep::coefficient);
    for (std::size_t l = 0; l < b.size(); ++l) {
        const Modulus& m = b.mod(l);
        u64* x = p.limb(l);
        for (std::size_t t = 0; t < c.size(); ++t) x[t] = residue_of(c[t], m);
    }
    ntt_inplace(p);
    return p;
}

void require_level(const Ciphertext& c, const Plaintext& p) {
    if (c.level != p.level) throw std::invalid_argument("level mismatch between ciphertext and plaintext");
}

}  // namespace

Context::Context(const CkksParams& p) : params_(p) {
    if (p.log_n < 3 || p.log_n > 17) throw std::invalid_argument("log_n out of range");
    if (p.L < 1 || p.dnum < 1 || p.dnum > p.L + 1) throw std::invalid_argument("bad L/dnum");
    if (p.q0_bits > 61 || p.special_bits > 61) throw std::invalid_argument("primes must stay below 2^62");
    const std::size_t n = p.ring_degree();
    std::set<u64> taken;
    auto q0 = gen_ntt_primes_near(std::ldexp(1.0, p.q0_bits), 1, n, taken);
    auto qs = gen_ntt_primes_near(p.delta, p.L, n, taken);
    auto ps = gen_ntt_primes_near(std::ldexp(1.0, p.special_bits), static_cast<int>(p.alpha()), n, taken);
    std::vector<Modulus> chain = q0;
    chain.insert(chain.end(), qs.begin(), qs.end());
    chain_ = make_basis(chain, n);
    special_ = make_basis(ps, n);
    key_basis_ = chain_.concat(special_);
}

RnsPoly expand_uniform(const std::array<unsigned char, 32>& seed, std::uint32_t row, const RnsBasis& basis,
                       std::size_t n) {
    if (sodium_init() < 0) throw std::runtime_error("libsodium init failed");
    RnsPoly out(basis, n, Rep::evaluation);
    constexpr std::size_t kChunk = 4096;  // bytes, a multiple of the 64-byte block
    std::vector<unsigned char> zeros(kChunk, 0), buf(kChunk);
    for (std::size_t l = 0; l < basis.size(); ++l) {
        unsigned char nonce[crypto_stream_chacha20_ietf_NONCEBYTES] = {};
        std::uint32_t limb = static_cast<std::uint32_t>(l);
        for (int i = 0; i < 4; ++i) {
            nonce[i] = static_cast<unsigned char>(row >> (8 * i));
            nonce[4 + i] = static_cast<unsigned char>(limb >> (8 * i));
        }
        const Modulus& m = basis.mod(l);
        const u64 mask = (m.bits == 64) ? ~u64(0) : ((u64(1) << m.bits) - 1);
        std::uint32_t counter = 0;
        std::size_t pos = kChunk, filled = 0;
        u64* dst = out.limb(l);
        while (filled < n) {
            if (pos == kChunk) {
                crypto_stream_chacha20_ietf_xor_ic(buf.data(), zeros.data(), kChunk, nonce, counter, seed.data());
                counter += kChunk / 64;
                pos = 0;
            }
            u64 w = 0;
            std::memcpy(&w, buf.data() + pos, 8);  // little-endian hosts only
            pos += 8;
            w &= mask;
            if (w < m.q) dst[filled++] = w;
        }
    }
    return out;
}

Evaluator::Evaluator(std::shared_ptr<const Context> ctx, std::uint64_t seed)
    : ctx_(std::move(ctx)), enc_(ctx_->n()), rng_(seed) {}

RnsPoly Evaluator::sample_uniform(const RnsBasis& b) {
    RnsPoly p(b, ctx_->n(), Rep::evaluation);
    for (std::size_t l = 0; l < b.size(); ++l) {
        std::uniform_int_distribution<u64> d(0, b.mod(l).q - 1);
        u64* x = p.limb(l);
        for (std::size_t t = 0; t < p.n; ++t) x[t] = d(rng_);
    }
    return p;
}

RnsPoly Evaluator::sample_error(const RnsBasis& b) {
    const double sigma = ctx_->params().sigma;
    std::normal_distribution<double> g(0.0, sigma);
    std::vector<i64> e(ctx_->n());
    for (auto& v : e) {
        double x;
        do x = g(rng_);
        while (std::fabs(x) > 6 * sigma);
        v = std::llround(x);
    }
    RnsPoly p = from_signed(e, b);
    ntt_inplace(p);
    return p;
}

SecretKey Evaluator::keygen_secret() {
    const std::size_t n = ctx_->n();
    SecretKey sk;
    sk.coeffs.assign(n, 0);
    const int h = ctx_->params().hamming_weight;
    if (h > 0) {
        if (static_cast<std::size_t>(h) > n) throw std::invalid_argument("hamming weight above ring degree");
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng_);
        std::bernoulli_distribution sign(0.5);
        for (int i = 0; i < h; ++i) sk.coeffs[idx[i]] = sign(rng_) ? 1 : -1;
    } else {
        std::uniform_int_distribution<int> d(-1, 1);
        for (auto& c : sk.coeffs) c = d(rng_);
    }
    sk.hamming_weight = 0;
    for (auto c : sk.coeffs) sk.hamming_weight += c != 0;
    sk.s = from_signed(sk.coeffs, ctx_->key_basis());
    ntt_inplace(sk.s);
    return sk;
}

std::vector<u64> Evaluator::gadget_factor(std::size_t digit, const RnsBasis& b) const {
    // P * T_j mod each prime: P mod q_i inside digit j, zero elsewhere
    const std::size_t alpha = ctx_->alpha();
    const std::size_t chain = ctx_->chain().size();
    std::vector<u64> f(b.size(), 0);
    for (std::size_t i = 0; i < b.size(); ++i) {
        if (i >= chain || i / alpha != digit) continue;
        const Modulus& m = b.mod(i);
        u64 pm = 1;
        for (auto& sp : ctx_->special().primes) pm = mod_mul_barrett(pm, sp->mod.q % m.q, m);
        f[i] = pm;
    }
    return f;
}

SwitchingKey Evaluator::make_switching_key(const SecretKey& sk, const RnsPoly& source, KeyTag tag, std::uint64_t galois,
                                           bool seeded) {
    const RnsBasis& kb = ctx_->key_basis();
    const auto dnum = static_cast<std::size_t>(ctx_->params().dnum);
    SwitchingKey k;
    k.tag = tag;
    k.galois = galois;
    if (seeded) {
        std::array<unsigned char, 32> s{};
        for (auto& c : s) c = static_cast<unsigned char>(rng_());
        k.seed = s;
    }
    for (std::size_t j = 0; j < dnum; ++j) {
        RnsPoly a = seeded ? expand_uniform(*k.seed, static_cast<std::uint32_t>(j), kb, ctx_->n()) : sample_uniform(kb);
        RnsPoly b = sample_error(kb);
        b = fhelab::sub(b, mul(a, sk.s));
        RnsPoly g = source;
        mul_scalar_inplace(g, gadget_factor(j, kb));
        add_inplace(b, g);
        k.a.push_back(std::move(a));
        k.b.push_back(std::move(b));
    }
    return k;
}

CompressedSwitchingKey Evaluator::compress_key(const SwitchingKey& k) {
    if (!k.seed) throw std::invalid_argument("compress_key: key was not generated from a seed");
    CompressedSwitchingKey c;
    c.tag = k.tag;
    c.galois = k.galois;
    c.seed = *k.seed;
    c.b = k.b;
    return c;
}

SwitchingKey Evaluator::expand_key(const CompressedSwitchingKey& ck) const {
    SwitchingKey k;
    k.tag = ck.tag;
    k.galois = ck.galois;
    k.seed = ck.seed;
    k.b = ck.b;
    for (std::size_t j = 0; j < ck.b.size(); ++j)
        k.a.push_back(expand_uniform(ck.seed, static_cast<std::uint32_t>(j), ctx_->key_basis(), ctx_->n()));
    return k;
}

std::uint64_t Evaluator::rotation_galois(int k, std::size_t n) {
    // right rotation by k: slot i receives slot i-k
    const auto slots = static_cast<i64>(n / 2);
    i64 kk = ((-static_cast<i64>(k)) % slots + slots) % slots;
    return galois_element(static_cast<std::size_t>(kk), n);
}

SwitchingKey Evaluator::relin_key(const SecretKey& sk) {
    return make_switching_key(sk, mul(sk.s, sk.s), KeyTag::relin, 0);
}

SwitchingKey Evaluator::rotation_key(const SecretKey& sk, int k) {
    u64 g = rotation_galois(k, ctx_->n());
    return make_switching_key(sk, automorph_galois(sk.s, g), KeyTag::rotation, g);
}

SwitchingKey Evaluator::conjugation_key(const SecretKey& sk) {
    u64 g = conjugation_galois(ctx_->n());
    return make_switching_key(sk, automorph_galois(sk.s, g), KeyTag::conjugation, g);
}

KeySet Evaluator::keygen(const SecretKey& sk, const std::vector<int>& rotations, bool conjugation) {
    KeySet ks;
    ks.relin = relin_key(sk);
    for (int r : rotations) {
        u64 g = rotation_galois(r, ctx_->n());
        if (g == 1 || ks.galois.count(g)) continue;
        ks.galois.emplace(g, rotation_key(sk, r));
    }
    if (conjugation) ks.galois.emplace(conjugation_galois(ctx_->n()), conjugation_key(sk));
    return ks;
}

Plaintext Evaluator::encode(const std::vector<cplx>& v, int level, double scale) const {
    if (level < 0 || level > ctx_->params().L) throw std::invalid_argument("encode: level out of range");
    std::vector<cplx> z(ctx_->slots(), cplx(0, 0));
    if (v.size() > z.size()) throw std::invalid_argument("encode: too many values");
    // fewer values than slots are repeated periodically
    if (!v.empty()) {
        if (z.size() % v.size()) throw std::invalid_argument("encode: value count must divide the slot count");
        for (std::size_t i = 0; i < z.size(); ++i) z[i] = v[i % v.size()];
    }
    auto c = enc_.embed_inverse(z);
    for (auto& x : c) x *= scale;
    return {coeffs_to_poly(c, ctx_->level_basis(level)), level, scale};
}

Plaintext Evaluator::encode_raised(const std::vector<cplx>& v, int level, double scale) const {
    if (v.size() != ctx_->slots()) throw std::invalid_argument("encode_raised: need one value per slot");
    auto c = enc_.embed_inverse(v);
    for (auto& x : c) x *= scale;
    return {coeffs_to_poly(c, ctx_->raised_basis(level)), level, scale};
}

Plaintext Evaluator::encode_const(cplx v, int level, double scale) const {
    std::vector<double> c(ctx_->n(), 0.0);
    c[0] = v.real() * scale;
    c[ctx_->slots()] = v.imag() * scale;  // X^(N/2) evaluates to i in every slot
    return {coeffs_to_poly(c, ctx_->level_basis(level)), level, scale};
}

std::vector<cplx> Evaluator::decode(const Plaintext& p) const {
    RnsPoly c = p.poly;
    if (c.rep == Rep::evaluation) intt_inplace(c);
    // centered lift from q0 alone; valid while |coefficient| < q0/2
    const Modulus& m = c.basis.mod(0);
    std::vector<double> x(c.n);
    for (std::size_t t = 0; t < c.n; ++t) {
        u64 v = c.limb(0)[t];
        double d = v > m.q / 2 ? -static_cast<double>(m.q - v) : static_cast<double>(v);
        x[t] = d / p.scale;
    }
    return enc_.embed(x);
}

Ciphertext Evaluator::encrypt(const Plaintext& p, const SecretKey& sk) {
    RnsBasis b = ctx_->level_basis(p.level);
    Ciphertext c;
    c.level = p.level;
    c.scale = p.scale;
    c.a = sample_uniform(b);
    c.b = sample_error(b);
    c.b = fhelab::sub(c.b, mul(c.a, drop_limbs(sk.s, b.size())));
    add_inplace(c.b, p.poly);
    return c;
}

Plaintext Evaluator::decrypt(const Ciphertext& c, const SecretKey& sk) const {
    RnsPoly m = mul(c.a, drop_limbs(sk.s, c.a.limbs()));
    add_inplace(m, c.b);
    return {std::move(m), c.level, c.scale};
}

Ciphertext Evaluator::pt_add(const Ciphertext& c, const Plaintext& p) const {
    require_level(c, p);
    if (std::fabs(c.scale / p.scale - 1) > kScaleMatchTol) throw std::invalid_argument("pt_add: scale mismatch");
    Ciphertext r = c;
    add_inplace(r.b, p.poly);
    return r;
}

Ciphertext Evaluator::add(const Ciphertext& x, const Ciphertext& y) const {
    if (x.level != y.level) {
        int l = std::min(x.level, y.level);
        return add(drop_to_level(x, l), drop_to_level(y, l));
    }
    if (std::fabs(x.scale / y.scale - 1) > kScaleMatchTol) throw std::invalid_argument("add: scale mismatch");
    Ciphertext r = x;
    add_inplace(r.a, y.a);
    add_inplace(r.b, y.b);
    return r;
}

Ciphertext Evaluator::sub(const Ciphertext& x, const Ciphertext& y) const {
    if (x.level != y.level) {
        int l = std::min(x.level, y.level);
        return sub(drop_to_level(x, l), drop_to_level(y, l));
    }
    if (std::fabs(x.scale / y.scale - 1) > kScaleMatchTol) throw std::invalid_argument("sub: scale mismatch");
    Ciphertext r = x;
    r.a = fhelab::sub(x.a, y.a);
    r.b = fhelab::sub(x.b, y.b);
    return r;
}

Ciphertext Evaluator::pt_mult_no_rescale(const Ciphertext& c, const Plaintext& p) const {
    require_level(c, p);
    Ciphertext r = c;
    r.a = mul(c.a, p.poly);
    r.b = mul(c.b, p.poly);
    r.scale = c.scale * p.scale;
    return r;
}

Ciphertext Evaluator::pt_mult(const Ciphertext& c, const Plaintext& p) const {
    return rescale(pt_mult_no_rescale(c, p));
}

Ciphertext Evaluator::rescale(const Ciphertext& c) const {
    if (c.level < 1) throw std::invalid_argument("rescale: no level left");
    Ciphertext r;
    const double q = static_cast<double>(c.a.basis.mod(c.a.limbs() - 1).q);
    r.a = mod_down(c.a, std::size_t(1));
    r.b = mod_down(c.b, std::size_t(1));
    r.level = c.level - 1;
    r.scale = c.scale / q;
    return r;
}

Ciphertext Evaluator::drop_to_level(const Ciphertext& c, int level) const {
    if (level > c.level || level < 0) throw std::invalid_argument("drop_to_level: bad level");
    if (level == c.level) return c;
    Ciphertext r;
    r.a = drop_limbs(c.a, level + 1);
    r.b = drop_limbs(c.b, level + 1);
    r.level = level;
    r.scale = c.scale;
    return r;
}

RnsPoly Evaluator::restrict_key(const RnsPoly& key_poly, int level) const {
    const std::size_t lim = level + 1, alpha = ctx_->alpha(), chain = ctx_->chain().size();
    RnsPoly r(ctx_->raised_basis(level), key_poly.n, key_poly.rep);
    std::copy(key_poly.limb(0), key_poly.limb(lim), r.limb(0));
    std::copy(key_poly.limb(chain), key_poly.limb(chain) + alpha * key_poly.n, r.limb(lim));
    return r;
}

std::vector<RnsPoly> Evaluator::modup_digits(const RnsPoly& a, int level) const {
    RnsBasis raised = ctx_->raised_basis(level);
    std::vector<RnsPoly> out;
    for (auto& d : decomp(a, ctx_->alpha())) out.push_back(mod_up_to(d, raised));
    return out;
}

std::pair<RnsPoly, RnsPoly> Evaluator::ksk_inner_prod(const std::vector<RnsPoly>& digits, const SwitchingKey& k,
                                                      int level) const {
    RnsBasis raised = ctx_->raised_basis(level);
    if (digits.empty()) throw std::invalid_argument("ksk_inner_prod: no digits");
    RnsPoly u = mul(digits[0], restrict_key(k.a[0], level));
    RnsPoly v = mul(digits[0], restrict_key(k.b[0], level));
    for (std::size_t j = 1; j < digits.size(); ++j) {
        add_inplace(u, mul(digits[j], restrict_key(k.a[j], level)));
        add_inplace(v, mul(digits[j], restrict_key(k.b[j], level)));
    }
    return {std::move(u), std::move(v)};
}

Ciphertext Evaluator::finish_keyswitch(const RnsPoly& u, const RnsPoly& v, const Ciphertext& tail, int level) const {
    Ciphertext r;
    r.level = level;
    r.scale = tail.scale;
    r.a = mod_down(u, ctx_->alpha());
    r.b = mod_down(v, ctx_->alpha());
    if (tail.a.limbs()) add_inplace(r.a, tail.a);
    add_inplace(r.b, tail.b);
    return r;
}

Ciphertext Evaluator::mult(const Ciphertext& x, const Ciphertext& y, const SwitchingKey& rk) const {
    if (x.level != y.level) {
        int l = std::min(x.level, y.level);
        return mult(drop_to_level(x, l), drop_to_level(y, l), rk);
    }
    if (rk.tag != KeyTag::relin) throw std::invalid_argument("mult: relinearization key expected");
    RnsPoly d2 = mul(x.a, y.a);
    RnsPoly d1 = fhelab::add(mul(x.a, y.b), mul(x.b, y.a));
    RnsPoly d0 = mul(x.b, y.b);
    auto [u, v] = ksk_inner_prod(modup_digits(d2, x.level), rk, x.level);
    Ciphertext tail;
    tail.a = std::move(d1);
    tail.b = std::move(d0);
    tail.scale = x.scale * y.scale;
    return rescale(finish_keyswitch(u, v, tail, x.level));
}

Ciphertext Evaluator::new_mult(const Ciphertext& x, const Ciphertext& y, const SwitchingKey& rk) const {
    if (x.level != y.level) {
        int l = std::min(x.level, y.level);
        return new_mult(drop_to_level(x, l), drop_to_level(y, l), rk);
    }
    if (rk.tag != KeyTag::relin) throw std::invalid_argument("new_mult: relinearization key expected");
    if (x.level < 1) throw std::invalid_argument("new_mult: no level left");
    RnsPoly d2 = mul(x.a, y.a);
    RnsPoly d1 = fhelab::add(mul(x.a, y.b), mul(x.b, y.a));
    RnsPoly d0 = mul(x.b, y.b);
    auto [u, v] = ksk_inner_prod(modup_digits(d2, x.level), rk, x.level);
    add_inplace(u, p_mod_up(d1, ctx_->special()));
    add_inplace(v, p_mod_up(d0, ctx_->special()));
    // one ModDown removes P and the top chain prime together
    std::vector<std::size_t> drop;
    for (std::size_t i = x.level; i < u.limbs(); ++i) drop.push_back(i);
    Ciphertext r;
    r.a = mod_down(u, drop);
    r.b = mod_down(v, drop);
    r.level = x.level - 1;
    r.scale = x.scale * y.scale / static_cast<double>(ctx_->chain().mod(x.level).q);
    return r;
}

std::vector<Ciphertext> Evaluator::hrotate(const Ciphertext& c, const std::vector<const SwitchingKey*>& keys) const {
    std::vector<Ciphertext> out;
    if (keys.empty()) return out;
    auto digits = modup_digits(c.a, c.level);
    for (const SwitchingKey* k : keys) {
        if (k->tag == KeyTag::relin) throw std::invalid_argument("hrotate: galois key expected");
        std::vector<RnsPoly> rd;
        rd.reserve(digits.size());
        for (auto& d : digits) rd.push_back(automorph_galois(d, k->galois));
        auto [u, v] = ksk_inner_prod(rd, *k, c.level);
        Ciphertext tail;
        tail.b = automorph_galois(c.b, k->galois);
        tail.scale = c.scale;
        out.push_back(finish_keyswitch(u, v, tail, c.level));
    }
    return out;
}

Ciphertext Evaluator::rotate(const Ciphertext& c, int k, const SwitchingKey& key) const {
    if (key.galois != rotation_galois(k, ctx_->n())) throw std::invalid_argument("rotate: key does not match amount");
    return hrotate(c, {&key})[0];
}

Ciphertext Evaluator::conjugate(const Ciphertext& c, const SwitchingKey& key) const {
    if (key.galois != conjugation_galois(ctx_->n())) throw std::invalid_argument("conjugate: wrong key");
    return hrotate(c, {&key})[0];
}

Ciphertext Evaluator::mult_const_no_rescale(const Ciphertext& c, cplx v, double pt_scale) const {
    return pt_mult_no_rescale(c, encode_const(v, c.level, pt_scale));
}

Ciphertext Evaluator::mult_const(const Ciphertext& c, cplx v) const {
    // plaintext scale = the prime that rescale removes, so the scale is unchanged
    double q = static_cast<double>(ctx_->chain().mod(c.level).q);
    Ciphertext r = rescale(mult_const_no_rescale(c, v, q));
    r.scale = c.scale;
    return r;
}

Ciphertext Evaluator::add_const(const Ciphertext& c, cplx v) const {
    Ciphertext r = c;
    add_inplace(r.b, encode_const(v, c.level, c.scale).poly);
    return r;
}

Ciphertext Evaluator::mult_i(const Ciphertext& c, int power) const {
    power = ((power % 4) + 4) % 4;
    if (power == 0) return c;
    Ciphertext r = c;
    if (power == 2) {
        r.a = neg(c.a);
        r.b = neg(c.b);
        return r;
    }
    // X^(N/2) in evaluation form
    RnsPoly mono(c.a.basis, c.a.n, Rep::coefficient);
    for (std::size_t l = 0; l < mono.limbs(); ++l)
        mono.limb(l)[ctx_->slots()] = power == 1 ? 1 : mono.basis.mod(l).q - 1;
    ntt_inplace(mono);
    r.a = mul(c.a, mono);
    r.b = mul(c.b, mono);
    return r;
}

}  // namespace fhelab
