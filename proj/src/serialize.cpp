#include "fhelab/serialize.hpp"

#include <bit>
#include <cstring>
#include <stdexcept>

namespace fhelab {

namespace {

class Writer {
public:
    void u8(std::uint8_t v) { out.push_back(v); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64v(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f64(double d) { u64v(std::bit_cast<std::uint64_t>(d)); }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        out.insert(out.end(), s.begin(), s.end());
    }
    void header(BlobKind k, std::uint64_t hash) {
        out.insert(out.end(), {'F', 'H', 'L', 'B'});
        u32(kFormatVersion);
        u32(static_cast<std::uint32_t>(k));
        u64v(hash);
    }
    void poly(const RnsPoly& p) {
        u32(static_cast<std::uint32_t>(p.limbs()));
        u32(static_cast<std::uint32_t>(p.n));
        u8(p.rep == Rep::evaluation ? 1 : 0);
        for (std::size_t i = 0; i < p.limbs(); ++i) u64v(p.basis.mod(i).q);
        for (u64 v : p.data) u64v(v);
    }
    Bytes out;
};

class Reader {
public:
    explicit Reader(const Bytes& b) : b_(b) {}
    std::uint8_t u8() {
        need(1);
        return b_[pos_++];
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(b_[pos_++]) << (8 * i);
        return v;
    }
    std::uint64_t u64v() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(b_[pos_++]) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64v()); }
    std::string str() {
        std::uint32_t n = u32();
        need(n);
        std::string s(b_.begin() + pos_, b_.begin() + pos_ + n);
        pos_ += n;
        return s;
    }
    void header(BlobKind k, std::uint64_t hash, bool check_hash = true) {
        need(4);
        if (std::memcmp(b_.data(), "FHLB", 4) != 0) throw std::runtime_error("bad magic");
        pos_ = 4;
        if (u32() != kFormatVersion) throw std::runtime_error("unsupported format version");
        if (u32() != static_cast<std::uint32_t>(k)) throw std::runtime_error("unexpected blob kind");
        std::uint64_t h = u64v();
        if (check_hash && h != hash) throw std::runtime_error("parameter hash mismatch");
    }
    // rebuild on the context's primes so NTT tables are shared
    RnsPoly poly(const Context& ctx) {
        std::uint32_t limbs = u32(), n = u32();
        Rep rep = u8() ? Rep::evaluation : Rep::coefficient;
        if (n != ctx.n()) throw std::runtime_error("ring degree mismatch");
        const RnsBasis& kb = ctx.key_basis();
        RnsBasis b;
        for (std::uint32_t i = 0; i < limbs; ++i) {
            u64 q = u64v();
            bool found = false;
            for (auto& pr : kb.primes)
                if (pr->mod.q == q) {
                    b.primes.push_back(pr);
                    found = true;
                    break;
                }
            if (!found) throw std::runtime_error("modulus not in context");
        }
        RnsPoly p(b, n, rep);
        for (auto& v : p.data) v = u64v();
        for (std::size_t l = 0; l < limbs; ++l)
            for (std::size_t t = 0; t < n; ++t)
                if (p.limb(l)[t] >= b.mod(l).q) throw std::runtime_error("residue out of range");
        return p;
    }
    void finish() const {
        if (pos_ != b_.size()) throw std::runtime_error("trailing bytes");
    }

private:
    void need(std::size_t k) const {
        if (pos_ + k > b_.size()) throw std::runtime_error("truncated blob");
    }
    const Bytes& b_;
    std::size_t pos_ = 0;
};

}  // namespace

Bytes serialize_params(const CkksParams& p) {
    Writer w;
    w.header(BlobKind::params, p.hash());
    w.u32(static_cast<std::uint32_t>(p.log_n));
    w.u32(static_cast<std::uint32_t>(p.L));
    w.u32(static_cast<std::uint32_t>(p.dnum));
    w.f64(p.delta);
    w.u32(static_cast<std::uint32_t>(p.q0_bits));
    w.u32(static_cast<std::uint32_t>(p.special_bits));
    w.u32(static_cast<std::uint32_t>(p.hamming_weight));
    w.f64(p.sigma);
    w.str(p.security_label);
    return w.out;
}

CkksParams deserialize_params(const Bytes& b) {
    Reader r(b);
    r.header(BlobKind::params, 0, false);
    CkksParams p;
    p.log_n = r.u32();
    p.L = static_cast<int>(r.u32());
    p.dnum = static_cast<int>(r.u32());
    p.delta = r.f64();
    p.q0_bits = static_cast<int>(r.u32());
    p.special_bits = static_cast<int>(r.u32());
    p.hamming_weight = static_cast<int>(r.u32());
    p.sigma = r.f64();
    p.security_label = r.str();
    r.finish();
    return p;
}

Bytes serialize_ciphertext(const Ciphertext& c, const CkksParams& p) {
    Writer w;
    w.header(BlobKind::ciphertext, p.hash());
    w.u32(static_cast<std::uint32_t>(c.level));
    w.f64(c.scale);
    w.poly(c.a);
    w.poly(c.b);
    return w.out;
}

Ciphertext deserialize_ciphertext(const Bytes& b, const Context& ctx) {
    Reader r(b);
    r.header(BlobKind::ciphertext, ctx.params().hash());
    Ciphertext c;
    c.level = static_cast<int>(r.u32());
    c.scale = r.f64();
    c.a = r.poly(ctx);
    c.b = r.poly(ctx);
    r.finish();
    if (c.a.limbs() != static_cast<std::size_t>(c.level) + 1 || c.b.limbs() != c.a.limbs())
        throw std::runtime_error("ciphertext level does not match limb count");
    return c;
}

Bytes serialize_key(const SwitchingKey& k, const CkksParams& p) {
    Writer w;
    w.header(BlobKind::switching_key, p.hash());
    w.u32(static_cast<std::uint32_t>(k.tag));
    w.u64v(k.galois);
    w.u8(k.seed ? 1 : 0);
    if (k.seed) w.out.insert(w.out.end(), k.seed->begin(), k.seed->end());
    w.u32(static_cast<std::uint32_t>(k.a.size()));
    for (std::size_t j = 0; j < k.a.size(); ++j) {
        w.poly(k.a[j]);
        w.poly(k.b[j]);
    }
    return w.out;
}

SwitchingKey deserialize_key(const Bytes& b, const Context& ctx) {
    Reader r(b);
    r.header(BlobKind::switching_key, ctx.params().hash());
    SwitchingKey k;
    k.tag = static_cast<KeyTag>(r.u32());
    k.galois = r.u64v();
    if (r.u8()) {
        std::array<unsigned char, 32> s{};
        for (auto& c : s) c = r.u8();
        k.seed = s;
    }
    std::uint32_t rows = r.u32();
    for (std::uint32_t j = 0; j < rows; ++j) {
        k.a.push_back(r.poly(ctx));
        k.b.push_back(r.poly(ctx));
    }
    r.finish();
    return k;
}

Bytes serialize_key(const CompressedSwitchingKey& k, const CkksParams& p) {
    Writer w;
    w.header(BlobKind::compressed_key, p.hash());
    w.u32(static_cast<std::uint32_t>(k.tag));
    w.u64v(k.galois);
    w.out.insert(w.out.end(), k.seed.begin(), k.seed.end());
    w.u32(static_cast<std::uint32_t>(k.b.size()));
    for (auto& p2 : k.b) w.poly(p2);
    return w.out;
}

CompressedSwitchingKey deserialize_compressed_key(const Bytes& b, const Context& ctx) {
    Reader r(b);
    r.header(BlobKind::compressed_key, ctx.params().hash());
    CompressedSwitchingKey k;
    k.tag = static_cast<KeyTag>(r.u32());
    k.galois = r.u64v();
    for (auto& c : k.seed) c = r.u8();
    std::uint32_t rows = r.u32();
    for (std::uint32_t j = 0; j < rows; ++j) k.b.push_back(r.poly(ctx));
    r.finish();
    return k;
}

}  // namespace fhelab
