#pragma once

#include <array>
#include <complex>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fhelab/rns.hpp"

namespace fhelab {

using cplx = std::complex<double>;

struct CkksParams {
    std::size_t log_n = 12;
    int L = 8;              // chain has L+1 primes
    int dnum = 3;
    double delta = 0x1p40;  // scale and target size of the rescale primes
    int q0_bits = 60;       // first prime (decryption headroom)
    int special_bits = 61;  // primes of P
    int hamming_weight = 0; // 0 = dense uniform ternary
    double sigma = 3.2;
    std::string security_label = "toy (no security claim)";

    std::size_t ring_degree() const { return std::size_t(1) << log_n; }
    std::size_t slots() const { return ring_degree() / 2; }
    std::size_t alpha() const { return (L + 1 + dnum - 1) / dnum; }
    std::uint64_t hash() const;
};

class Context {
public:
    explicit Context(const CkksParams& p);

    const CkksParams& params() const { return params_; }
    std::size_t n() const { return params_.ring_degree(); }
    std::size_t slots() const { return params_.slots(); }
    std::size_t alpha() const { return params_.alpha(); }
    const RnsBasis& chain() const { return chain_; }
    const RnsBasis& special() const { return special_; }
    RnsBasis level_basis(int level) const { return chain_.slice(0, level + 1); }
    RnsBasis raised_basis(int level) const { return level_basis(level).concat(special_); }
    // full key basis: whole chain then P
    const RnsBasis& key_basis() const { return key_basis_; }
    std::size_t beta(int level) const { return (level + 1 + alpha() - 1) / alpha(); }

private:
    CkksParams params_;
    RnsBasis chain_, special_, key_basis_;
};

struct Plaintext {
    RnsPoly poly;  // evaluation representation
    int level = 0;
    double scale = 1;
};

struct Ciphertext {
    RnsPoly a, b;  // decrypts to b + a*s
    int level = 0;
    double scale = 1;
};

struct SecretKey {
    std::vector<i64> coeffs;  // ternary
    RnsPoly s;                // on the key basis, evaluation form
    int hamming_weight = 0;
};

enum class KeyTag : std::uint32_t { relin = 0, rotation = 1, conjugation = 2 };

struct SwitchingKey {
    KeyTag tag = KeyTag::relin;
    std::uint64_t galois = 0;
    std::vector<RnsPoly> a;  // random row, dnum entries on the key basis
    std::vector<RnsPoly> b;
    std::optional<std::array<unsigned char, 32>> seed;  // set when a was expanded from a seed
    bool operator==(const SwitchingKey& o) const { return tag == o.tag && galois == o.galois && a == o.a && b == o.b; }
};

struct CompressedSwitchingKey {
    KeyTag tag = KeyTag::relin;
    std::uint64_t galois = 0;
    std::array<unsigned char, 32> seed{};
    std::vector<RnsPoly> b;
};

// Uniform polynomial on `basis` (evaluation form) expanded from a 32-byte seed
// with the ChaCha20 (RFC 8439) keystream. Nonce = (row, limb index).
RnsPoly expand_uniform(const std::array<unsigned char, 32>& seed, std::uint32_t row, const RnsBasis& basis,
                       std::size_t n);

class Encoder {
public:
    explicit Encoder(std::size_t n);
    // slots -> w with z = special_fft(w)
    void special_fft(std::vector<cplx>& v) const;
    void special_ifft(std::vector<cplx>& v) const;
    std::vector<double> embed_inverse(const std::vector<cplx>& z) const;  // length N coefficients
    std::vector<cplx> embed(const std::vector<double>& coeffs) const;
    std::size_t slots() const { return slots_; }
    const std::vector<std::uint64_t>& rot_group() const { return rot_group_; }
    cplx ksi(std::size_t k) const { return ksi_[k % (4 * slots_)]; }

private:
    std::size_t slots_;
    std::vector<std::uint64_t> rot_group_;
    std::vector<cplx> ksi_;
};

struct KeySet {
    std::optional<SwitchingKey> relin;
    std::map<std::uint64_t, SwitchingKey> galois;  // keyed by galois element
};

class Evaluator {
public:
    Evaluator(std::shared_ptr<const Context> ctx, std::uint64_t seed = 1);

    const Context& context() const { return *ctx_; }
    const Encoder& encoder() const { return enc_; }

    // keys
    SecretKey keygen_secret();
    // a is expanded from a fresh seed unless `seeded` is false
    SwitchingKey make_switching_key(const SecretKey& sk, const RnsPoly& source, KeyTag tag, std::uint64_t galois,
                                    bool seeded = true);
    static CompressedSwitchingKey compress_key(const SwitchingKey& k);
    SwitchingKey relin_key(const SecretKey& sk);
    SwitchingKey rotation_key(const SecretKey& sk, int k);
    SwitchingKey conjugation_key(const SecretKey& sk);
    SwitchingKey expand_key(const CompressedSwitchingKey& ck) const;
    KeySet keygen(const SecretKey& sk, const std::vector<int>& rotations, bool conjugation);

    // encoding
    Plaintext encode(const std::vector<cplx>& v, int level, double scale) const;
    Plaintext encode_raised(const std::vector<cplx>& v, int level, double scale) const;
    std::vector<cplx> decode(const Plaintext& p) const;
    Plaintext encode_const(cplx c, int level, double scale) const;

    Ciphertext encrypt(const Plaintext& p, const SecretKey& sk);
    Plaintext decrypt(const Ciphertext& c, const SecretKey& sk) const;

    // API
    Ciphertext pt_add(const Ciphertext& c, const Plaintext& p) const;
    Ciphertext add(const Ciphertext& x, const Ciphertext& y) const;
    Ciphertext sub(const Ciphertext& x, const Ciphertext& y) const;
    Ciphertext pt_mult(const Ciphertext& c, const Plaintext& p) const;  // rescales
    Ciphertext pt_mult_no_rescale(const Ciphertext& c, const Plaintext& p) const;
    Ciphertext mult(const Ciphertext& x, const Ciphertext& y, const SwitchingKey& rk) const;
    Ciphertext new_mult(const Ciphertext& x, const Ciphertext& y, const SwitchingKey& rk) const;
    Ciphertext rotate(const Ciphertext& c, int k, const SwitchingKey& key) const;
    Ciphertext conjugate(const Ciphertext& c, const SwitchingKey& key) const;
    std::vector<Ciphertext> hrotate(const Ciphertext& c, const std::vector<const SwitchingKey*>& keys) const;
    Ciphertext rescale(const Ciphertext& c) const;

    // helpers used by the pipelines
    Ciphertext mult_const(const Ciphertext& c, cplx v) const;           // consumes a level
    Ciphertext mult_const_no_rescale(const Ciphertext& c, cplx v, double pt_scale) const;
    Ciphertext add_const(const Ciphertext& c, cplx v) const;
    Ciphertext mult_i(const Ciphertext& c, int power = 1) const;        // times i^power, exact
    Ciphertext drop_to_level(const Ciphertext& c, int level) const;
    Ciphertext set_scale(Ciphertext c, double s) const { c.scale = s; return c; }

    // key switching internals (exposed for tests and the bootstrap matvec)
    std::vector<RnsPoly> modup_digits(const RnsPoly& a, int level) const;
    std::pair<RnsPoly, RnsPoly> ksk_inner_prod(const std::vector<RnsPoly>& digits, const SwitchingKey& k,
                                               int level) const;
    RnsPoly restrict_key(const RnsPoly& key_poly, int level) const;
    static std::uint64_t rotation_galois(int k, std::size_t n);
    static std::uint64_t conjugation_galois(std::size_t n) { return 2 * n - 1; }

    std::mt19937_64& rng() { return rng_; }

private:
    RnsPoly sample_uniform(const RnsBasis& b);
    RnsPoly sample_error(const RnsBasis& b);
    std::vector<u64> gadget_factor(std::size_t digit, const RnsBasis& b) const;
    Ciphertext finish_keyswitch(const RnsPoly& u, const RnsPoly& v, const Ciphertext& tail, int level) const;

    std::shared_ptr<const Context> ctx_;
    Encoder enc_;
    std::mt19937_64 rng_;
};

constexpr double kScaleMatchTol = 0x1p-20;

}  // namespace fhelab
