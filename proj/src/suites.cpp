#include "fhelab/suites.hpp"

#include <boost/multiprecision/cpp_int.hpp>
#include <bit>
#include <chrono>
#include <cmath>
#include <fmt/format.h>
#include <random>
#include <set>

namespace fhelab {

namespace {

using boost::multiprecision::cpp_int;
using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

RnsBasis make_basis(std::size_t n, int count, int bits, std::set<u64>& taken) {
    RnsBasis b;
    for (int i = 0; i < count; ++i) {
        Modulus m = gen_ntt_prime(bits, n, taken);
        taken.insert(m.q);
        b.primes.push_back(std::make_shared<const NttTables>(m, n));
    }
    return b;
}

RnsPoly random_poly(const RnsBasis& b, std::size_t n, std::mt19937_64& rng) {
    RnsPoly p(b, n, Rep::coefficient);
    for (std::size_t l = 0; l < b.size(); ++l)
        for (std::size_t t = 0; t < n; ++t) p.limb(l)[t] = rng() % b.mod(l).q;
    return p;
}

cpp_int product(const RnsBasis& b) {
    cpp_int q = 1;
    for (std::size_t i = 0; i < b.size(); ++i) q *= b.mod(i).q;
    return q;
}

cpp_int crt(const RnsPoly& p, std::size_t t) {
    cpp_int Q = product(p.basis), x = 0;
    for (std::size_t i = 0; i < p.limbs(); ++i) {
        const Modulus& m = p.basis.mod(i);
        cpp_int qh = Q / m.q;
        u64 inv = mod_inv(static_cast<u64>(qh % m.q), m);
        x += qh * cpp_int(mod_mul_barrett(p.limb(i)[t], inv, m));
    }
    return x % Q;
}

cpp_int centered(cpp_int x, const cpp_int& Q) {
    x %= Q;
    if (x < 0) x += Q;
    if (x > Q / 2) x -= Q;
    return x;
}

std::vector<cplx> random_vec(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> d(-1, 1);
    std::vector<cplx> v(n);
    for (auto& x : v) x = {d(rng), d(rng)};
    return v;
}

double max_err(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    double e = 0;
    for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, std::abs(a[i] - b[i]));
    return e;
}

double rel_err(const std::vector<cplx>& got, const std::vector<cplx>& want) {
    double m = 0;
    for (auto& w : want) m = std::max(m, std::abs(w));
    return max_err(got, want) / (m > 0 ? m : 1);
}

CheckResult result(std::string id, std::string name, double value, double bound, bool pass, Clock::time_point t0,
                   std::string detail = {}) {
    return {std::move(id), std::move(name), value, bound, pass, since(t0), std::move(detail)};
}

}  // namespace

CheckResult check_modmul(std::uint64_t seed, std::size_t cases) {
    auto t0 = Clock::now();
    std::mt19937_64 rng(seed);
    const std::vector<u64> qs = {0x3fffffffffffffc5ULL >> 1, 1152921504606584833ULL, 65537, 12289, 3};
    std::size_t mismatches = 0, done = 0;
    for (std::size_t k = 0; k < qs.size(); ++k) {
        Modulus m(qs[k]);
        std::uniform_int_distribution<u64> d(0, m.q - 1);
        const std::size_t count = cases / qs.size() + (k < cases % qs.size() ? 1 : 0);
        for (std::size_t i = 0; i < count; ++i) {
            u64 a = d(rng), b = d(rng);
            u64 want = static_cast<u64>(static_cast<u128>(a) * b % m.q);
            mismatches += mod_mul_barrett(a, b, m) != want;
            mismatches += mod_mul_shoup(a, make_shoup(b, m), m) != want;
            ++done;
        }
    }
    return result("modmul", "Barrett/Shoup vs 128-bit oracle", static_cast<double>(mismatches), 0,
                  mismatches == 0 && done == cases, t0, fmt::format("{} cases, {} mismatches", done, mismatches));
}

CheckResult check_ntt_convolution(std::uint64_t seed) {
    auto t0 = Clock::now();
    std::set<u64> taken;
    std::mt19937_64 rng(seed);
    const std::size_t n = 8;
    auto b = make_basis(n, 2, 30, taken);
    std::size_t bad = 0;
    for (int trial = 0; trial < 50; ++trial) {
        auto x = random_poly(b, n, rng), y = random_poly(b, n, rng);
        auto z = intt(mul(ntt(x), ntt(y)));
        for (std::size_t l = 0; l < b.size(); ++l) {
            const Modulus& m = b.mod(l);
            std::vector<u64> ref(n, 0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    u64 pr = mod_mul_barrett(x.limb(l)[i], y.limb(l)[j], m);
                    if (i + j < n) ref[i + j] = mod_add(ref[i + j], pr, m);
                    else ref[i + j - n] = mod_sub(ref[i + j - n], pr, m);
                }
            for (std::size_t k = 0; k < n; ++k) bad += z.limb(l)[k] != ref[k];
        }
    }
    return result("ntt", "NTT product vs O(N^2) negacyclic convolution, N=8", static_cast<double>(bad), 0, bad == 0,
                  t0, fmt::format("50 trials x 2 limbs, {} coefficient mismatches", bad));
}

CheckResult check_basis_conversion(std::uint64_t seed) {
    auto t0 = Clock::now();
    std::set<u64> taken;
    std::mt19937_64 rng(seed);
    const std::size_t n = 16;
    auto src = make_basis(n, 3, 40, taken);
    auto dst = make_basis(n, 2, 45, taken);
    cpp_int Q = product(src);
    std::size_t bad = 0;
    for (int trial = 0; trial < 20; ++trial) {
        auto p = random_poly(src, n, rng);
        auto c = basis_convert(p, dst);
        for (std::size_t t = 0; t < n; ++t) {
            cpp_int x = crt(p, t);
            bool ok = false;
            for (int u = 0; u < static_cast<int>(src.size()) && !ok; ++u) {
                bool all = true;
                for (std::size_t j = 0; j < dst.size(); ++j)
                    all &= static_cast<u64>((x + u * Q) % dst.mod(j).q) == c.limb(j)[t];
                ok = all;
            }
            bad += !ok;
        }
    }
    return result("bconv", "basis conversion vs big-integer CRT (x + uQ, u < k)", static_cast<double>(bad), 0, bad == 0,
                  t0, fmt::format("{} coefficients off the oracle", bad));
}

CheckResult check_mod_down(std::uint64_t seed) {
    auto t0 = Clock::now();
    std::set<u64> taken;
    std::mt19937_64 rng(seed);
    const std::size_t n = 16;
    auto keep = make_basis(n, 4, 45, taken);
    const double bound = keep.size() / 2.0 + 1;
    double worst = 0;
    for (std::size_t d : {1u, 2u, 3u}) {
        auto drop = make_basis(n, static_cast<int>(d), 50, taken);
        auto x = random_poly(keep.concat(drop), n, rng);
        auto y = mod_down(x, d);
        cpp_int P = product(drop), QP = product(keep) * P;
        for (std::size_t t = 0; t < n; ++t) {
            cpp_int diff = centered(crt(y, t) * P - crt(x, t), QP);
            worst = std::max(worst, std::fabs(diff.convert_to<double>() / P.convert_to<double>()));
        }
    }
    return result("moddown", "ModDown vs round(x/P), |err| <= l/2 + 1", worst, bound, worst <= bound, t0,
                  fmt::format("worst |y - x/P| = {:.3f}", worst));
}

std::vector<CheckResult> check_ckks(std::uint64_t seed, std::size_t log_n) {
    std::vector<CheckResult> out;
    CkksParams p;
    p.log_n = log_n;
    p.L = 3;
    p.dnum = 2;
    p.delta = 0x1p50;
    auto ctx = std::make_shared<Context>(p);
    Evaluator ev(ctx, seed);
    auto sk = ev.keygen_secret();
    std::mt19937_64 rng(seed + 1);
    const std::size_t n = ctx->slots();
    const int L = p.L;
    auto enc = [&](const std::vector<cplx>& v, int level) { return ev.encrypt(ev.encode(v, level, p.delta), sk); };
    auto dec = [&](const Ciphertext& c) { return ev.decode(ev.decrypt(c, sk)); };

    {
        auto t0 = Clock::now();
        auto x = random_vec(n, rng);
        double e = max_err(dec(enc(x, L)), x);
        out.push_back(result("roundtrip", "decode(decrypt(encrypt(encode))) at delta 2^50", e, 0x1p-20, e < 0x1p-20, t0,
                             fmt::format("max slot error 2^{:.2f}", std::log2(e))));
    }

    auto rk = ev.relin_key(sk);
    const std::vector<int> ks = {1, 3, 7, 100};
    std::vector<SwitchingKey> rot;
    for (int k : ks) rot.push_back(ev.rotation_key(sk, k));
    auto ck = ev.conjugation_key(sk);
    auto x = random_vec(n, rng), y = random_vec(n, rng);
    auto cx = enc(x, L), cy = enc(y, L);

    auto oracle = [&](const std::string& id, const std::string& name, const Ciphertext& c,
                      const std::vector<cplx>& want, Clock::time_point t0) {
        double e = rel_err(dec(c), want);
        out.push_back(result(id, name, e, 0x1p-12, e < 0x1p-12, t0, fmt::format("relative error 2^{:.2f}", std::log2(e))));
    };
    {
        auto t0 = Clock::now();
        std::vector<cplx> prod(n);
        for (std::size_t i = 0; i < n; ++i) prod[i] = x[i] * y[i];
        oracle("mult", "Mult vs slotwise product", ev.mult(cx, cy, rk), prod, t0);
    }
    {
        auto t0 = Clock::now();
        std::vector<cplx> ref(n);
        for (std::size_t j = 0; j < n; ++j) ref[(j + 3) % n] = x[j];
        oracle("rotate", "Rotate(3) vs cyclic shift", ev.rotate(cx, 3, rot[1]), ref, t0);
    }
    std::vector<Ciphertext> hs;
    {
        auto t0 = Clock::now();
        std::vector<const SwitchingKey*> ptrs;
        for (auto& k : rot) ptrs.push_back(&k);
        hs = ev.hrotate(cx, ptrs);
        double worst = 0;
        for (std::size_t i = 0; i < ks.size(); ++i) {
            std::vector<cplx> ref(n);
            for (std::size_t j = 0; j < n; ++j) ref[(j + ks[i]) % n] = x[j];
            worst = std::max(worst, rel_err(dec(hs[i]), ref));
        }
        out.push_back(result("hrotate", "HRotate {1,3,7,100} vs cyclic shifts", worst, 0x1p-12, worst < 0x1p-12, t0,
                             fmt::format("relative error 2^{:.2f}", std::log2(worst))));
    }
    {
        auto t0 = Clock::now();
        std::vector<cplx> ref(n);
        for (std::size_t i = 0; i < n; ++i) ref[i] = std::conj(x[i]);
        oracle("conjugate", "Conjugate vs slotwise conjugate", ev.conjugate(cx, ck), ref, t0);
    }
    {
        auto t0 = Clock::now();
        double worst = 0;
        for (int t = 0; t < 100; ++t) {
            auto a = random_vec(n, rng), b = random_vec(n, rng);
            auto ca = enc(a, 1), cb = enc(b, 1);
            worst = std::max(worst, max_err(dec(ev.mult(ca, cb, rk)), dec(ev.new_mult(ca, cb, rk))));
        }
        out.push_back(result("new_mult", "new_mult vs mult on 100 random instances", worst, 0x1p-12, worst < 0x1p-12, t0,
                             fmt::format("worst difference 2^{:.2f}", std::log2(worst))));
    }
    {
        auto t0 = Clock::now();
        std::size_t diff = 0;
        for (std::size_t i = 0; i < ks.size(); ++i) {
            auto single = ev.rotate(cx, ks[i], rot[i]);
            diff += !(single.a == hs[i].a && single.b == hs[i].b);
        }
        out.push_back(result("hrotate_bits", "hrotate bit-identical to per-rotation rotate", static_cast<double>(diff), 0,
                             diff == 0, t0, fmt::format("{} of {} outputs differ", diff, ks.size())));
    }
    {
        auto t0 = Clock::now();
        auto rot2 = ev.expand_key(Evaluator::compress_key(rot[0]));
        auto rk2 = ev.expand_key(Evaluator::compress_key(rk));
        auto a = ev.rotate(cx, 1, rot[0]), b = ev.rotate(cx, 1, rot2);
        auto m1 = ev.mult(cx, cy, rk), m2 = ev.mult(cx, cy, rk2);
        bool same = rot2 == rot[0] && rk2 == rk && a.a == b.a && a.b == b.b && m1.a == m2.a && m1.b == m2.b;
        out.push_back(result("keycomp_bits", "compressed-key execution bit-identical", same ? 0 : 1, 0, same, t0,
                             same ? "keys and outputs identical" : "mismatch"));
    }
    return out;
}

BootstrapRun run_bootstrap(const BootstrapPlan& plan) {
    auto t0 = Clock::now();
    auto ctx = std::make_shared<Context>(plan.ckks);
    Evaluator ev(ctx, plan.seed);
    auto sk = ev.keygen_secret();
    Bootstrapper bs(ctx, plan.bs);
    auto rots = bs.rotations();
    rots.insert(rots.end(), plan.extra_rotations.begin(), plan.extra_rotations.end());
    auto keys = ev.keygen(sk, rots, plan.conjugation);
    std::mt19937_64 rng(plan.message_seed);
    auto x = random_vec(ctx->slots(), rng);
    auto ct = ev.encrypt(ev.encode(x, plan.input_level, plan.ckks.delta), sk);
    auto out = bs.bootstrap(ev, ct, keys);
    BootstrapRun r;
    r.level_in = ct.level;
    r.level_out = out.level;
    r.max_error = max_err(ev.decode(ev.decrypt(out, sk)), x);
    r.galois_keys = keys.galois.size();
    r.seconds = since(t0);
    return r;
}

LrRun run_lr(const LrPlan& plan, const Dataset* data) {
    auto t0 = Clock::now();
    Dataset d = data ? *data : make_blobs(plan.samples, plan.features, plan.data_seed, plan.separation);
    if (d.samples() == 0 || d.features() == 0) throw std::invalid_argument("run_lr: empty dataset");
    // pad to powers of two: zero features keep zero weights, zero samples add no gradient
    // (the step size is rescaled so the mean stays over the real samples)
    const std::size_t n0 = d.samples(), f0 = d.features();
    Dataset padded = d;
    const std::size_t n = std::bit_ceil(n0), f = std::bit_ceil(f0);
    for (auto& row : padded.x) row.resize(f, 0.0);
    padded.x.resize(n, std::vector<double>(f, 0.0));
    padded.y.resize(n, 1.0);
    LrConfig enc_cfg = plan.lr;
    enc_cfg.lr = plan.lr.lr * static_cast<double>(n) / static_cast<double>(n0);

    auto ctx = std::make_shared<Context>(plan.ckks);
    if (n * f > ctx->slots()) throw std::invalid_argument("run_lr: dataset does not fit one ciphertext");
    Evaluator ev(ctx, plan.seed);
    auto sk = ev.keygen_secret();
    Bootstrapper bs(ctx, plan.bs);
    auto rots = bs.rotations();
    auto extra = EncryptedLr::rotations(n, f);
    rots.insert(rots.end(), extra.begin(), extra.end());
    auto keys = ev.keygen(sk, rots, true);
    EncryptedLr lr(ev, bs, keys, enc_cfg);
    auto plain = lr_train_plain(d, plan.lr);

    LrRun run;
    auto s = lr.init(padded, sk, ev);
    auto record = [&](const LrState& st) {
        auto w = lr.weights(st, sk);
        w.resize(f0);
        double e = 0;
        for (std::size_t j = 0; j < f0; ++j) e = std::max(e, std::fabs(w[j] - plain[st.iteration][j]));
        run.rows.push_back({st.iteration, st.bootstraps, st.w.level, lr_loss(d, w), lr_loss(d, plain[st.iteration]), e});
        run.max_weight_error = std::max(run.max_weight_error, e);
    };
    record(s);
    for (int it = 0; it < plan.lr.iterations; ++it) {
        s = lr.step(s);
        record(s);
    }
    run.bootstraps = s.bootstraps;
    run.seconds = since(t0);
    return run;
}

}  // namespace fhelab
