#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "fhelab/apps.hpp"
#include "fhelab/cost.hpp"

using namespace fhelab;

namespace {

constexpr double kIpRelTol = 0x1p-10;
constexpr double kOneStepTol = 0x1p-8;
constexpr double kTrainTol = 0x1p-6;

CkksParams params(int log_n, int L, int dnum, double delta, int h = 0) {
    CkksParams p;
    p.log_n = log_n;
    p.L = L;
    p.dnum = dnum;
    p.delta = delta;
    p.hamming_weight = h;
    return p;
}

std::vector<cplx> random_vec(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> d(-1, 1);
    std::vector<cplx> v(n);
    for (auto& x : v) x = {d(rng), d(rng)};
    return v;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double e = 0;
    for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, std::fabs(a[i] - b[i]));
    return e;
}

// LR context shared by the encrypted cases: one bootstrap leaves room for three iterations
struct LrFixture {
    std::shared_ptr<Context> ctx;
    Evaluator ev;
    SecretKey sk;
    Bootstrapper bs;
    KeySet keys;
    Dataset data;
    LrFixture()
        : ctx(std::make_shared<Context>(params(12, 30, 3, 0x1p50, 32))),
          ev(ctx, 21),
          sk(ev.keygen_secret()),
          bs(ctx, BootstrapParams::toy()),
          data(make_blobs(8, 4, 5)) {
        auto rots = bs.rotations();
        auto extra = EncryptedLr::rotations(8, 4);
        rots.insert(rots.end(), extra.begin(), extra.end());
        keys = ev.keygen(sk, rots, true);
    }
};

LrFixture& lr_fixture() {
    static LrFixture f;
    return f;
}

}  // namespace

TEST_CASE("merged inner product against the plaintext dot product") {
    auto ctx = std::make_shared<Context>(params(12, 4, 2, 0x1p40));
    Evaluator ev(ctx, 3);
    auto sk = ev.keygen_secret();
    auto rk = ev.relin_key(sk);
    std::mt19937_64 rng(2);
    const std::size_t k = 5, n = ctx->slots();
    std::vector<std::vector<cplx>> x(k), y(k);
    std::vector<Ciphertext> cx, cy;
    for (std::size_t i = 0; i < k; ++i) {
        x[i] = random_vec(n, rng);
        y[i] = random_vec(n, rng);
        cx.push_back(ev.encrypt(ev.encode(x[i], 4, 0x1p40), sk));
        cy.push_back(ev.encrypt(ev.encode(y[i], 4, 0x1p40), sk));
    }
    auto r = inner_product(ev, cx, cy, rk);
    CHECK(r.level == 3);
    auto got = ev.decode(ev.decrypt(r, sk));
    double err = 0, mag = 0;
    for (std::size_t s = 0; s < n; ++s) {
        cplx want = 0;
        for (std::size_t i = 0; i < k; ++i) want += x[i][s] * y[i][s];
        err = std::max(err, std::abs(got[s] - want));
        mag = std::max(mag, std::abs(want));
    }
    CHECK(err / mag < kIpRelTol);

    // selector: y = (1, 0, 0, ...) picks x_0
    std::vector<Ciphertext> sel;
    for (std::size_t i = 0; i < k; ++i)
        sel.push_back(ev.encrypt(ev.encode(std::vector<cplx>(n, i == 0 ? 1.0 : 0.0), 4, 0x1p40), sk));
    auto picked = ev.decode(ev.decrypt(inner_product(ev, cx, sel, rk), sk));
    double e2 = 0;
    for (std::size_t s = 0; s < n; ++s) e2 = std::max(e2, std::abs(picked[s] - x[0][s]));
    CHECK(e2 < 1e-6);

    // same value as summing separate multiplications
    Ciphertext sum = ev.mult(cx[0], cy[0], rk);
    for (std::size_t i = 1; i < k; ++i) sum = ev.add(sum, ev.mult(cx[i], cy[i], rk));
    auto ref = ev.decode(ev.decrypt(sum, sk));
    double e3 = 0;
    for (std::size_t s = 0; s < n; ++s) e3 = std::max(e3, std::abs(ref[s] - got[s]));
    CHECK(e3 < 1e-6);

    CHECK_THROWS(inner_product(ev, cx, {cy[0]}, rk));
    CHECK_THROWS(inner_product(ev, {}, {}, rk));
}

TEST_CASE("csv ingestion") {
    std::istringstream in("a,b,label\n1.5,2,1\n-1,0.25,0\n\n");
    auto d = read_csv(in);
    CHECK(d.samples() == 2);
    CHECK(d.features() == 2);
    CHECK(d.header == std::vector<std::string>{"a", "b"});
    CHECK(d.y == std::vector<double>{1, -1});
    CHECK(d.x[1][1] == 0.25);
    std::istringstream bad("a,label\nx,1\n");
    CHECK_THROWS(read_csv(bad));
    std::istringstream ragged("a,label\n1\n");
    CHECK_THROWS(read_csv(ragged));
    std::istringstream nolabel("a,b\n1,2\n");
    CHECK_THROWS(read_csv(nolabel));
}

TEST_CASE("plaintext trainer lowers the loss") {
    auto d = make_blobs(8, 4, 5);
    LrConfig c;
    auto ws = lr_train_plain(d, c);
    REQUIRE(ws.size() == 7);
    auto exact = lr_train_plain(d, c, {}, true);
    for (std::size_t i = 1; i < ws.size(); ++i) {
        CHECK(lr_loss(d, ws[i]) < lr_loss(d, ws[i - 1]));
        CHECK(lr_loss(d, exact[i]) < lr_loss(d, exact[i - 1]));
    }
    // the cubic fit trains at least as well as the true sigmoid here
    CHECK(lr_loss(d, ws.back()) <= 1.05 * lr_loss(d, exact.back()));
    c.iterations = 0;
    CHECK(lr_train_plain(d, c).size() == 1);
}

TEST_CASE("one encrypted iteration tracks the plaintext trainer") {
    auto& f = lr_fixture();
    LrConfig c;
    c.iterations = 1;
    EncryptedLr lr(f.ev, f.bs, f.keys, c);
    std::vector<double> w0{0.1, -0.2, 0.3, 0.05};
    auto s = lr.init(f.data, f.sk, f.ev, w0, f.ctx->params().L);
    auto s1 = lr.iteration(s);
    CHECK(s1.w.level == s.w.level - EncryptedLr::iteration_depth());
    auto want = lr_train_plain(f.data, c, w0).back();
    CHECK(max_diff(lr.weights(s1, f.sk), want) < kOneStepTol);

    // lr = 0 leaves the weights alone
    LrConfig z = c;
    z.lr = 0;
    EncryptedLr frozen(f.ev, f.bs, f.keys, z);
    auto s0 = frozen.iteration(frozen.init(f.data, f.sk, f.ev, w0, f.ctx->params().L));
    CHECK(max_diff(frozen.weights(s0, f.sk), w0) < 1e-6);
}

TEST_CASE("six encrypted iterations with two bootstraps") {
    auto& f = lr_fixture();
    LrConfig c;
    EncryptedLr lr(f.ev, f.bs, f.keys, c);
    CHECK(f.bs.level_out() == 3 * EncryptedLr::iteration_depth());
    auto s = lr.init(f.data, f.sk, f.ev);
    auto plain = lr_train_plain(f.data, c);
    double worst = 0;
    for (int it = 1; it <= c.iterations; ++it) {
        s = lr.step(s);
        worst = std::max(worst, max_diff(lr.weights(s, f.sk), plain[it]));
    }
    MESSAGE("lr: " << s.bootstraps << " bootstraps, max weight error 2^" << std::log2(worst));
    CHECK(s.iteration == 6);
    CHECK(s.bootstraps == 2);
    CHECK(worst < kTrainTol);
}

TEST_CASE("shared rotations cut inner-product traffic") {
    ModelParams p;
    p.L = 40;
    p.dnum = 2;
    p.fft_iters = 6;
    CostModel m(p, OptimizationSet::all());
    auto shared = m.parallel_inner_products(19, 4, true), alone = m.parallel_inner_products(19, 4, false);
    double gb_s = shared.r + shared.w + shared.k, gb_a = alone.r + alone.w + alone.k;
    CHECK(gb_s < 0.75 * gb_a);
}
