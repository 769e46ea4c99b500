#include "fhelab/bootstrap.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fhelab {

namespace {

constexpr double kPi = std::numbers::pi;

int ceil_log2(std::size_t v) { return v <= 1 ? 0 : std::bit_width(v - 1); }

// baby-step count of the BSGS split
std::size_t baby_steps(std::size_t degree) {
    int k = ceil_log2(degree + 1);
    return std::size_t(1) << std::max(1, (k + 1) / 2);
}

std::vector<double> solve(std::vector<std::vector<double>> a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::fabs(a[r][c]) > std::fabs(a[p][c])) p = r;
        std::swap(a[p], a[c]);
        std::swap(b[p], b[c]);
        if (a[c][c] == 0) throw std::runtime_error("least squares: singular system");
        for (std::size_t r = c + 1; r < n; ++r) {
            double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
            b[r] -= f * b[c];
        }
    }
    std::vector<double> x(n);
    for (std::size_t c = n; c-- > 0;) {
        double s = b[c];
        for (std::size_t k = c + 1; k < n; ++k) s -= a[c][k] * x[k];
        x[c] = s / a[c][c];
    }
    return x;
}

}  // namespace

double Chebyshev::operator()(double x) const {
    if (c.empty()) return 0;
    const double y = (2 * x - a - b) / (b - a);
    // Clenshaw
    double b1 = 0, b2 = 0;
    for (std::size_t k = c.size(); k-- > 1;) {
        double t = 2 * y * b1 - b2 + c[k];
        b2 = b1;
        b1 = t;
    }
    return y * b1 - b2 + c[0];
}

Chebyshev Chebyshev::interpolate(const std::function<double(double)>& f, int degree, double a, double b) {
    if (degree < 0 || !(b > a)) throw std::invalid_argument("Chebyshev::interpolate: bad degree or interval");
    const int n = degree + 1;
    std::vector<double> fx(n), y(n);
    for (int k = 0; k < n; ++k) {
        y[k] = std::cos(kPi * (k + 0.5) / n);
        fx[k] = f(0.5 * (b - a) * y[k] + 0.5 * (a + b));
    }
    Chebyshev p;
    p.a = a;
    p.b = b;
    p.c.assign(n, 0.0);
    for (int j = 0; j < n; ++j) {
        double s = 0;
        for (int k = 0; k < n; ++k) s += fx[k] * std::cos(kPi * j * (k + 0.5) / n);
        p.c[j] = (j == 0 ? 1.0 : 2.0) * s / n;
    }
    return p;
}

Chebyshev Chebyshev::fit(const std::function<double(double)>& f, int degree, double a, double b, int samples) {
    if (degree < 0 || samples <= degree || !(b > a)) throw std::invalid_argument("Chebyshev::fit: bad arguments");
    const std::size_t n = degree + 1;
    std::vector<std::vector<double>> ata(n, std::vector<double>(n, 0.0));
    std::vector<double> atb(n, 0.0), t(n);
    for (int s = 0; s < samples; ++s) {
        double x = a + (b - a) * s / (samples - 1);
        double y = (2 * x - a - b) / (b - a);
        t[0] = 1;
        if (n > 1) t[1] = y;
        for (std::size_t k = 2; k < n; ++k) t[k] = 2 * y * t[k - 1] - t[k - 2];
        double fx = f(x);
        for (std::size_t i = 0; i < n; ++i) {
            atb[i] += t[i] * fx;
            for (std::size_t j = 0; j < n; ++j) ata[i][j] += t[i] * t[j];
        }
    }
    Chebyshev p;
    p.a = a;
    p.b = b;
    p.c = solve(ata, atb);
    return p;
}

namespace {

// levels below T_1 at which the BSGS recursion leaves a degree-`deg` part
int bsgs_depth(std::size_t deg, std::size_t g) {
    // T_i sits ceil(log2 i) levels down; a leaf adds one constant multiplication
    if (deg < g) return ceil_log2(std::max<std::size_t>(deg, 1)) + 1;
    std::size_t m = g;
    while (2 * m <= deg) m *= 2;
    return std::max(std::max(bsgs_depth(deg - m, g), ceil_log2(m)) + 1, bsgs_depth(m - 1, g));
}

}  // namespace

int chebyshev_depth(int degree) {
    if (degree < 1) return 0;
    return bsgs_depth(static_cast<std::size_t>(degree), baby_steps(degree));
}

int poly_eval_depth(const Chebyshev& p) {
    return chebyshev_depth(static_cast<int>(p.degree())) + ((p.a != -1 || p.b != 1) ? 1 : 0);
}

SinePoly SinePoly::make(int degree, int doublings, double K, double margin) {
    if (doublings < 0) throw std::invalid_argument("SinePoly: negative doubling count");
    SinePoly s;
    s.degree = degree;
    s.doublings = doublings;
    s.K = K;
    s.R = K + margin;
    const double R = s.R, div = std::ldexp(1.0, doublings);
    s.cheb = Chebyshev::interpolate([&](double t) { return std::cos((2 * kPi * R * t - kPi / 2) / div); }, degree);
    double worst = 0;
    const int pts = 200000;
    for (int i = 0; i <= pts; ++i) {
        double x = -R + 2 * R * i / pts;
        worst = std::max(worst, std::fabs(s.eval(x) - std::sin(2 * kPi * x)));
    }
    s.max_error = worst;
    return s;
}

double SinePoly::eval(double x) const {
    double c = cheb(x / R);
    for (int i = 0; i < doublings; ++i) c = 2 * c * c - 1;
    return c;
}

LinearTransform LinearTransform::from_dense(const std::vector<std::vector<cplx>>& m, double drop_below) {
    LinearTransform t;
    t.n = m.size();
    for (auto& row : m)
        if (row.size() != t.n) throw std::invalid_argument("from_dense: matrix must be square");
    for (std::size_t d = 0; d < t.n; ++d) {
        std::vector<cplx> diag(t.n);
        bool any = false;
        for (std::size_t j = 0; j < t.n; ++j) {
            diag[j] = m[j][(j + d) % t.n];
            any |= std::abs(diag[j]) > drop_below;
        }
        if (any) t.diags.emplace(d, std::move(diag));
    }
    return t;
}

std::vector<std::vector<cplx>> LinearTransform::dense() const {
    std::vector<std::vector<cplx>> m(n, std::vector<cplx>(n));
    for (auto& [d, diag] : diags)
        for (std::size_t j = 0; j < n; ++j) m[j][(j + d) % n] += diag[j];
    return m;
}

std::vector<cplx> LinearTransform::apply(const std::vector<cplx>& x) const {
    if (x.size() != n) throw std::invalid_argument("LinearTransform::apply: size mismatch");
    std::vector<cplx> y(n);
    for (auto& [d, diag] : diags)
        for (std::size_t j = 0; j < n; ++j) y[j] += diag[j] * x[(j + d) % n];
    return y;
}

LinearTransform LinearTransform::after(const LinearTransform& first) const {
    if (first.n != n) throw std::invalid_argument("LinearTransform::after: size mismatch");
    LinearTransform out;
    out.n = n;
    for (auto& [d1, b] : diags)
        for (auto& [d2, a] : first.diags) {
            auto& acc = out.diags[(d1 + d2) % n];
            if (acc.empty()) acc.assign(n, cplx(0, 0));
            for (std::size_t r = 0; r < n; ++r) acc[r] += b[r] * a[(r + d1) % n];
        }
    return out;
}

std::vector<int> LinearTransform::rotations() const {
    std::vector<int> r;
    for (auto& [d, diag] : diags)
        if (d) r.push_back(static_cast<int>(n - d));
    return r;
}

namespace {

// one butterfly level of the encoder, as a diagonal transform
LinearTransform butterfly(const Encoder& enc, std::size_t len, bool inverse) {
    const std::size_t n = enc.slots(), m = 4 * n, lenh = len / 2, lenq = 4 * len;
    LinearTransform t;
    t.n = n;
    auto diag = [&](std::size_t d) -> std::vector<cplx>& {
        auto& v = t.diags[d % n];
        if (v.empty()) v.assign(n, cplx(0, 0));
        return v;
    };
    auto& d0 = diag(0);
    auto& dup = diag(lenh);
    auto& ddown = diag(n - lenh);
    for (std::size_t i = 0; i < n; i += len)
        for (std::size_t j = 0; j < lenh; ++j) {
            const std::size_t top = i + j, bot = i + j + lenh;
            if (!inverse) {
                cplx z = enc.ksi((enc.rot_group()[j] % lenq) * (m / lenq));
                d0[top] += 1.0;
                dup[top] += z;
                ddown[bot] += 1.0;
                d0[bot] -= z;
            } else {
                // exact inverse of the forward level
                cplx z = enc.ksi((lenq - enc.rot_group()[j] % lenq) * (m / lenq));
                d0[top] += 0.5;
                dup[top] += 0.5;
                ddown[bot] += 0.5 * z;
                d0[bot] -= 0.5 * z;
            }
        }
    return t;
}

}  // namespace

DftPlan DftPlan::make(const Encoder& enc, DftDirection dir, const std::vector<int>& radices) {
    DftPlan p;
    p.direction = dir;
    p.n = enc.slots();
    p.radices = radices;
    std::size_t prod = 1;
    for (int r : radices) {
        if (r < 2 || !std::has_single_bit(static_cast<unsigned>(r))) throw std::invalid_argument("DftPlan: radix must be a power of two >= 2");
        prod *= static_cast<std::size_t>(r);
    }
    if (prod != p.n) throw std::invalid_argument("DftPlan: product of radices must equal the slot count");
    // levels in application order: top-down for coeff_to_slot, bottom-up for slot_to_coeff
    std::vector<std::size_t> lens;
    for (std::size_t len = 2; len <= p.n; len <<= 1) lens.push_back(len);
    const bool inverse = dir == DftDirection::coeff_to_slot;
    if (inverse) std::reverse(lens.begin(), lens.end());
    std::size_t at = 0;
    for (int r : radices) {
        LinearTransform stage;
        for (int k = 0; k < std::countr_zero(static_cast<unsigned>(r)); ++k) {
            auto b = butterfly(enc, lens[at++], inverse);
            stage = stage.n ? b.after(stage) : b;
        }
        p.stages.push_back(std::move(stage));
    }
    return p;
}

std::vector<cplx> DftPlan::apply(const std::vector<cplx>& x) const {
    std::vector<cplx> y = x;
    for (auto& s : stages) y = s.apply(y);
    return y;
}

LinearTransform DftPlan::product() const {
    LinearTransform t = stages.at(0);
    for (std::size_t i = 1; i < stages.size(); ++i) t = stages[i].after(t);
    return t;
}

std::vector<int> DftPlan::rotations() const {
    std::vector<int> r;
    for (auto& s : stages) {
        auto v = s.rotations();
        r.insert(r.end(), v.begin(), v.end());
    }
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
    return r;
}

Ciphertext pt_mat_vec_mult(const Evaluator& ev, const Ciphertext& ct, const LinearTransform& m, const KeySet& keys,
                           cplx factor) {
    const Context& ctx = ev.context();
    if (m.n != ctx.slots()) throw std::invalid_argument("pt_mat_vec_mult: transform size differs from the slot count");
    if (m.diags.empty()) throw std::invalid_argument("pt_mat_vec_mult: empty transform");
    if (ct.level < 1) throw std::invalid_argument("pt_mat_vec_mult: no level left");
    const int l = ct.level;
    const double ql = static_cast<double>(ctx.chain().mod(l).q);
    const std::size_t n = ctx.n();

    std::vector<const SwitchingKey*> ks;
    for (auto& [d, diag] : m.diags) {
        if (!d) continue;
        auto it = keys.galois.find(Evaluator::rotation_galois(static_cast<int>(m.n - d), n));
        if (it == keys.galois.end()) throw std::out_of_range("pt_mat_vec_mult: missing rotation key");
        ks.push_back(&it->second);
    }

    // hoisted: one ModUp of a shared by every diagonal
    std::vector<RnsPoly> digits;
    if (!ks.empty()) digits = ev.modup_digits(ct.a, l);
    const RnsPoly pb = p_mod_up(ct.b, ctx.special());
    RnsPoly acc_a, acc_b;
    auto accumulate = [&](RnsPoly& acc, RnsPoly term) {
        if (acc.limbs() == 0) acc = std::move(term);
        else add_inplace(acc, term);
    };
    std::size_t key_at = 0;
    for (auto& [d, diag] : m.diags) {
        std::vector<cplx> scaled(diag);
        for (auto& x : scaled) x *= factor;
        // plaintext scale equals the prime the final ModDown removes
        const RnsPoly mhat = ev.encode_raised(scaled, l, ql).poly;
        if (!d) {
            accumulate(acc_a, mul(p_mod_up(ct.a, ctx.special()), mhat));
            accumulate(acc_b, mul(pb, mhat));
            continue;
        }
        const SwitchingKey& k = *ks[key_at++];
        std::vector<RnsPoly> rd;
        rd.reserve(digits.size());
        for (auto& dg : digits) rd.push_back(automorph_galois(dg, k.galois));
        auto [u, v] = ev.ksk_inner_prod(rd, k, l);
        add_inplace(v, automorph_galois(pb, k.galois));
        accumulate(acc_a, mul(u, mhat));
        accumulate(acc_b, mul(v, mhat));
    }
    // one ModDown by P * q_l for each half
    std::vector<std::size_t> drop;
    for (std::size_t i = l; i < acc_a.limbs(); ++i) drop.push_back(i);
    Ciphertext r;
    r.a = mod_down(acc_a, drop);
    r.b = mod_down(acc_b, drop);
    r.level = l - 1;
    r.scale = ct.scale;
    return r;
}

namespace {

class ChebyshevEval {
public:
    ChebyshevEval(const Evaluator& ev, const SwitchingKey& rk, Ciphertext x, std::size_t g) : ev_(ev), rk_(rk), g_(g) {
        t_.emplace(1, std::move(x));
        rep_.emplace(1, std::vector<double>{0, 1});
    }

    const Ciphertext& T(std::size_t i) {
        auto it = t_.find(i);
        if (it != t_.end()) return it->second;
        Ciphertext r;
        std::vector<double> rep;
        if (std::has_single_bit(i)) {
            const Ciphertext& h = T(i / 2);
            Ciphertext sq = ev_.mult(h, h, rk_);
            r = ev_.add_const(ev_.add(sq, sq), -1.0);
            rep = times(rep_[i / 2], rep_[i / 2], 2.0);
            rep[0] -= 1;
        } else {
            // T_{a+b} = 2 T_a T_b - T_{a-b}
            std::size_t a = std::bit_floor(i), b = i - a;
            Ciphertext ta = T(a), tb = T(b);
            const Ciphertext& td = T(a - b);
            Ciphertext pr = ev_.mult(ta, tb, rk_);
            r = ev_.sub(ev_.add(pr, pr), td);
            // sub keeps the left scale, so T_{a-b} enters scaled by this ratio
            const double rho = td.scale / pr.scale;
            rep = times(rep_[a], rep_[b], 2.0);
            for (std::size_t k = 0; k < rep_[a - b].size(); ++k) rep[k] -= rho * rep_[a - b][k];
        }
        rep_.emplace(i, std::move(rep));
        return t_.emplace(i, std::move(r)).first->second;
    }

    // result lands exactly on `scale`
    Ciphertext eval(const std::vector<double>& c, double scale) {
        const std::size_t deg = c.size() - 1;
        if (deg < g_) return leaf(c, scale);
        std::size_t m = g_;
        while (2 * m <= deg) m *= 2;
        // p = q T_m + r using T_{m+j} = 2 T_m T_j - T_{m-j}
        std::vector<double> q(deg - m + 1), r(c.begin(), c.begin() + m);
        q[0] = c[m];
        for (std::size_t j = 1; j <= deg - m; ++j) {
            q[j] = 2 * c[m + j];
            r[m - j] -= c[m + j];
        }
        const Ciphertext& tm = T(m);
        const int lq = T(1).level - bsgs_depth(deg - m, g_);
        const int lvl = std::min(lq, tm.level);
        const double qprime = static_cast<double>(ev_.context().chain().mod(lvl).q);
        Ciphertext qc = eval(q, scale * qprime / tm.scale);
        Ciphertext prod = ev_.mult(qc, tm, rk_);
        prod.scale = scale;
        return ev_.add(prod, eval(r, scale));
    }

private:
    Ciphertext leaf(const std::vector<double>& c, double scale) {
        const std::size_t top = std::max<std::size_t>(c.size() - 1, 1);
        int lb = T(1).level;
        for (std::size_t i = 1; i <= top; ++i) lb = std::min(lb, T(i).level);
        // baby steps carry small known multiples of lower T_j (scale ratios of the subtractions);
        // solve the unit triangular system so the sum is the requested series
        std::vector<double> want(top + 1, 0.0), coef(top + 1, 0.0);
        std::copy(c.begin(), c.end(), want.begin());
        for (std::size_t i = top; i >= 1; --i) {
            const auto& r = rep_.at(i);
            coef[i] = want[i] / r[i];
            for (std::size_t k = 0; k < i; ++k) want[k] -= coef[i] * r[k];
        }
        const double ql = static_cast<double>(ev_.context().chain().mod(lb).q);
        Ciphertext acc;
        for (std::size_t i = 1; i <= top; ++i) {
            const Ciphertext& ti = T(i);
            // plaintext scale chosen so every term lands on scale * q_lb
            Ciphertext term = ev_.mult_const_no_rescale(ev_.drop_to_level(ti, lb), coef[i], ql * scale / ti.scale);
            term.scale = scale * ql;
            acc = i == 1 ? term : ev_.add(acc, term);
        }
        acc = ev_.add_const(acc, want[0]);
        Ciphertext out = ev_.rescale(acc);
        out.scale = scale;
        return out;
    }

    // f * a * b in the Chebyshev basis, T_j T_k = (T_{j+k} + T_{|j-k|}) / 2
    static std::vector<double> times(const std::vector<double>& a, const std::vector<double>& b, double f) {
        std::vector<double> r(a.size() + b.size() - 1, 0.0);
        for (std::size_t j = 0; j < a.size(); ++j)
            for (std::size_t k = 0; k < b.size(); ++k) {
                double v = 0.5 * f * a[j] * b[k];
                r[j + k] += v;
                r[j > k ? j - k : k - j] += v;
            }
        return r;
    }

    const Evaluator& ev_;
    const SwitchingKey& rk_;
    std::size_t g_;
    std::map<std::size_t, Ciphertext> t_;
    std::map<std::size_t, std::vector<double>> rep_;  // what each T ciphertext actually holds, Chebyshev basis
};

}  // namespace

Ciphertext poly_eval(const Evaluator& ev, const Ciphertext& ct, const Chebyshev& p, const SwitchingKey& relin) {
    if (p.c.empty()) throw std::invalid_argument("poly_eval: empty polynomial");
    if (ct.level < poly_eval_depth(p)) throw std::invalid_argument("poly_eval: not enough levels");
    Ciphertext x = ct;
    if (p.a != -1 || p.b != 1) x = ev.add_const(ev.mult_const(ct, 2.0 / (p.b - p.a)), -(p.a + p.b) / (p.b - p.a));
    std::vector<double> c = p.c;
    if (c.size() == 1) c.push_back(0.0);
    ChebyshevEval e(ev, relin, std::move(x), baby_steps(c.size() - 1));
    return e.eval(c, x.scale);
}

BootstrapParams BootstrapParams::toy() {
    BootstrapParams p;
    p.radices = {8, 16, 16};
    p.sine_degree = 31;
    p.doublings = 3;
    p.K = 12;
    return p;
}

Bootstrapper::Bootstrapper(std::shared_ptr<const Context> ctx, BootstrapParams p) : ctx_(std::move(ctx)), p_(std::move(p)) {
    Encoder enc(ctx_->n());
    cts_ = DftPlan::make(enc, DftDirection::coeff_to_slot, p_.radices);
    // StC runs the mirrored factorisation so both directions share one rotation key set
    std::vector<int> rev(p_.radices.rbegin(), p_.radices.rend());
    stc_ = DftPlan::make(enc, DftDirection::slot_to_coeff, rev);
    sine_ = SinePoly::make(p_.sine_degree, p_.doublings, p_.K);
    if (level_out() < 1) throw std::invalid_argument("Bootstrapper: chain too short for the plan");
}

std::vector<int> Bootstrapper::rotations() const {
    auto r = cts_.rotations();
    auto s = stc_.rotations();
    r.insert(r.end(), s.begin(), s.end());
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
    return r;
}

int Bootstrapper::depth() const {
    return static_cast<int>(cts_.stages.size() + stc_.stages.size()) + sine_.depth();
}

Ciphertext Bootstrapper::mod_raise(const Ciphertext& ct) const {
    Ciphertext c0 = ct;
    c0.a = drop_limbs(ct.a, 1);
    c0.b = drop_limbs(ct.b, 1);
    const RnsBasis top = ctx_->level_basis(ctx_->params().L);
    const Modulus& q0 = ctx_->chain().mod(0);
    auto lift = [&](const RnsPoly& p) {
        RnsPoly c = p.rep == Rep::evaluation ? intt(p) : p;
        std::vector<i64> v(c.n);
        for (std::size_t t = 0; t < c.n; ++t) {
            u64 x = c.limb(0)[t];
            v[t] = x > q0.q / 2 ? -static_cast<i64>(q0.q - x) : static_cast<i64>(x);
        }
        return ntt(from_signed(v, top));
    };
    Ciphertext r;
    r.a = lift(c0.a);
    r.b = lift(c0.b);
    r.level = ctx_->params().L;
    r.scale = ct.scale;
    return r;
}

namespace {

// spread a constant evenly over the stages
cplx stage_factor(double total, std::size_t stages) { return std::pow(total, 1.0 / static_cast<double>(stages)); }

}  // namespace

Ciphertext Bootstrapper::coeff_to_slot(const Evaluator& ev, const Ciphertext& raised, double s_in,
                                       const KeySet& keys) const {
    const double q0 = static_cast<double>(ctx_->chain().mod(0).q);
    const cplx f = stage_factor(s_in / (2 * q0 * sine_.R), cts_.stages.size());
    Ciphertext c = raised;
    for (auto& st : cts_.stages) c = pt_mat_vec_mult(ev, c, st, keys, f);
    return c;
}

Ciphertext Bootstrapper::eval_mod(const Evaluator& ev, const Ciphertext& u, const KeySet& keys) const {
    auto conj = keys.galois.find(Evaluator::conjugation_galois(ctx_->n()));
    if (conj == keys.galois.end()) throw std::out_of_range("eval_mod: missing conjugation key");
    if (!keys.relin) throw std::out_of_range("eval_mod: missing relinearization key");
    Ciphertext uc = ev.conjugate(u, conj->second);
    Ciphertext re = ev.add(u, uc);
    Ciphertext im = ev.mult_i(ev.sub(uc, u));
    auto sine = [&](const Ciphertext& x) {
        Ciphertext c = poly_eval(ev, x, sine_.cheb, *keys.relin);
        for (int i = 0; i < sine_.doublings; ++i) {
            Ciphertext sq = ev.mult(c, c, *keys.relin);
            c = ev.add_const(ev.add(sq, sq), -1.0);
        }
        return c;
    };
    return ev.add(sine(re), ev.mult_i(sine(im)));
}

Ciphertext Bootstrapper::slot_to_coeff(const Evaluator& ev, const Ciphertext& v, double s_in, const KeySet& keys) const {
    const double q0 = static_cast<double>(ctx_->chain().mod(0).q);
    const cplx f = stage_factor(q0 / (2 * kPi * s_in), stc_.stages.size());
    Ciphertext c = v;
    for (auto& st : stc_.stages) c = pt_mat_vec_mult(ev, c, st, keys, f);
    return c;
}

Ciphertext Bootstrapper::bootstrap(const Evaluator& ev, const Ciphertext& ct, const KeySet& keys) const {
    const double s_in = ct.scale;
    Ciphertext raised = mod_raise(ct);
    Ciphertext u = coeff_to_slot(ev, raised, s_in, keys);
    Ciphertext v = eval_mod(ev, u, keys);
    Ciphertext out = slot_to_coeff(ev, v, s_in, keys);
    if (out.level != level_out()) throw std::logic_error("bootstrap: level accounting disagrees with the plan");
    return out;
}

}  // namespace fhelab
