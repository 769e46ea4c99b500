#include "fhelab/apps.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace fhelab {

Ciphertext inner_product(const Evaluator& ev, const std::vector<Ciphertext>& xs, const std::vector<Ciphertext>& ys,
                         const SwitchingKey& rk) {
    if (xs.empty() || xs.size() != ys.size()) throw std::invalid_argument("inner_product: shape mismatch");
    if (rk.tag != KeyTag::relin) throw std::invalid_argument("inner_product: relinearization key expected");
    const int l = xs[0].level;
    const double s = xs[0].scale * ys[0].scale;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        if (xs[k].level != l || ys[k].level != l) throw std::invalid_argument("inner_product: levels differ");
        if (std::fabs(xs[k].scale * ys[k].scale / s - 1) > kScaleMatchTol)
            throw std::invalid_argument("inner_product: scales differ");
    }
    if (l < 1) throw std::invalid_argument("inner_product: no level left");
    // tensor products summed before any key switching
    RnsPoly d0, d1, d2;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const auto &x = xs[k], &y = ys[k];
        RnsPoly t2 = mul(x.a, y.a), t1 = add(mul(x.a, y.b), mul(x.b, y.a)), t0 = mul(x.b, y.b);
        if (k == 0) {
            d0 = std::move(t0);
            d1 = std::move(t1);
            d2 = std::move(t2);
        } else {
            add_inplace(d0, t0);
            add_inplace(d1, t1);
            add_inplace(d2, t2);
        }
    }
    const Context& ctx = ev.context();
    auto [u, v] = ev.ksk_inner_prod(ev.modup_digits(d2, l), rk, l);
    add_inplace(u, p_mod_up(d1, ctx.special()));
    add_inplace(v, p_mod_up(d0, ctx.special()));
    std::vector<std::size_t> drop;
    for (std::size_t i = l; i < u.limbs(); ++i) drop.push_back(i);
    Ciphertext r;
    r.a = mod_down(u, drop);
    r.b = mod_down(v, drop);
    r.level = l - 1;
    r.scale = s / static_cast<double>(ctx.chain().mod(l).q);
    return r;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) {
        cell.erase(0, cell.find_first_not_of(" \t\r"));
        cell.erase(cell.find_last_not_of(" \t\r") + 1);
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

Dataset read_csv(std::istream& in, const std::string& label) {
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("read_csv: empty input");
    auto head = split_csv(line);
    auto it = std::find(head.begin(), head.end(), label);
    if (it == head.end()) throw std::invalid_argument("read_csv: no label column '" + label + "'");
    const std::size_t lc = static_cast<std::size_t>(it - head.begin());
    Dataset d;
    for (std::size_t i = 0; i < head.size(); ++i)
        if (i != lc) d.header.push_back(head[i]);
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto cells = split_csv(line);
        if (cells.size() != head.size())
            throw std::invalid_argument("read_csv: row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                                        " cells, header has " + std::to_string(head.size()));
        std::vector<double> x;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            std::size_t used = 0;
            double v;
            try {
                v = std::stod(cells[i], &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0 || used != cells[i].size())
                throw std::invalid_argument("read_csv: row " + std::to_string(row) + " cell '" + cells[i] + "' is not a number");
            if (i == lc) {
                if (v == 0) v = -1;
                if (v != 1 && v != -1) throw std::invalid_argument("read_csv: labels must be 0/1 or -1/+1");
                d.y.push_back(v);
            } else {
                x.push_back(v);
            }
        }
        d.x.push_back(std::move(x));
    }
    return d;
}

Dataset read_csv_file(const std::string& path, const std::string& label) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("read_csv_file: cannot open " + path);
    return read_csv(f, label);
}

Dataset make_blobs(std::size_t samples, std::size_t features, std::uint64_t seed, double separation) {
    if (features < 2) throw std::invalid_argument("make_blobs: need the bias and at least one feature");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 0.5);
    Dataset d;
    d.header.push_back("bias");
    for (std::size_t j = 1; j < features; ++j) d.header.push_back("f" + std::to_string(j));
    for (std::size_t i = 0; i < samples; ++i) {
        double y = (i % 2) ? 1.0 : -1.0;
        std::vector<double> x{1.0};
        for (std::size_t j = 1; j < features; ++j) x.push_back(0.5 * separation * y + g(rng));
        d.x.push_back(std::move(x));
        d.y.push_back(y);
    }
    return d;
}

Chebyshev sigmoid_fit(const LrConfig& c) {
    return Chebyshev::fit([](double t) { return 1.0 / (1.0 + std::exp(t)); }, c.sigmoid_degree, -c.sigmoid_range,
                          c.sigmoid_range);
}

double lr_loss(const Dataset& d, const std::vector<double>& w) {
    double s = 0;
    for (std::size_t i = 0; i < d.samples(); ++i) {
        double t = 0;
        for (std::size_t j = 0; j < w.size(); ++j) t += d.y[i] * d.x[i][j] * w[j];
        s += std::log1p(std::exp(-t));
    }
    return s / static_cast<double>(d.samples());
}

std::vector<std::vector<double>> lr_train_plain(const Dataset& d, const LrConfig& c, std::vector<double> w0,
                                                bool exact_sigmoid) {
    const std::size_t n = d.samples(), f = d.features();
    if (w0.empty()) w0.assign(f, 0.0);
    if (w0.size() != f) throw std::invalid_argument("lr_train_plain: weight size mismatch");
    const Chebyshev g = sigmoid_fit(c);
    std::vector<std::vector<double>> out{w0};
    std::vector<double> w = w0;
    for (int it = 0; it < c.iterations; ++it) {
        std::vector<double> grad(f, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double t = 0;
            for (std::size_t j = 0; j < f; ++j) t += d.y[i] * d.x[i][j] * w[j];
            double gi = exact_sigmoid ? 1.0 / (1.0 + std::exp(t)) : g(t);
            for (std::size_t j = 0; j < f; ++j) grad[j] += gi * d.y[i] * d.x[i][j];
        }
        for (std::size_t j = 0; j < f; ++j) w[j] += c.lr / static_cast<double>(n) * grad[j];
        out.push_back(w);
    }
    return out;
}

EncryptedLr::EncryptedLr(const Evaluator& ev, const Bootstrapper& bs, const KeySet& keys, LrConfig cfg)
    : ev_(ev), bs_(bs), keys_(keys), cfg_(cfg) {
    if (!keys_.relin) throw std::invalid_argument("EncryptedLr: relinearization key missing");
    if (cfg_.sigmoid_degree != 3) throw std::invalid_argument("EncryptedLr: the iteration depth assumes a degree-3 sigmoid");
    // the mask divides by the fit range, so the series is evaluated on [-1, 1] with unchanged coefficients
    g_ = sigmoid_fit(cfg_);
    g_.a = -1;
    g_.b = 1;
}

std::vector<int> EncryptedLr::rotations(std::size_t n_samples, std::size_t d) {
    std::vector<int> r;
    for (std::size_t k = 1; k < d; k <<= 1) {
        r.push_back(-static_cast<int>(k));
        r.push_back(static_cast<int>(k));
    }
    for (std::size_t k = 1; k < n_samples; k <<= 1) r.push_back(-static_cast<int>(k * d));
    return r;
}

const SwitchingKey& EncryptedLr::key(int rotation) const {
    auto it = keys_.galois.find(Evaluator::rotation_galois(rotation, ev_.context().n()));
    if (it == keys_.galois.end()) throw std::out_of_range("EncryptedLr: missing rotation key " + std::to_string(rotation));
    return it->second;
}

// left: slot i gathers slots i, i+stride, ..., right: slots i, i-stride, ...
Ciphertext EncryptedLr::rotate_sum(const Ciphertext& c, int stride, std::size_t count, bool left) const {
    Ciphertext s = c;
    for (std::size_t k = 1; k < count; k <<= 1) {
        int r = static_cast<int>(k) * stride * (left ? -1 : 1);
        s = ev_.add(s, ev_.rotate(s, r, key(r)));
    }
    return s;
}

LrState EncryptedLr::init(const Dataset& data, const SecretKey& sk, Evaluator& enc_ev, std::vector<double> w0,
                          int w_level) const {
    const std::size_t n = data.samples(), d = data.features(), slots = ev_.context().slots();
    if (!std::has_single_bit(n) || !std::has_single_bit(d) || n * d > slots)
        throw std::invalid_argument("EncryptedLr: samples and features must be powers of two fitting the slots");
    if (w0.empty()) w0.assign(d, 0.0);
    if (w0.size() != d) throw std::invalid_argument("EncryptedLr: weight size mismatch");
    std::vector<cplx> z(n * d), w(n * d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            z[i * d + j] = data.y[i] * data.x[i][j];
            w[i * d + j] = w0[j];
        }
    const auto& p = ev_.context().params();
    LrState s;
    s.z = enc_ev.encrypt(enc_ev.encode(z, p.L, p.delta), sk);
    s.w = enc_ev.encrypt(enc_ev.encode(w, w_level, p.delta), sk);
    s.lr = cfg_.lr;
    s.n_samples = n;
    s.d = d;
    s.bootstrap_period = cfg_.bootstrap_period;
    return s;
}

LrState EncryptedLr::iteration(const LrState& s) const {
    if (s.w.level < iteration_depth()) throw std::invalid_argument("EncryptedLr: bootstrap required");
    const std::size_t n = s.n_samples, d = s.d, period = n * d;
    const int sd = static_cast<int>(d);
    // z_i . w lands on slot i*d
    Ciphertext p = ev_.mult(s.z, s.w, *keys_.relin);
    Ciphertext t = rotate_sum(p, 1, d, true);
    // keep slot i*d, divided by the fit range
    std::vector<cplx> mask(period, 0.0);
    for (std::size_t i = 0; i < n; ++i) mask[i * d] = 1.0 / cfg_.sigmoid_range;
    const double q = static_cast<double>(ev_.context().chain().mod(t.level).q);
    Ciphertext u = ev_.pt_mult(t, ev_.encode(mask, t.level, q));
    u.scale = t.scale;
    u = rotate_sum(u, 1, d, false);
    // g scaled by lr/n
    Chebyshev g = g_;
    for (auto& c : g.c) c *= s.lr / static_cast<double>(n);
    Ciphertext gi = poly_eval(ev_, u, g, *keys_.relin);
    Ciphertext grad = rotate_sum(ev_.mult(gi, s.z, *keys_.relin), sd, n, true);
    LrState r = s;
    r.w = ev_.add(grad, s.w);
    ++r.iteration;
    return r;
}

LrState EncryptedLr::step(const LrState& s) const {
    LrState cur = s;
    if (cur.w.level < iteration_depth()) {
        cur.w = bs_.bootstrap(ev_, cur.w, keys_);
        ++cur.bootstraps;
    }
    return iteration(cur);
}

std::vector<double> EncryptedLr::weights(const LrState& s, const SecretKey& sk) const {
    auto v = ev_.decode(ev_.decrypt(s.w, sk));
    std::vector<double> w(s.d);
    for (std::size_t j = 0; j < s.d; ++j) w[j] = v[j].real();
    return w;
}

}  // namespace fhelab
