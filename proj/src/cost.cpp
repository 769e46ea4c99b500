#include "fhelab/cost.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace fhelab {

namespace {

constexpr const char* kFlagNames[kFlagCount] = {"fusion", "mapping", "beta", "alpha", "acc",
                                                "reorder", "merged", "hoist", "keycomp"};

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

}  // namespace

const char* flag_name(Flag f) { return kFlagNames[static_cast<int>(f)]; }

std::optional<Flag> flag_from_name(const std::string& s) {
    for (int i = 0; i < kFlagCount; ++i)
        if (s == kFlagNames[i]) return static_cast<Flag>(i);
    return std::nullopt;
}

OptimizationSet OptimizationSet::upto(int k) {
    OptimizationSet o;
    for (int i = 0; i < std::min(k, kFlagCount); ++i) o.on[i] = true;
    return o;
}

void OptimizationSet::validate() const {
    if (has(Flag::beta) && !has(Flag::fusion)) throw std::invalid_argument("beta caching needs fusion");
    if (has(Flag::alpha) && !has(Flag::beta)) throw std::invalid_argument("alpha caching needs beta caching");
}

std::string OptimizationSet::describe() const {
    std::string s;
    for (int i = 0; i < kFlagCount; ++i)
        if (on[i]) s += (s.empty() ? "" : "+") + std::string(kFlagNames[i]);
    return s.empty() ? "none" : s;
}

const char* tier_name(CacheTier t) {
    switch (t) {
        case CacheTier::none: return "none";
        case CacheTier::o1_limb: return "O(1)-limb";
        case CacheTier::beta_limb: return "beta-limb";
        case CacheTier::alpha_limb: return "alpha-limb";
    }
    return "?";
}

CacheTier HardwareModel::tier(int log_n, int L, int dnum) const {
    const double limb = std::ldexp(1.0, log_n) * word_bytes;
    const double alpha = std::ceil((L + 1.0) / dnum);
    const double beta = std::ceil((L + 1.0) / alpha);
    if (cache_bytes >= 2 * alpha * limb + 3e6) return CacheTier::alpha_limb;
    if (cache_bytes >= 2 * beta * limb) return CacheTier::beta_limb;
    if (cache_bytes >= 3 * limb) return CacheTier::o1_limb;
    return CacheTier::none;
}

std::vector<int> balanced_radices(int log_slots, int k) {
    if (k < 1 || k > log_slots) throw std::invalid_argument("fftIter out of range");
    int base = log_slots / k, extra = log_slots % k;
    std::vector<int> r;
    for (int i = 0; i < k; ++i) r.push_back(1 << (base + (i >= k - extra ? 1 : 0)));
    return r;
}

std::vector<int> ModelParams::resolved_radices() const {
    return radices.empty() ? balanced_radices(log_n - 1, fft_iters) : radices;
}

std::vector<int> ModelParams::resolved_baby() const {
    if (!baby.empty()) return baby;
    std::vector<int> b;
    for (int r : resolved_radices()) {
        double D = 2.0 * r - 1;
        b.push_back(1 << static_cast<int>(std::ceil(std::log2(D) / 2)));
    }
    return b;
}

CostModel::CostModel(ModelParams p, OptimizationSet o, Calibration c, HardwareModel hw)
    : p_(std::move(p)), req_(o), o_(o), c_(c), hw_(std::move(hw)) {
    req_.validate();
    tier_ = hw_.tier(p_.log_n, p_.L, p_.dnum);
    // caching flags only take effect when the cache can hold what they keep
    if (tier_ < CacheTier::o1_limb) o_.set(Flag::fusion, false);
    if (tier_ < CacheTier::beta_limb) o_.set(Flag::beta, false);
    if (tier_ < CacheTier::alpha_limb) {
        o_.set(Flag::alpha, false);
        o_.set(Flag::acc, false);
        o_.set(Flag::reorder, false);
    }
    const double n = std::ldexp(1.0, p_.log_n);
    limb_gb_ = n * hw_.word_bytes / 1e9;
    unit_g_ = n / 1e9;
}

CostReport CostModel::report(const std::string& name, const Cost& c) const {
    CostReport r;
    r.name = name;
    r.gop = (c.m + c.a) * unit_g_;
    r.gmult = c.m * unit_g_;
    r.read_gb = c.r * limb_gb_;
    r.write_gb = c.w * limb_gb_;
    r.key_gb = c.k * limb_gb_;
    r.gb = r.read_gb + r.write_gb + r.key_gb;
    r.ai = r.gb > 0 ? r.gop / r.gb : 0;
    return r;
}

// ---- primitives ----

Cost CostModel::ntt(double k, bool inverse) const {
    const double logn = p_.log_n;
    double per = logn / 2 + (c_.exact ? (inverse ? 1.0 : 0.0) : c_.ntt_extra_mults);
    return {per * k, logn * k, 0, 0, 0};
}

Cost CostModel::bconv(double k, double t) const {
    if (k <= 1) return {};
    return {k + k * t, k * t, 0, 0, 0};
}

std::size_t CostModel::alpha(int l) const {
    return c_.alpha_per_level ? ceil_div(l + 1, p_.dnum) : p_.alpha();
}
std::size_t CostModel::beta(int l) const { return ceil_div(l + 1, alpha(l)); }
std::size_t CostModel::raised(int l) const { return l + 1 + alpha(l); }

std::vector<std::size_t> CostModel::digits(int l) const {
    std::vector<std::size_t> out;
    std::size_t a = alpha(l);
    for (std::size_t c = l + 1; c > 0;) {
        std::size_t d = std::min(a, c);
        out.push_back(d);
        c -= d;
    }
    return out;
}

Cost CostModel::keys(int l) const {
    double k = 2.0 * p_.dnum * raised(l);
    bool comp = o_.has(Flag::keycomp);
    return {0, comp ? c_.prng_ops_per_word * k / 2 : 0, 0, 0, comp ? k / 2 : k};
}

// ---- subroutines ----

Cost CostModel::decomp(int l, bool fused) const {
    return {2.0 * l, 0, fused ? 0.0 : double(l), fused ? 0.0 : double(l), 0};
}

Cost CostModel::modup_digit(int l, std::size_t d) const {
    const double R = raised(l), dd = d;
    Cost x = ntt(dd, true) + bconv(dd, R - dd) + ntt(R - dd);
    if (o_.has(Flag::alpha)) {
        // conversion intermediates stay on chip: read the digit, write the new limbs
        x.r += dd;
        x.w += R - dd;
    } else {
        x.r += 2 * dd + (R - dd);
        x.w += dd + 2 * (R - dd);
    }
    return x;
}

Cost CostModel::modup(int l) const {
    Cost x;
    for (std::size_t d : digits(l)) x += modup_digit(l, d);
    return x;
}

Cost CostModel::kskip(int l, bool digit_reads) const {
    const double b = beta(l), R = raised(l);
    return Cost{2 * b * R, 2 * (b - 1) * R, digit_reads ? b * R : 0.0, 0, 0} + keys(l);
}

Cost CostModel::moddown(int l, Ctx ctx, int drop_extra) const {
    const double a = alpha(l) + drop_extra, c = l + 1 - drop_extra, out = l - drop_extra;
    Cost x = ntt(a, true) + bconv(a, c) + ntt(c) + Cost{c, c, 0, 0, 0};
    if (o_.has(Flag::reorder)) {
        // dropped limbs are produced first and consumed in cache
        x.w += out;
    } else if (o_.has(Flag::alpha)) {
        x.r += a + c;
        x.w += out;
    } else if (ctx == Ctx::mult) {
        x.r += 2 * a + 2 * c;
        x.w += a + c + out;
    } else {
        x.r += 2 * a + out;
        x.w += 2 * a + 2 * c;
    }
    return x;
}

Cost CostModel::rescale(int l, bool fused) const {
    Cost x = ntt(1, true) + ntt(l - 1.0) + Cost{l - 1.0, l - 1.0, 0, 0, 0};
    if (!fused) x.r += l;
    x.w += l - 1;
    return x;
}

Cost CostModel::automorph(int l, int polys) { return {0, 0, double(l) * polys, double(l) * polys, 0}; }

// ---- API ----

Cost CostModel::add(int l) { return {0, 2.0 * l, 4.0 * l, 2.0 * l, 0}; }
Cost CostModel::ptadd(int l) { return {0, double(l), 2.0 * l, double(l), 0}; }

Cost CostModel::ptmult(int l) const {
    if (o_.has(Flag::fusion)) return Cost{2.0 * l, 0, 3.0 * l, 0, 0} + rescale(l, true) * 2;
    return Cost{2.0 * l, 0, 3.0 * l, 2.0 * l, 0} + rescale(l) * 2;
}

Cost CostModel::mult(int l) const {
    const bool f = o_.has(Flag::fusion);
    Cost x{3.0 * l, 4.0 * l, 4.0 * l, f ? 2.0 * l : 3.0 * l, 0};
    x += decomp(l, true) + modup(l) + kskip(l);
    if (o_.has(Flag::merged)) {
        x += Cost{2.0 * l, 0, 0, 0, 0};  // P*(d0, d1) folded into the raised accumulator
        x += moddown(l, Ctx::mult, 1) * 2;
        return x + Cost{0, 0, 2.0 * l, 0, 0};
    }
    x += moddown(l, Ctx::mult) * 2;
    if (f) return x + Cost{0, 2.0 * l, 2.0 * l, -2.0 * l, 0} + rescale(l, true) * 2;
    return x + add(l) + rescale(l) * 2;
}

Cost CostModel::rot_tail(int l) const {
    Cost x = moddown(l, Ctx::rot) * 2;
    if (o_.has(Flag::fusion)) return x + Cost{0, double(l), double(l), 0, 0};
    return x + automorph(l, 1) + Cost{0, double(l), 2.0 * l, double(l), 0};
}

Cost CostModel::rotate(int l) const {
    Cost x = decomp(l, o_.has(Flag::fusion)) + modup(l) + kskip(l) + rot_tail(l);
    if (!o_.has(Flag::fusion)) x += automorph(l, 1);
    return x;
}

Cost CostModel::hrotate(int l, int r) const {
    Cost x = decomp(l, o_.has(Flag::fusion)) + modup(l);
    // with beta caching the raised digits stay resident after the first rotation
    if (r > 0) x += kskip(l) + rot_tail(l) + (kskip(l, !o_.has(Flag::beta)) + rot_tail(l)) * (r - 1);
    return x;
}

// ---- applications ----

CostModel::PolyResult CostModel::polyeval(int l, int deg, int evals, int g, int dbl) const {
    const bool acc = o_.has(Flag::acc), merged = o_.has(Flag::merged);
    Cost x;
    int lv = l;
    for (int e = 0; e < evals; ++e) {
        lv = l;
        std::map<int, int> lvT{{1, lv}};
        for (int i = 2; i <= g; ++i) {
            int a = i / 2, b = i - a;
            int ll = std::min(lvT[a], lvT[b]);
            x += mult(ll);
            lvT[i] = ll - 1;
            if (c_.radd && b != a) x += Cost{0, 2.0 * (ll - 1), 2.0 * (ll - 1), 0, 0};
        }
        int k = g;
        while (k * 2 <= deg) {
            int ll = lvT[k];
            x += mult(ll);
            lvT[2 * k] = ll - 1;
            k *= 2;
        }
        const int leaves = (deg + 1) / g;
        int lb = std::numeric_limits<int>::max();
        for (int i = 1; i < g; ++i) lb = std::min(lb, lvT[i]);
        for (int j = 0; j < leaves; ++j) {
            const double t = 2.0 * lb * (g - 1);
            x += Cost{t, t, acc ? 0.0 : t * c_.leaf_read, acc ? 0.0 : 2.0 * lb, 0};
            if (!(merged && j % 2 == 1 && c_.leaf_merge)) x += rescale(lb, o_.has(Flag::fusion)) * 2;
        }
        x += Cost{0, 0, 2.0 * lb * (g - 1), 0, 0} * (acc ? 1.0 : 1.0 - c_.leaf_read);
        std::vector<int> cur(leaves, lb - 1);
        k = g;
        while (cur.size() > 1) {
            std::vector<int> nxt;
            for (std::size_t j = 0; j + 1 < cur.size(); j += 2) {
                int ll = std::min(cur[j + 1], lvT[k]);
                x += mult(ll) + (acc ? Cost{0, 2.0 * ll - 2, 2.0 * ll - 2, 0, 0} : add(ll - 1));
                nxt.push_back(ll - 1);
            }
            cur = nxt;
            k *= 2;
        }
        lv = cur[0];
        for (int d = 0; d < dbl; ++d) {
            x += mult(lv);
            --lv;
        }
    }
    return {x, lv};
}

Cost CostModel::hoisted_rots(int l, int rm, int rh) const {
    const double R = raised(l), b = beta(l);
    const bool beta_on = o_.has(Flag::beta), acc = o_.has(Flag::acc);
    Cost x = decomp(l, o_.has(Flag::fusion)) + modup(l);
    for (int i = 0; i < rm + rh; ++i) {
        x += kskip(l, i == 0 || !beta_on);
        if (!beta_on) x += Cost{0, 0, b * R, b * R, 0};
        if (i < rm) x += rot_tail(l);
        else x += Cost{0, 2 * R, acc ? 0.0 : 4 * R, acc ? 0.0 : 2 * R, 0};  // summed in the raised basis
    }
    if (rh) x += rot_tail(l);
    return x;
}

Cost CostModel::matvec_bsgs(int l, int D, int g) const {
    const int h = static_cast<int>(ceil_div(D, g));
    const bool no_reread = o_.has(Flag::acc) && o_.has(Flag::beta);
    auto block = [&](double n) {
        return Cost{2.0 * l * n, 2.0 * l * (n - 1), no_reread ? 0.0 : 2.0 * l * n, 2.0 * l, 0};
    };
    const int last = D - (h - 1) * g;
    Cost x = hrotate(l, g - 1) + block(g) * (h - 1) + block(last);
    if (h > 1) x += (rotate(l) + add(l)) * (h - 1);
    return x + rescale(l, o_.has(Flag::fusion)) * 2;
}

Cost CostModel::matvec_hoisted(int l, int D) const {
    const double R = raised(l), b = beta(l);
    Cost x = decomp(l, true) + modup(l);
    // digits streamed once; automorph, key product and diagonal product run per limb in cache
    x += Cost{0, 0, b * R, 0, 0};
    x += kskip(l, false) * (D - 1);
    x += Cost{2 * R * D, 2 * R * (D - 1), double(l), 0, 0};
    x += Cost{double(l) * D, 0, double(l) * D, 0, 0};  // diagonal read plus PModUp
    if (o_.has(Flag::merged)) x += moddown(l, Ctx::rot, 1) * 2;
    else x += moddown(l, Ctx::rot) * 2 + rescale(l, true) * 2;
    return x;
}

CostModel::StageChoice CostModel::best_stage(int l, int D) const {
    auto bytes = [](const Cost& c) { return c.r + c.w + c.k; };
    std::optional<StageChoice> best;
    auto consider = [&](StageChoice s) {
        if (!best || bytes(s.cost) < bytes(best->cost) - 1e-9 ||
            (std::fabs(bytes(s.cost) - bytes(best->cost)) <= 1e-9 && s.giants < best->giants))
            best = s;
    };
    if (o_.has(Flag::hoist)) consider({matvec_hoisted(l, D), 1, true});
    for (int g = 1; g <= D; g *= 2) consider({matvec_bsgs(l, D, g), static_cast<int>(ceil_div(D, g)), false});
    return *best;
}

CostModel::Phases CostModel::bootstrap(StagePolicy policy) const {
    const auto radices = p_.resolved_radices();
    const auto baby = p_.resolved_baby();
    if (baby.size() != radices.size()) throw std::invalid_argument("baby list must match the radix list");
    Phases ph;
    int l = p_.L;
    auto stage = [&](int r, int g) {
        const int D = 2 * r - 1;
        if (policy == StagePolicy::cheapest) {
            auto s = best_stage(l, D);
            ph.giants.push_back(s.giants);
            return s.cost;
        }
        Cost bsgs = matvec_bsgs(l, D, g);
        if (o_.has(Flag::hoist)) {
            // plan: hoisting is taken where it saves traffic, so huge radices or full-size keys keep BSGS
            Cost hoisted = matvec_hoisted(l, D);
            if (policy == StagePolicy::collapsed || hoisted.r + hoisted.w + hoisted.k <= bsgs.r + bsgs.w + bsgs.k) {
                ph.giants.push_back(1);
                return hoisted;
            }
        }
        ph.giants.push_back(static_cast<int>(ceil_div(D, g)));
        return bsgs;
    };
    for (std::size_t i = 0; i < radices.size(); ++i) {
        ph.cts += stage(radices[i], baby[i]);
        --l;
    }
    // conjugate split into real and imaginary parts plus the raise ModUp traffic
    ph.cts += rotate(l) + add(l) * 2 + Cost{0, 0, 2, 2.0 * p_.L, 0};
    auto pe = polyeval(l, c_.sine_degree, c_.sine_evals, c_.sine_baby, c_.sine_doublings);
    ph.sine = pe.cost;
    l = pe.level;
    for (std::size_t i = radices.size(); i-- > 0;) {
        ph.stc += stage(radices[i], baby[i]);
        --l;
    }
    ph.level_out = l;
    return ph;
}

Cost CostModel::products(int l, int k) const {
    if (!o_.has(Flag::merged)) return mult(l) * k + add(l - 1) * (k - 1);
    // sums stay in the raised basis; one merged ModDown pair for the whole sum
    Cost one = Cost{3.0 * l, 4.0 * l, 4.0 * l, 2.0 * l, 0} + decomp(l, true) + modup(l) + kskip(l) +
               Cost{2.0 * l, 0, 2.0 * l, 0, 0} + Cost{0, 2.0 * raised(l), 0, 0, 0};
    return one * k + moddown(l, Ctx::mult, 1) * 2;
}

Cost CostModel::inner_product(int l, const std::array<int, 3>& spec) const {
    return products(l, spec[0]) + hoisted_rots(l - 1, spec[1], spec[2]);
}

Cost CostModel::parallel_inner_products(int l, int count, bool shared) const {
    const auto& ip = c_.lr_inner;
    if (shared) return inner_product(l, ip) * count;
    // every rotation pays its own Decomp and ModUp, then folds into the running sum
    Cost one = products(l, ip[0]);
    for (int i = 0; i < ip[1] + ip[2]; ++i) one += rotate(l - 1) + add(l - 1);
    return one * count;
}

Cost CostModel::lr_iteration(int l) const {
    Cost x;
    for (int b = 0; b < c_.lr_blocks; ++b) {
        x += inner_product(l, c_.lr_inner);
        x += polyeval(l - 1, c_.lr_sigmoid_degree, 1, c_.lr_sigmoid_baby, 0).cost;
        x += inner_product(l - 3, c_.lr_gradient);
    }
    return x + ptmult(l - 4) + add(l - 5);
}

CostReport CostModel::cost_of(const std::string& op, int l, int arg) const {
    Cost c;
    if (op == "ModUp") c = modup(l) * (1.0 / digits(l).size());
    else if (op == "ModUpFull") c = modup(l);
    else if (op == "Decomp") c = decomp(l);
    else if (op == "KSKInnerProd") c = kskip(l);
    else if (op == "ModDown") c = moddown(l);
    else if (op == "Automorph") c = automorph(l);
    else if (op == "Rescale") c = rescale(l);
    else if (op == "PtAdd") c = ptadd(l);
    else if (op == "Add") c = add(l);
    else if (op == "PtMult") c = ptmult(l);
    else if (op == "Mult" || op == "NewMult") {
        if (op == "NewMult") {
            CostModel m2(p_, OptimizationSet(req_).set(Flag::merged), c_, hw_);
            c = m2.mult(l);
        } else c = mult(l);
    } else if (op == "Rotate" || op == "Conjugate") c = rotate(l);
    else if (op == "HRotate") c = hrotate(l, arg > 0 ? arg : 8);
    else if (op == "InnerProduct") c = inner_product(l, c_.lr_inner);
    else if (op == "PolyEval3") c = polyeval(l, c_.lr_sigmoid_degree, 1, c_.lr_sigmoid_baby, 0).cost;
    else if (op == "PolyEval63") c = polyeval(l, c_.sine_degree, c_.sine_evals, c_.sine_baby, c_.sine_doublings).cost;
    else if (op == "FullLR") c = lr_iteration(l);
    else throw std::invalid_argument("unknown op id: " + op);
    return report(op, c);
}

CostReport CostModel::cost_of_bootstrap(StagePolicy policy) const {
    auto ph = bootstrap(policy);
    CostReport r = report("Bootstrap", ph.cts + ph.sine + ph.stc);
    r.level_out = ph.level_out;
    r.breakdown = {report("CoeffToSlot", ph.cts), report("PolyEval63", ph.sine), report("SlotToCoeff", ph.stc)};
    return r;
}

ThroughputResult throughput(double n, double ell, double bp, double dram_gb, double bandwidth) {
    if (bandwidth <= 0) throw std::invalid_argument("bandwidth must be positive");
    ThroughputResult t{n, ell, bp, dram_gb, dram_gb * 1e9 / bandwidth, 0, false};
    if (t.brt_seconds <= 0) {
        t.unbounded = true;
        t.throughput = std::numeric_limits<double>::infinity();
    } else {
        t.throughput = n * ell * bp / t.brt_seconds;
    }
    return t;
}

std::vector<SearchEntry> param_search(const SearchSpace& s, const OptimizationSet& o, const HardwareModel& hw,
                                      const Calibration& c, StagePolicy policy) {
    std::vector<SearchEntry> out;
    const double slots = std::ldexp(1.0, s.log_n - 1);
    for (int L = s.L_min; L <= s.L_max; ++L)
        for (int dnum = s.dnum_min; dnum <= s.dnum_max; ++dnum) {
            const int raised = L + 1 + (L + 1 + dnum - 1) / dnum;
            if (raised > s.max_raised_limbs) continue;
            for (int f = s.fft_min; f <= s.fft_max; ++f) {
                // bootstrap depth: 2 f DFT stages plus the sine step must leave a level
                if (L - 2 * f - 11 < 1 || f > s.log_n - 1) continue;
                ModelParams p;
                p.log_n = s.log_n;
                p.L = L;
                p.dnum = dnum;
                p.fft_iters = f;
                CostModel m(p, o, c, hw);
                auto ph = m.bootstrap(policy);
                if (ph.level_out < 1) continue;
                CostReport r = m.report("Bootstrap", ph.cts + ph.sine + ph.stc);
                SearchEntry e;
                e.L = L;
                e.dnum = dnum;
                e.fft = f;
                e.level_out = ph.level_out;
                e.gb = r.gb;
                e.gop = r.gop;
                e.throughput = throughput(slots, ph.level_out, s.bp, r.gb, hw.dram_bandwidth).throughput;
                e.radices = p.resolved_radices();
                e.giants = ph.giants;
                out.push_back(std::move(e));
            }
        }
    if (out.empty()) throw std::invalid_argument("parameter search space is empty");
    std::stable_sort(out.begin(), out.end(), [](const SearchEntry& a, const SearchEntry& b) {
        if (a.throughput != b.throughput) return a.throughput > b.throughput;
        if (a.L != b.L) return a.L < b.L;
        if (a.dnum != b.dnum) return a.dnum < b.dnum;
        return a.radices < b.radices;
    });
    return out;
}

std::vector<std::pair<ExternalRow, ThroughputResult>> external_comparison(const std::vector<ExternalRow>& rows) {
    std::vector<std::pair<ExternalRow, ThroughputResult>> out;
    for (auto& r : rows) out.emplace_back(r, throughput(r.n, r.ell, r.bp, r.dram_gb, r.bandwidth));
    return out;
}

std::vector<SweepStep> sweep(const ModelParams& p, const Calibration& c, const HardwareModel& hw) {
    std::vector<SweepStep> out;
    for (int k = 0; k <= kFlagCount; ++k) {
        CostModel m(p, OptimizationSet::upto(k), c, hw);
        out.push_back({k, k ? kFlagNames[k - 1] : "none", m.cost_of_bootstrap()});
    }
    return out;
}

}  // namespace fhelab
