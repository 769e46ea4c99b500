#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace fhelab {

// Counts in units of N (ops) and N-word limbs (traffic).
struct Cost {
    double m = 0, a = 0, r = 0, w = 0, k = 0;  // mults, adds, limb reads, limb writes, key limb reads
    Cost operator+(const Cost& o) const { return {m + o.m, a + o.a, r + o.r, w + o.w, k + o.k}; }
    Cost& operator+=(const Cost& o) { return *this = *this + o; }
    Cost operator*(double f) const { return {m * f, a * f, r * f, w * f, k * f}; }
};

enum class Flag : int { fusion, mapping, beta, alpha, acc, reorder, merged, hoist, keycomp };
inline constexpr int kFlagCount = 9;
const char* flag_name(Flag f);
std::optional<Flag> flag_from_name(const std::string& s);

struct OptimizationSet {
    std::array<bool, kFlagCount> on{};
    bool has(Flag f) const { return on[static_cast<int>(f)]; }
    OptimizationSet& set(Flag f, bool v = true) {
        on[static_cast<int>(f)] = v;
        return *this;
    }
    // first k flags in ladder order
    static OptimizationSet upto(int k);
    static OptimizationSet all() { return upto(kFlagCount); }
    // throws when a caching flag is on without the one it builds on
    void validate() const;
    std::string describe() const;
};

enum class CacheTier { none, o1_limb, beta_limb, alpha_limb };
const char* tier_name(CacheTier t);

struct HardwareModel {
    double word_bytes = 8;
    double cache_bytes = 64e6;
    double dram_bandwidth = 900e9;  // bytes per second
    std::string label = "default";
    CacheTier tier(int log_n, int L, int dnum) const;
};

struct ModelParams {
    int log_n = 17;
    int L = 35;
    int dnum = 3;
    int fft_iters = 3;
    std::vector<int> radices;  // empty: balanced over log2(n) with larger ones last
    std::vector<int> baby;     // per CtS stage; empty: 2^ceil(log2(2r-1)/2)
    int out_level_hint = 0;

    std::size_t alpha() const { return (L + 1 + dnum - 1) / dnum; }
    std::vector<int> resolved_radices() const;
    std::vector<int> resolved_baby() const;
};

std::vector<int> balanced_radices(int log_slots, int k);

// Tunables of the accounting. Frozen values reproduce the published tables; see README.
struct Calibration {
    bool exact = false;             // kernel-exact NTT counts, no calibration term
    double ntt_extra_mults = 1.5;   // per coefficient per limb, on top of logN/2
    double prng_ops_per_word = 1.0; // key expansion cost under key compression
    double leaf_read = 0.5;         // fraction of baby-step operand reads per leaf that miss in cache
    bool radd = true;               // baby steps T_{a+b} = 2 T_a T_b - T_{|a-b|} pay for the extra add
    bool leaf_merge = true;         // odd leaves fold their rescale into the merged ModDown
    bool alpha_per_level = true;    // digit size follows the current level
    // sine step
    int sine_degree = 63, sine_evals = 2, sine_baby = 8, sine_doublings = 2;
    // logistic regression iteration structure
    std::array<int, 3> lr_inner = {4, 11, 6};
    std::array<int, 3> lr_gradient = {4, 16, 11};
    int lr_blocks = 5;
    int lr_sigmoid_degree = 3, lr_sigmoid_baby = 4;
    int lr_level_baseline = 20, lr_level_optimized = 19;
};

// How each CtS/StC matrix stage is evaluated.
//  plan: hoisted form where the hoist flag is on and it does not add traffic, else BSGS with the plan's baby step
//  collapsed: hoisted form on every stage when the flag is on (the fully optimized algorithm)
//  cheapest: per stage minimum over the hoisted form and every power-of-two baby step
enum class StagePolicy { plan, collapsed, cheapest };

struct CostReport {
    std::string name;
    double gop = 0, gmult = 0, gb = 0, read_gb = 0, write_gb = 0, key_gb = 0, ai = 0;
    int level_out = -1;
    std::vector<CostReport> breakdown;
};

class CostModel {
public:
    CostModel(ModelParams p, OptimizationSet o, Calibration c = {}, HardwareModel hw = {});

    const ModelParams& params() const { return p_; }
    const OptimizationSet& requested() const { return req_; }
    const OptimizationSet& effective() const { return o_; }
    const Calibration& calibration() const { return c_; }
    CacheTier tier() const { return tier_; }

    CostReport report(const std::string& name, const Cost& c) const;

    // primitives
    Cost ntt(double k, bool inverse = false) const;
    Cost bconv(double k, double t) const;
    std::size_t alpha(int l) const;
    std::size_t beta(int l) const;
    std::size_t raised(int l) const;
    std::vector<std::size_t> digits(int l) const;
    Cost keys(int l) const;

    // subroutines
    Cost decomp(int l, bool fused = false) const;
    Cost modup(int l) const;
    Cost modup_digit(int l, std::size_t d) const;
    Cost kskip(int l, bool digit_reads = true) const;
    enum class Ctx { mult, rot };
    Cost moddown(int l, Ctx ctx = Ctx::mult, int drop_extra = 0) const;
    Cost rescale(int l, bool fused = false) const;
    static Cost automorph(int l, int polys = 2);

    // API
    static Cost add(int l);
    static Cost ptadd(int l);
    Cost ptmult(int l) const;
    Cost mult(int l) const;
    Cost rot_tail(int l) const;
    Cost rotate(int l) const;
    Cost hrotate(int l, int r) const;

    // applications
    struct PolyResult {
        Cost cost;
        int level;
    };
    PolyResult polyeval(int l, int deg, int evals, int g, int dbl) const;
    Cost hoisted_rots(int l, int rm, int rh) const;
    Cost matvec_bsgs(int l, int D, int g) const;
    Cost matvec_hoisted(int l, int D) const;
    struct StageChoice {
        Cost cost;
        int giants;  // giant steps used (1 for the hoisted form)
        bool hoisted;
    };
    // cheapest of hoisted and BSGS over power-of-two baby counts
    StageChoice best_stage(int l, int D) const;
    struct Phases {
        Cost cts, sine, stc;
        int level_out;
        std::vector<int> giants;
    };
    Phases bootstrap(StagePolicy policy = StagePolicy::plan) const;
    Cost products(int l, int k) const;
    Cost inner_product(int l, const std::array<int, 3>& spec) const;
    // shared=false runs each rotation on its own instead of hoisting the ModUp
    Cost parallel_inner_products(int l, int count, bool shared) const;
    Cost lr_iteration(int l) const;

    // named lookups for the tables
    CostReport cost_of(const std::string& op_id, int level, int arg = 0) const;
    CostReport cost_of_bootstrap(StagePolicy policy = StagePolicy::plan) const;

private:
    ModelParams p_;
    OptimizationSet req_, o_;
    Calibration c_;
    HardwareModel hw_;
    CacheTier tier_;
    double limb_gb_, unit_g_;
};

struct ThroughputResult {
    double n = 0, ell = 0, bp = 0, dram_gb = 0, brt_seconds = 0;
    double throughput = 0;  // n*ell*bp/brt
    bool unbounded = false;
};
ThroughputResult throughput(double n, double ell, double bp, double dram_gb, double bandwidth_bytes_per_s);

struct SearchSpace {
    int log_n = 17;
    int L_min = 20, L_max = 60;
    int dnum_min = 1, dnum_max = 12;
    int fft_min = 1, fft_max = 8;
    int max_raised_limbs = 62;  // security budget: (L+1) + alpha limbs of PQ
    double bp = 19;
};

struct SearchEntry {
    int L = 0, dnum = 0, fft = 0, level_out = 0;
    double gb = 0, gop = 0, throughput = 0;
    std::vector<int> radices, giants;
};

std::vector<SearchEntry> param_search(const SearchSpace& s, const OptimizationSet& o, const HardwareModel& hw,
                                      const Calibration& c = {}, StagePolicy policy = StagePolicy::collapsed);

struct ExternalRow {
    std::string work;
    double n, ell, bp, dram_gb, bandwidth;
};
std::vector<std::pair<ExternalRow, ThroughputResult>> external_comparison(const std::vector<ExternalRow>& rows);

// cumulative flag ladder at fixed parameters
struct SweepStep {
    int flags_on;
    std::string last_flag;
    CostReport bootstrap;
};
std::vector<SweepStep> sweep(const ModelParams& p, const Calibration& c = {}, const HardwareModel& hw = {});

}  // namespace fhelab
