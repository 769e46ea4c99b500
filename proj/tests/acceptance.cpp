// One PASS/FAIL line per acceptance criterion, with its runtime against the time budget.
// Exit status is nonzero when any criterion fails.
#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <functional>

#include "fhelab/config.hpp"
#include "fhelab/report.hpp"
#include "fhelab/suites.hpp"

using namespace fhelab;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string worst_of(const std::vector<TableRun>& runs, std::size_t& gated, std::size_t& failed) {
    const CellDeviation* worst = nullptr;
    for (auto& r : runs)
        for (auto& c : r.cells) {
            if (!c.gated) continue;
            ++gated;
            failed += !c.pass;
            if (!worst || std::fabs(c.deviation) > std::fabs(worst->deviation)) worst = &c;
        }
    if (!worst) return "no gated cells";
    return fmt::format("worst {}/{}/{} {:+.2f}%", worst->table, worst->label, worst->column, 100 * worst->deviation);
}

Outcome crit1() {
    const Targets& t = targets();
    std::vector<TableRun> runs;
    for (auto& tt : t.cost_tables)
        if (tt.preset == "baseline") runs.push_back(reproduce_table(tt, t.cost_tol));
    std::size_t gated = 0, failed = 0;
    auto w = worst_of(runs, gated, failed);
    return {runs.size() == 4 && gated > 0 && failed == 0,
            fmt::format("{} tables, {} cells, {} outside 5%, {}", runs.size(), gated, failed, w)};
}

Outcome crit2() {
    const Targets& t = targets();
    auto run = reproduce_table(t.table("lr_performance"), t.cost_tol);
    bool boot_ok = true;
    for (auto& c : run.cells)
        if (c.op == "Bootstrap") boot_ok &= c.gated && c.pass;
    const Preset b = load_preset("baseline"), o = load_preset("best-case");
    auto base = CostModel(b.model, b.opts, b.cal, b.hw).cost_of_bootstrap();
    auto opt = CostModel(o.model, o.opts, o.cal, o.hw).cost_of_bootstrap();
    double ai_x = opt.ai / base.ai, dram_x = base.gb / opt.gb;
    bool ok = boot_ok && ai_x >= t.ai_improvement_min && dram_x >= t.dram_reduction_min;
    return {ok, fmt::format("bootstrap {:.2f} GOP / {:.2f} GB / AI {:.2f}; AI {:.2f}x (>= {}), DRAM {:.2f}x (>= {})",
                            opt.gop, opt.gb, opt.ai, ai_x, t.ai_improvement_min, dram_x, t.dram_reduction_min)};
}

Outcome crit3() {
    const Targets& t = targets();
    std::vector<ExternalRow> rows;
    for (auto& r : t.throughput) rows.push_back(r.row);
    auto res = external_comparison(rows);
    bool ok = res.size() == t.throughput.size();
    std::string d;
    for (std::size_t i = 0; i < res.size(); ++i) {
        double got = res[i].second.throughput / 1e6, want = t.throughput[i].throughput;
        ok &= std::fabs(got - want) <= t.throughput_tol * want;
        d += fmt::format("{}{:.2f}/{:.2f}", i ? ", " : "", got, want);
    }
    return {ok, d};
}

Outcome crit4() {
    const Targets& t = targets();
    const Preset o = load_preset("best-case");
    auto res = param_search(load_search_space(), o.opts, o.hw, o.cal);
    if (res.empty()) return {false, "empty search"};
    bool ok = res[0].L == t.search_L && res[0].dnum == t.search_dnum && res[0].fft == t.search_fft;
    return {ok, fmt::format("top L={} dnum={} fftIter={} at {:.2f}, {} grid points", res[0].L, res[0].dnum, res[0].fft,
                            res[0].throughput / 1e6, res.size())};
}

Outcome crit5() {
    const Targets& t = targets();
    auto setup = load_dram();
    std::vector<AccessTrace> traces = {
        AccessTrace::make(AccessPattern::limb_wise, setup.limbs, setup.slots, setup.cfg, setup.block_bursts),
        AccessTrace::make(AccessPattern::slot_wise, setup.limbs, setup.slots, setup.cfg, setup.block_bursts)};
    auto cmp = compare_mappings(traces, setup.mappings, setup.cfg);
    bool ok = true;
    std::size_t matched = 0;
    std::string d;
    for (auto& c : cmp.cells)
        for (auto& want : t.dram)
            if (want.mapping == c.mapping && want.pattern == pattern_name(c.pattern)) {
                ++matched;
                ok &= std::fabs(c.result.ms() - want.ms) <= t.dram_tol * want.ms;
                d += fmt::format("{:.2f}/{:.1f} ", c.result.ms(), want.ms);
            }
    double x = 0;
    for (auto& [m, v] : cmp.total_vs_first)
        if (m == "optimized") x = v;
    ok &= matched == t.dram.size() && x >= t.dram_improvement_lo && x <= t.dram_improvement_hi;
    return {ok, fmt::format("ms {}; improvement {:.2f}x in [{}, {}]", d, x, t.dram_improvement_lo,
                            t.dram_improvement_hi)};
}

Outcome crit6() {
    auto res = check_ckks(1, 12);
    bool ok = !res.empty();
    std::string failed;
    for (auto& c : res) {
        ok &= c.pass;
        if (!c.pass) failed += c.id + " ";
    }
    return {ok, fmt::format("N=2^12, {} checks{}", res.size(), failed.empty() ? "" : ", failed: " + failed)};
}

Outcome crit7() {
    auto plan = load_bootstrap_plan();
    auto r = run_bootstrap(plan);
    bool ok = r.level_out > r.level_in && r.max_error < plan.max_error;
    return {ok, fmt::format("level {} -> {}, error 2^{:.2f} (bound 2^{:.0f})", r.level_in, r.level_out,
                            std::log2(r.max_error), std::log2(plan.max_error))};
}

Outcome crit8() {
    const Targets& t = targets();
    auto plan = load_lr_plan();
    auto r = run_lr(plan);
    const int iters = r.rows.empty() ? 0 : r.rows.back().iteration;
    bool ok = iters == 6 && r.bootstraps == 2 && r.max_weight_error < plan.max_weight_error;
    const auto& table = t.table("lr_performance");
    auto run = reproduce_table(table, t.cost_tol);
    double gop = 0, gb = 0, ai = 0;
    for (std::size_t i = 0; i < table.rows.size(); ++i)
        if (table.rows[i].op == "FullLR") {
            gop = run.rows[i].gop;
            gb = run.rows[i].gb;
            ai = run.rows[i].ai;
        }
    bool lr_ok = gop > 0;
    for (auto& c : run.cells)
        if (c.op == "FullLR") lr_ok &= c.gated && c.pass;
    ok &= lr_ok;
    return {ok, fmt::format("{} iterations, {} bootstraps, weight error 2^{:.2f}; FullLR {:.2f}/{:.2f}/{:.2f}{}", iters,
                            r.bootstraps, std::log2(r.max_weight_error), gop, gb, ai, lr_ok ? "" : " off target")};
}

Outcome crit9() {
    std::vector<CheckResult> c = {check_modmul(1), check_ntt_convolution(1), check_basis_conversion(1),
                                  check_mod_down(1)};
    bool ok = true;
    std::string d;
    for (auto& x : c) {
        ok &= x.pass;
        d += fmt::format("{}{} {}", d.empty() ? "" : "; ", x.id, x.pass ? "ok" : "FAIL: " + x.detail);
    }
    return {ok, d};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double budget_s;
        std::function<Outcome()> fn;
    };
    const std::vector<Criterion> all = {
        {1, "baseline cost tables within 5%", 5, crit1},
        {2, "optimized bootstrap cost and improvement", 5, crit2},
        {3, "bootstrapping throughput comparison", 1, crit3},
        {4, "parameter search optimum", 60, crit4},
        {5, "DRAM mapping transfer times", 30, crit5},
        {6, "CKKS functional checks", 300, crit6},
        {7, "toy bootstrap", 600, crit7},
        {8, "encrypted logistic regression", 900, crit8},
        {9, "arithmetic oracles", 120, crit9},
    };
    int failed = 0;
    for (auto& c : all) {
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        bool pass = o.pass && secs < c.budget_s;
        failed += !pass;
        fmt::print("{} criterion {}: {} [{}] {:.2f} s (budget {} s)\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail,
                   secs, c.budget_s);
        std::fflush(stdout);
    }
    return failed ? 1 : 0;
}
