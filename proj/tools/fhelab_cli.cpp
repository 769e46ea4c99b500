// fhelab command line: cost tables, flag sweep, parameter search, DRAM mapping table,
// encrypted LR demo and the functional self-test.
#include <CLI11.hpp>
#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <optional>

#include "fhelab/config.hpp"
#include "fhelab/report.hpp"
#include "fhelab/suites.hpp"

using namespace fhelab;

namespace {

struct Globals {
    std::string preset;
    std::string out = "out";
    std::optional<std::uint64_t> seed;
    std::string format = "csv";
};

std::string ext(const Globals& g) { return "." + g.format; }

bool within(double got, double want, double tol) {
    if (want == 0) return got == 0;
    return std::fabs(got - want) <= tol * std::fabs(want);
}

void print_gates(const std::vector<GateLine>& gates) {
    for (auto& g : gates) fmt::print("  {:<4} {}  {}\n", g.pass ? "ok" : "FAIL", g.name, g.detail);
}

bool all_pass(const std::vector<GateLine>& gates) {
    for (auto& g : gates)
        if (!g.pass) return false;
    return true;
}

int cmd_tables(const Globals& g) {
    const std::string name = g.preset.empty() ? "baseline" : g.preset;
    const Preset p = load_preset(name);
    const Targets& t = targets();
    CostModel m(p.model, p.opts, p.cal, p.hw);

    bool any = false;
    for (auto& tt : t.cost_tables) any |= tt.preset == name;

    std::vector<TableRun> runs;
    for (auto& tt : t.cost_tables) {
        if (any && tt.preset != name) continue;
        TargetTable local = tt;
        if (!any) {
            // a preset without published rows: same rows, no gate
            local.level = std::min(tt.level, p.model.L);
            for (auto& r : local.rows) r.gated = false;
        }
        auto run = reproduce_table(local, m, t.cost_tol);
        auto path = write_file(g.out, run.id + ext(g), cost_table(run.rows, run.labels).render(g.format));
        fmt::print("wrote {} ({})\n", path, run.title);
        runs.push_back(std::move(run));
    }

    std::vector<GateLine> gates;
    for (auto& run : runs) {
        std::size_t gated = 0, failed = 0;
        double worst = 0;
        for (auto& c : run.cells) {
            if (!c.gated) continue;
            ++gated;
            failed += !c.pass;
            if (std::fabs(c.deviation) > std::fabs(worst)) worst = c.deviation;
        }
        if (gated)
            gates.push_back({run.id, failed == 0,
                             fmt::format("{} gated cells, {} outside {:.0f}%, worst {:+.2f}%", gated, failed,
                                         100 * t.cost_tol, 100 * worst)});
    }

    if (name == "best-case") {
        // improvement of the optimized bootstrap over the baseline preset
        const Preset b = load_preset("baseline");
        auto base = CostModel(b.model, b.opts, b.cal, b.hw).cost_of_bootstrap();
        auto opt = m.cost_of_bootstrap();
        double ai_x = opt.ai / base.ai, dram_x = base.gb / opt.gb;
        gates.push_back({"ai_improvement", ai_x >= t.ai_improvement_min,
                         fmt::format("{:.2f}x (published {:.2f}x, floor {:.2f}x)", ai_x, t.ai_improvement,
                                     t.ai_improvement_min)});
        gates.push_back({"dram_reduction", dram_x >= t.dram_reduction_min,
                         fmt::format("{:.2f}x (published {:.2f}x, floor {:.2f}x)", dram_x, t.dram_reduction,
                                     t.dram_reduction_min)});

        Table cmp;
        cmp.columns = {"work", "n", "ell", "bp", "dram_gb", "bandwidth_gbps", "brt_us", "throughput", "published",
                       "deviation"};
        std::vector<ExternalRow> rows;
        for (auto& r : t.throughput) rows.push_back(r.row);
        auto res = external_comparison(rows);
        std::size_t bad = 0;
        for (std::size_t i = 0; i < res.size(); ++i) {
            double tp = res[i].second.throughput / 1e6, want = t.throughput[i].throughput;
            bad += !within(tp, want, t.throughput_tol);
            cmp.add({res[i].first.work, res[i].first.n, res[i].first.ell, res[i].first.bp, res[i].first.dram_gb,
                     res[i].first.bandwidth / 1e9, res[i].second.brt_seconds * 1e6, tp, want, (tp - want) / want});
        }
        auto path = write_file(g.out, "bootstrapping_comparison" + ext(g), cmp.render(g.format));
        fmt::print("wrote {} (Bootstrapping comparison)\n", path);
        gates.push_back({"throughput", bad == 0, fmt::format("{} of {} rows outside {:.0f}%", bad, res.size(),
                                                             100 * t.throughput_tol)});
    }

    auto path = write_file(g.out, "deviation" + ext(g), deviation_table(runs).render(g.format));
    fmt::print("wrote {}\n", path);
    write_file(g.out, "gates" + ext(g), gate_table(gates).render(g.format));
    print_gates(gates);
    return all_pass(gates) ? 0 : 1;
}

int cmd_sweep(const Globals& g) {
    const std::string name = g.preset.empty() ? "best-case" : g.preset;
    const Preset p = load_preset(name);
    const Targets& t = targets();
    auto steps = sweep(p.model, p.cal, p.hw);
    Table tab;
    tab.columns = {"step", "flags_on", "last_flag", "bootstrap_gop", "bootstrap_gb", "ai", "dram_reduction",
                   "ai_improvement"};
    std::vector<std::string> labels;
    BarSeries gb{"DRAM transfers (GB)", {}}, gop{"operations (GOP)", {}};
    bool monotone = true;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        auto& s = steps[i];
        auto& b = s.bootstrap;
        if (i && b.gb > steps[i - 1].bootstrap.gb + 1e-9) monotone = false;
        tab.add({static_cast<std::int64_t>(i), static_cast<std::int64_t>(s.flags_on), s.last_flag, b.gop, b.gb, b.ai,
                 steps[0].bootstrap.gb / b.gb, b.ai / steps[0].bootstrap.ai});
        labels.push_back(i == 0 ? "none" : "+" + s.last_flag);
        gb.values.push_back(b.gb);
        gop.values.push_back(b.gop);
    }
    auto csv = write_file(g.out, "sweep" + ext(g), tab.render(g.format));
    auto svg = write_file(g.out, "sweep.svg",
                          svg_bar_chart(fmt::format("Bootstrap cost, cumulative optimizations ({})", name),
                                        "GB / GOP", labels, {gb, gop}));
    fmt::print("wrote {}\nwrote {}\n", csv, svg);

    std::vector<GateLine> gates;
    gates.push_back({"monotone", monotone, "DRAM transfers never rise along the ladder"});
    if (name == "best-case") {
        auto& row = t.row("lr_performance", "Bootstrap");
        double want = row.cells.at("gop") / row.cells.at("gb"), got = steps.back().bootstrap.ai;
        gates.push_back({"final_ai", within(got, want, t.cost_tol),
                         fmt::format("{:.3f} vs {:.3f} (published {:.2f})", got, want, row.cells.at("ai"))});
        const Preset b = load_preset("baseline");
        double base_ai = CostModel(b.model, b.opts, b.cal, b.hw).cost_of_bootstrap().ai;
        double x = got / base_ai;
        gates.push_back({"cumulative_ai", x >= t.ai_improvement_min,
                         fmt::format("{:.2f}x over the baseline preset (published {:.2f}x)", x, t.ai_improvement)});
    }
    write_file(g.out, "sweep_gates" + ext(g), gate_table(gates).render(g.format));
    print_gates(gates);
    return all_pass(gates) ? 0 : 1;
}

int cmd_search(const Globals& g, int top) {
    const std::string name = g.preset.empty() ? "best-case" : g.preset;
    const Preset p = load_preset(name);
    const Targets& t = targets();
    auto space = load_search_space();
    auto t0 = std::chrono::steady_clock::now();
    auto res = param_search(space, p.opts, p.hw, p.cal);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    Table tab;
    tab.columns = {"rank", "L", "dnum", "fft", "level_out", "gop", "gb", "throughput", "radices", "giants"};
    auto join = [](const std::vector<int>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i]);
        return s;
    };
    for (std::size_t i = 0; i < res.size() && (top <= 0 || static_cast<int>(i) < top); ++i) {
        auto& e = res[i];
        tab.add({static_cast<std::int64_t>(i + 1), static_cast<std::int64_t>(e.L), static_cast<std::int64_t>(e.dnum),
                 static_cast<std::int64_t>(e.fft), static_cast<std::int64_t>(e.level_out), e.gop, e.gb,
                 e.throughput / 1e6, join(e.radices), join(e.giants)});
    }
    auto path = write_file(g.out, "search" + ext(g), tab.render(g.format));
    fmt::print("wrote {} ({} grid points, {:.2f} s)\n", path, res.size(), secs);
    fmt::print("  top: L={} dnum={} fftIter={} throughput {:.2f}\n", res[0].L, res[0].dnum, res[0].fft,
               res[0].throughput / 1e6);
    std::vector<GateLine> gates;
    if (p.opts.describe() == OptimizationSet::all().describe()) {
        bool ok = res[0].L == t.search_L && res[0].dnum == t.search_dnum && res[0].fft == t.search_fft;
        gates.push_back({"search_top", ok,
                         fmt::format("expected L={} dnum={} fftIter={}", t.search_L, t.search_dnum, t.search_fft)});
    }
    print_gates(gates);
    return all_pass(gates) ? 0 : 1;
}

int cmd_dram(const Globals& g, const std::string& file) {
    auto setup = load_dram(file);
    const Targets& t = targets();
    std::vector<AccessTrace> traces = {
        AccessTrace::make(AccessPattern::limb_wise, setup.limbs, setup.slots, setup.cfg, setup.block_bursts),
        AccessTrace::make(AccessPattern::slot_wise, setup.limbs, setup.slots, setup.cfg, setup.block_bursts)};
    auto cmp = compare_mappings(traces, setup.mappings, setup.cfg);
    Table tab;
    tab.columns = {"mapping", "pattern", "ms", "activations", "row_hits", "bytes", "published_ms", "deviation"};
    std::vector<GateLine> gates;
    std::size_t bad = 0, matched = 0;
    for (auto& c : cmp.cells) {
        double pub = NAN;
        for (auto& d : t.dram)
            if (d.mapping == c.mapping && d.pattern == pattern_name(c.pattern)) pub = d.ms;
        double dev = std::isnan(pub) ? NAN : (c.result.ms() - pub) / pub;
        if (!std::isnan(pub)) {
            ++matched;
            bad += std::fabs(dev) > t.dram_tol;
        }
        tab.add({c.mapping, std::string(pattern_name(c.pattern)), c.result.ms(),
                 static_cast<std::int64_t>(c.result.row_activations), static_cast<std::int64_t>(c.result.row_hits),
                 static_cast<std::int64_t>(c.result.bytes), std::isnan(pub) ? Table::Cell(std::string("")) : pub,
                 std::isnan(dev) ? Table::Cell(std::string("")) : dev});
    }
    auto path = write_file(g.out, "dram" + ext(g), tab.render(g.format));
    fmt::print("wrote {} ({}, peak {:.1f} GB/s)\n", path, setup.cfg.label, setup.cfg.peak_bandwidth() / 1e9);
    for (auto& c : cmp.cells)
        fmt::print("  {:<10} {:<10} {:7.3f} ms\n", c.mapping, pattern_name(c.pattern), c.result.ms());
    if (matched) {
        gates.push_back({"transfer_times", bad == 0,
                         fmt::format("{} of {} cells outside {:.0f}%", bad, matched, 100 * t.dram_tol)});
        for (auto& [m, x] : cmp.total_vs_first) {
            if (m == cmp.total_vs_first.front().first) continue;
            bool ok = x >= t.dram_improvement_lo && x <= t.dram_improvement_hi;
            gates.push_back({"total_improvement_" + m, ok,
                             fmt::format("{:.2f}x (published {:.1f}x, range [{}, {}])", x, t.dram_improvement,
                                         t.dram_improvement_lo, t.dram_improvement_hi)});
        }
    }
    print_gates(gates);
    return all_pass(gates) ? 0 : 1;
}

int cmd_lr(const Globals& g, const std::string& plan_file, const std::string& plan_name, const std::string& data,
           const std::string& label, int iterations) {
    LrPlan plan = load_lr_plan(plan_name, plan_file);
    if (g.seed) plan.seed = *g.seed;
    if (iterations >= 0) plan.lr.iterations = iterations;
    std::optional<Dataset> d;
    if (!data.empty()) d = read_csv_file(data, label);
    auto run = run_lr(plan, d ? &*d : nullptr);
    Table tab;
    tab.columns = {"iteration", "bootstraps", "level", "loss_encrypted", "loss_plain", "max_weight_error"};
    for (auto& r : run.rows)
        tab.add({static_cast<std::int64_t>(r.iteration), static_cast<std::int64_t>(r.bootstraps),
                 static_cast<std::int64_t>(r.level), r.loss_encrypted, r.loss_plain, r.weight_error});
    auto path = write_file(g.out, "lr_loss" + ext(g), tab.render(g.format));
    fmt::print("wrote {} ({} iterations, {} bootstraps, {:.1f} s)\n", path, plan.lr.iterations, run.bootstraps,
               run.seconds);
    for (auto& r : run.rows)
        fmt::print("  it {}  loss {:.6f} (plain {:.6f})  weight error 2^{:.2f}\n", r.iteration, r.loss_encrypted,
                   r.loss_plain, r.weight_error > 0 ? std::log2(r.weight_error) : -INFINITY);
    std::vector<GateLine> gates;
    gates.push_back({"weight_error", run.max_weight_error < plan.max_weight_error,
                     fmt::format("max 2^{:.2f}, bound 2^{:.0f}", std::log2(run.max_weight_error),
                                 std::log2(plan.max_weight_error))});
    if (run.rows.size() > 1)
        gates.push_back({"loss_decreases", run.rows.back().loss_encrypted < run.rows.front().loss_encrypted,
                         fmt::format("{:.6f} -> {:.6f}", run.rows.front().loss_encrypted,
                                     run.rows.back().loss_encrypted)});
    print_gates(gates);
    return all_pass(gates) ? 0 : 1;
}

int cmd_selftest(const Globals& g, bool quick, const std::string& plan_file) {
    const std::uint64_t seed = g.seed.value_or(1);
    std::vector<CheckResult> checks;
    checks.push_back(check_modmul(seed));
    checks.push_back(check_ntt_convolution(seed));
    checks.push_back(check_basis_conversion(seed));
    checks.push_back(check_mod_down(seed));
    for (auto& c : check_ckks(seed)) checks.push_back(c);
    if (!quick) {
        auto plan = load_bootstrap_plan("toy", plan_file);
        auto r = run_bootstrap(plan);
        bool ok = r.level_out > r.level_in && r.max_error < plan.max_error;
        checks.push_back({"bootstrap", "toy bootstrap raises the level and keeps the message", r.max_error,
                          plan.max_error, ok, r.seconds,
                          fmt::format("level {} -> {}, error 2^{:.2f}", r.level_in, r.level_out,
                                      std::log2(r.max_error))});
    }
    Table tab;
    tab.columns = {"check", "status", "value", "bound", "detail"};
    bool ok = true;
    for (auto& c : checks) {
        ok &= c.pass;
        fmt::print("{:<4} {:<13} {}  [{}] {:.2f} s\n", c.pass ? "PASS" : "FAIL", c.id, c.name, c.detail, c.seconds);
        tab.add({c.id, std::string(c.pass ? "pass" : "FAIL"), c.value, c.bound, c.detail});
    }
    write_file(g.out, "selftest" + ext(g), tab.render(g.format));
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fhelab: CKKS memory-traffic model, DRAM mapping simulator and toy functional pipeline"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    std::uint64_t seed = 0;
    auto names = preset_names();
    app.add_option("--preset", g.preset, "cost-model preset")->check(CLI::IsMember(names));
    app.add_option("--out", g.out, "output directory (created when missing)")->capture_default_str();
    auto seed_opt = app.add_option("--seed", seed, "seed for keys and messages");
    app.add_option("--format", g.format, "table format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();

    auto tables = app.add_subcommand("tables", "cost tables and deviation report against the published rows");
    auto sw = app.add_subcommand("sweep", "cumulative optimization ladder, CSV and bar plot");
    auto search = app.add_subcommand("search", "exhaustive parameter search ranked by throughput");
    int top = 20;
    search->add_option("--top", top, "rows to write (0 = all)")->capture_default_str();
    auto dram = app.add_subcommand("dram", "DRAM transfer times per mapping and access pattern");
    std::string dram_file = "dram.yaml";
    dram->add_option("--config", dram_file, "device and mapping file")->capture_default_str();
    auto lr = app.add_subcommand("lr-demo", "encrypted logistic regression, per-iteration loss CSV");
    std::string plan_file = "plans.yaml", plan_name = "toy", data, label = "label";
    int iterations = -1;
    lr->add_option("--plan", plan_file, "plan file")->capture_default_str();
    lr->add_option("--plan-name", plan_name, "LR plan inside the file")->capture_default_str();
    lr->add_option("--data", data, "CSV with a header row and a label column");
    lr->add_option("--label", label, "label column name")->capture_default_str();
    lr->add_option("--iterations", iterations, "override the plan's iteration count");
    auto st = app.add_subcommand("selftest", "toy-scale functional oracles");
    bool quick = false;
    st->add_flag("--quick", quick, "skip the toy bootstrap");
    st->add_option("--plan", plan_file, "plan file for the toy bootstrap")->capture_default_str();

    CLI11_PARSE(app, argc, argv);
    if (seed_opt->count()) g.seed = seed;

    try {
        if (*tables) return cmd_tables(g);
        if (*sw) return cmd_sweep(g);
        if (*search) return cmd_search(g, top);
        if (*dram) return cmd_dram(g, dram_file);
        if (*lr) return cmd_lr(g, plan_file, plan_name, data, label, iterations);
        if (*st) return cmd_selftest(g, quick, plan_file);
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 2;
    }
    return 2;
}
