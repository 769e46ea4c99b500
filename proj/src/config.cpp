#include "fhelab/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fhelab {

namespace {

YAML::Node parse(const std::string& name_or_path) {
    try {
        return YAML::Load(config_text(name_or_path));
    } catch (const YAML::Exception& e) {
        throw std::invalid_argument(name_or_path + ": " + e.what());
    }
}

YAML::Node need(const YAML::Node& n, const std::string& key, const std::string& where) {
    auto v = n[key];
    if (!v) throw std::invalid_argument(where + ": missing key '" + key + "'");
    return v;
}

// strtod so hex floats like 0x1p50 work
double num(const YAML::Node& n, const std::string& where) {
    if (!n.IsScalar()) throw std::invalid_argument(where + ": expected a number");
    const std::string s = n.Scalar();
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (s.empty() || *end != '\0') throw std::invalid_argument(where + ": not a number: " + s);
    return v;
}

double num_or(const YAML::Node& parent, const std::string& key, double dflt, const std::string& where) {
    auto n = parent[key];
    return n ? num(n, where + "." + key) : dflt;
}

int int_or(const YAML::Node& parent, const std::string& key, int dflt, const std::string& where) {
    double v = num_or(parent, key, dflt, where);
    if (v != static_cast<int>(v)) throw std::invalid_argument(where + "." + key + ": expected an integer");
    return static_cast<int>(v);
}

std::vector<int> int_list(const YAML::Node& n, const std::string& where) {
    std::vector<int> out;
    if (!n.IsSequence()) throw std::invalid_argument(where + ": expected a list");
    for (auto x : n) out.push_back(static_cast<int>(num(x, where)));
    return out;
}

OptimizationSet parse_flags(const YAML::Node& n, const std::string& where) {
    if (!n) return {};
    if (n.IsScalar()) {
        if (n.Scalar() == "none") return {};
        if (n.Scalar() == "all") return OptimizationSet::all();
    }
    OptimizationSet o;
    auto add = [&](const std::string& s) {
        auto f = flag_from_name(s);
        if (!f) throw std::invalid_argument(where + ": unknown flag " + s);
        o.set(*f);
    };
    if (n.IsScalar()) add(n.Scalar());
    else
        for (auto x : n) add(x.as<std::string>());
    o.validate();
    return o;
}

CkksParams parse_ckks(const YAML::Node& n, const std::string& where) {
    CkksParams p;
    p.log_n = int_or(n, "log_n", static_cast<int>(p.log_n), where);
    p.L = int_or(n, "L", p.L, where);
    p.dnum = int_or(n, "dnum", p.dnum, where);
    p.delta = num_or(n, "delta", p.delta, where);
    p.q0_bits = int_or(n, "q0_bits", p.q0_bits, where);
    p.special_bits = int_or(n, "special_bits", p.special_bits, where);
    p.hamming_weight = int_or(n, "hamming_weight", p.hamming_weight, where);
    p.sigma = num_or(n, "sigma", p.sigma, where);
    return p;
}

BootstrapParams parse_bs(const YAML::Node& n, const std::string& where) {
    BootstrapParams b;
    if (n["radices"]) b.radices = int_list(n["radices"], where + ".radices");
    b.sine_degree = int_or(n, "sine_degree", b.sine_degree, where);
    b.doublings = int_or(n, "doublings", b.doublings, where);
    b.K = int_or(n, "K", b.K, where);
    return b;
}

DramField parse_field(const std::string& s) {
    for (auto f : {DramField::offset, DramField::column, DramField::row, DramField::bank_group, DramField::bank,
                   DramField::rank, DramField::channel})
        if (s == field_name(f)) return f;
    throw std::invalid_argument("dram.yaml: unknown field " + s);
}

}  // namespace

std::string config_text(const std::string& name_or_path) {
    std::error_code ec;
    if (std::filesystem::is_regular_file(name_or_path, ec)) {
        std::ifstream in(name_or_path);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }
    auto& files = embedded_files();
    auto it = files.find(name_or_path);
    if (it == files.end()) throw std::invalid_argument("no such config file: " + name_or_path);
    return it->second;
}

HardwareModel load_hardware(const std::string& file) {
    auto root = parse(file);
    HardwareModel hw;
    auto h = root["hardware"];
    if (!h) return hw;
    hw.word_bytes = num_or(h, "word_bytes", hw.word_bytes, "hardware");
    hw.cache_bytes = num_or(h, "cache_bytes", hw.cache_bytes, "hardware");
    hw.dram_bandwidth = num_or(h, "dram_bandwidth", hw.dram_bandwidth, "hardware");
    if (h["label"]) hw.label = h["label"].as<std::string>();
    return hw;
}

SearchSpace load_search_space(const std::string& file) {
    auto root = parse(file);
    SearchSpace s;
    auto n = root["search"];
    if (!n) return s;
    auto range = [&](const char* key, int& lo, int& hi) {
        if (!n[key]) return;
        auto v = int_list(n[key], std::string("search.") + key);
        if (v.size() != 2 || v[0] > v[1]) throw std::invalid_argument(std::string("search.") + key + ": need [lo, hi]");
        lo = v[0];
        hi = v[1];
    };
    s.log_n = int_or(n, "log_n", s.log_n, "search");
    range("L", s.L_min, s.L_max);
    range("dnum", s.dnum_min, s.dnum_max);
    range("fft", s.fft_min, s.fft_max);
    s.max_raised_limbs = int_or(n, "max_raised_limbs", s.max_raised_limbs, "search");
    s.bp = num_or(n, "bp", s.bp, "search");
    return s;
}

std::vector<std::string> preset_names(const std::string& file) {
    auto root = parse(file);
    std::vector<std::string> out;
    for (auto kv : need(root, "presets", file)) out.push_back(kv.first.as<std::string>());
    return out;
}

Preset load_preset(const std::string& name, const std::string& file) {
    auto root = parse(file);
    auto all = need(root, "presets", file);
    auto n = all[name];
    if (!n) throw std::invalid_argument("unknown preset: " + name);
    const std::string where = "presets." + name;
    Preset p;
    p.name = name;
    if (n["description"]) p.description = n["description"].as<std::string>();
    p.model.log_n = int_or(n, "log_n", p.model.log_n, where);
    p.model.L = int_or(n, "L", p.model.L, where);
    p.model.dnum = int_or(n, "dnum", p.model.dnum, where);
    p.model.fft_iters = int_or(n, "fft_iters", p.model.fft_iters, where);
    if (n["radices"]) p.model.radices = int_list(n["radices"], where + ".radices");
    p.opts = parse_flags(n["flags"], where + ".flags");
    p.hw = load_hardware(file);
    p.api_level = int_or(n, "api_level", p.model.L, where);
    p.app_level = int_or(n, "app_level", p.app_level, where);
    return p;
}

const TargetTable& Targets::table(const std::string& id) const {
    for (auto& t : cost_tables)
        if (t.id == id) return t;
    throw std::invalid_argument("no target table " + id);
}

const TargetRow& Targets::row(const std::string& table_id, const std::string& op) const {
    for (auto& r : table(table_id).rows)
        if (r.op == op) return r;
    throw std::invalid_argument("no target row " + table_id + "/" + op);
}

Targets load_targets(const std::string& file) {
    auto root = parse(file);
    Targets t;
    auto tol = root["tolerance"];
    if (tol) {
        t.cost_tol = num_or(tol, "cost", t.cost_tol, "tolerance");
        t.throughput_tol = num_or(tol, "throughput", t.throughput_tol, "tolerance");
        t.dram_tol = num_or(tol, "dram", t.dram_tol, "tolerance");
    }
    static const char* kMeta[] = {"op", "label", "arg", "gated"};
    for (auto tn : need(root, "cost_tables", file)) {
        TargetTable tt;
        tt.id = need(tn, "id", "cost_tables").as<std::string>();
        const std::string where = "cost_tables." + tt.id;
        tt.title = tn["title"] ? tn["title"].as<std::string>() : tt.id;
        tt.preset = need(tn, "preset", where).as<std::string>();
        tt.level = static_cast<int>(num(need(tn, "level", where), where + ".level"));
        for (auto g : need(tn, "gate", where)) tt.gate.push_back(g.as<std::string>());
        for (auto rn : need(tn, "rows", where)) {
            TargetRow r;
            r.op = need(rn, "op", where).as<std::string>();
            r.label = rn["label"] ? rn["label"].as<std::string>() : r.op;
            r.arg = int_or(rn, "arg", 0, where);
            r.gated = rn["gated"] ? rn["gated"].as<bool>() : true;
            for (auto kv : rn) {
                auto key = kv.first.as<std::string>();
                bool meta = false;
                for (auto m : kMeta) meta |= key == m;
                if (!meta) r.cells[key] = num(kv.second, where + "." + r.op + "." + key);
            }
            tt.rows.push_back(std::move(r));
        }
        t.cost_tables.push_back(std::move(tt));
    }
    if (auto ob = root["optimized_bootstrap"]) {
        t.ai_improvement = num_or(ob, "ai_improvement", 0, "optimized_bootstrap");
        t.dram_reduction = num_or(ob, "dram_reduction", 0, "optimized_bootstrap");
        t.ai_improvement_min = num_or(ob, "ai_improvement_min", 0, "optimized_bootstrap");
        t.dram_reduction_min = num_or(ob, "dram_reduction_min", 0, "optimized_bootstrap");
    }
    for (auto rn : need(need(root, "throughput", file), "rows", "throughput")) {
        ThroughputTarget tt;
        tt.row.work = need(rn, "work", "throughput").as<std::string>();
        tt.row.n = num(need(rn, "n", "throughput"), "throughput.n");
        tt.row.ell = num(need(rn, "ell", "throughput"), "throughput.ell");
        tt.row.bp = num(need(rn, "bp", "throughput"), "throughput.bp");
        tt.row.dram_gb = num(need(rn, "gb", "throughput"), "throughput.gb");
        tt.row.bandwidth = num(need(rn, "bandwidth", "throughput"), "throughput.bandwidth");
        tt.throughput = num(need(rn, "throughput", "throughput"), "throughput.throughput");
        t.throughput.push_back(tt);
    }
    auto st = need(root, "search_top", file);
    t.search_L = int_or(st, "L", 0, "search_top");
    t.search_dnum = int_or(st, "dnum", 0, "search_top");
    t.search_fft = int_or(st, "fft", 0, "search_top");
    auto d = need(root, "dram", file);
    for (auto c : need(d, "cells", "dram"))
        t.dram.push_back({c["mapping"].as<std::string>(), c["pattern"].as<std::string>(), num(c["ms"], "dram.ms")});
    t.dram_improvement = num_or(d, "total_improvement", 0, "dram");
    auto rn = need(d, "total_improvement_range", "dram");
    if (!rn.IsSequence() || rn.size() != 2) throw std::invalid_argument("dram.total_improvement_range: need [lo, hi]");
    t.dram_improvement_lo = num(rn[0], "dram.total_improvement_range");
    t.dram_improvement_hi = num(rn[1], "dram.total_improvement_range");
    return t;
}

const Targets& targets() {
    static const Targets t = load_targets();
    return t;
}

const AddressMapping& DramSetup::mapping(const std::string& name) const {
    for (auto& m : mappings)
        if (m.name == name) return m;
    throw std::invalid_argument("unknown mapping: " + name);
}

DramSetup load_dram(const std::string& file) {
    auto root = parse(file);
    DramSetup s;
    auto dev = need(root, "device", file);
    DramConfig& c = s.cfg;
    if (dev["label"]) c.label = dev["label"].as<std::string>();
    c.channels = int_or(dev, "channels", c.channels, "device");
    c.ranks = int_or(dev, "ranks", c.ranks, "device");
    c.bank_groups = int_or(dev, "bank_groups", c.bank_groups, "device");
    c.banks_per_group = int_or(dev, "banks_per_group", c.banks_per_group, "device");
    c.rows = static_cast<std::uint32_t>(num_or(dev, "rows", c.rows, "device"));
    c.columns = static_cast<std::uint32_t>(num_or(dev, "columns", c.columns, "device"));
    c.bus_bytes = int_or(dev, "bus_bytes", c.bus_bytes, "device");
    c.burst_length = int_or(dev, "burst_length", c.burst_length, "device");
    c.clock_hz = num_or(dev, "clock_hz", c.clock_hz, "device");
    if (auto t = dev["timing"]) {
        DramTiming& x = c.t;
        x.tRCD = int_or(t, "tRCD", x.tRCD, "timing");
        x.tRP = int_or(t, "tRP", x.tRP, "timing");
        x.tRAS = int_or(t, "tRAS", x.tRAS, "timing");
        x.tCL = int_or(t, "tCL", x.tCL, "timing");
        x.tRTP = int_or(t, "tRTP", x.tRTP, "timing");
        x.tCCD_S = int_or(t, "tCCD_S", x.tCCD_S, "timing");
        x.tCCD_L = int_or(t, "tCCD_L", x.tCCD_L, "timing");
        x.tBURST = int_or(t, "tBURST", x.tBURST, "timing");
        x.tRRD_S = int_or(t, "tRRD_S", x.tRRD_S, "timing");
        x.tRRD_L = int_or(t, "tRRD_L", x.tRRD_L, "timing");
        x.tFAW = int_or(t, "tFAW", x.tFAW, "timing");
        x.tRTRS = int_or(t, "tRTRS", x.tRTRS, "timing");
    }
    c.validate();
    for (auto kv : need(root, "mappings", file)) {
        AddressMapping m;
        m.name = kv.first.as<std::string>();
        const std::string where = "mappings." + m.name;
        m.slot_bits = int_or(kv.second, "slot_bits", m.slot_bits, where);
        m.limb_bits = int_or(kv.second, "limb_bits", m.limb_bits, where);
        for (auto seg : need(kv.second, "segments", where)) {
            if (!seg.IsSequence() || seg.size() != 2) throw std::invalid_argument(where + ": segment is [field, width]");
            m.segments.push_back({parse_field(seg[0].as<std::string>()), static_cast<int>(num(seg[1], where))});
        }
        m.validate(c);
        s.mappings.push_back(std::move(m));
    }
    if (auto w = root["workload"]) {
        s.limbs = static_cast<std::uint32_t>(int_or(w, "limbs", static_cast<int>(s.limbs), "workload"));
        s.slots = static_cast<std::uint32_t>(int_or(w, "slots", static_cast<int>(s.slots), "workload"));
        s.block_bursts =
            static_cast<std::uint32_t>(int_or(w, "slot_wise_block_bursts", static_cast<int>(s.block_bursts), "workload"));
    }
    return s;
}

BootstrapPlan load_bootstrap_plan(const std::string& name, const std::string& file) {
    auto root = parse(file);
    auto n = need(need(root, "bootstrap", file), name, "bootstrap");
    const std::string where = "bootstrap." + name;
    BootstrapPlan p;
    p.name = name;
    p.ckks = parse_ckks(need(n, "ckks", where), where + ".ckks");
    p.bs = parse_bs(n, where);
    p.input_level = int_or(n, "input_level", 0, where);
    p.seed = static_cast<std::uint64_t>(num_or(n, "seed", 1, where));
    p.message_seed = static_cast<std::uint64_t>(num_or(n, "message_seed", 1, where));
    if (auto k = n["keys"]) {
        if (k["conjugation"]) p.conjugation = k["conjugation"].as<bool>();
        auto r = k["rotations"];
        if (r && r.IsSequence()) p.extra_rotations = int_list(r, where + ".keys.rotations");
        else if (r && r.Scalar() != "derived") throw std::invalid_argument(where + ".keys.rotations: list or 'derived'");
    }
    p.max_error = num_or(n, "max_error", p.max_error, where);
    if (!p.conjugation) throw std::invalid_argument(where + ": bootstrapping needs the conjugation key");
    return p;
}

LrPlan load_lr_plan(const std::string& name, const std::string& file) {
    auto root = parse(file);
    auto n = need(need(root, "lr", file), name, "lr");
    const std::string where = "lr." + name;
    LrPlan p;
    p.name = name;
    p.ckks = parse_ckks(need(n, "ckks", where), where + ".ckks");
    if (auto b = n["bootstrap"]) p.bs = load_bootstrap_plan(b.as<std::string>(), file).bs;
    else p.bs = BootstrapParams::toy();
    p.samples = static_cast<std::size_t>(int_or(n, "samples", static_cast<int>(p.samples), where));
    p.features = static_cast<std::size_t>(int_or(n, "features", static_cast<int>(p.features), where));
    p.data_seed = static_cast<std::uint64_t>(num_or(n, "data_seed", 5, where));
    p.seed = static_cast<std::uint64_t>(num_or(n, "seed", 1, where));
    p.separation = num_or(n, "separation", p.separation, where);
    p.lr.lr = num_or(n, "lr", p.lr.lr, where);
    p.lr.iterations = int_or(n, "iterations", p.lr.iterations, where);
    p.lr.bootstrap_period = int_or(n, "bootstrap_period", p.lr.bootstrap_period, where);
    p.lr.sigmoid_degree = int_or(n, "sigmoid_degree", p.lr.sigmoid_degree, where);
    p.lr.sigmoid_range = num_or(n, "sigmoid_range", p.lr.sigmoid_range, where);
    p.max_weight_error = num_or(n, "max_weight_error", p.max_weight_error, where);
    return p;
}

}  // namespace fhelab
