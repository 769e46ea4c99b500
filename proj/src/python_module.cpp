// python bindings: cost model, search, DRAM comparison and the quick self-test
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fhelab/config.hpp"
#include "fhelab/report.hpp"
#include "fhelab/suites.hpp"

namespace py = pybind11;
using namespace fhelab;

namespace {

py::dict report_dict(const CostReport& r) {
    py::dict d;
    d["name"] = r.name;
    d["gop"] = r.gop;
    d["gmult"] = r.gmult;
    d["gb"] = r.gb;
    d["read_gb"] = r.read_gb;
    d["write_gb"] = r.write_gb;
    d["key_gb"] = r.key_gb;
    d["ai"] = r.ai;
    if (r.level_out >= 0) d["level_out"] = r.level_out;
    py::list parts;
    for (auto& b : r.breakdown) parts.append(report_dict(b));
    d["breakdown"] = parts;
    return d;
}

CostModel model_for(const std::string& preset) {
    Preset p = load_preset(preset);
    return CostModel(p.model, p.opts, p.cal, p.hw);
}

}  // namespace

PYBIND11_MODULE(_fhelab, m) {
    m.doc() = "CKKS memory-traffic model and DRAM mapping simulator";

    m.def("presets", [] { return preset_names(); });

    m.def(
        "cost_of",
        [](const std::string& op, const std::string& preset, int level, int arg) {
            Preset p = load_preset(preset);
            CostModel cm(p.model, p.opts, p.cal, p.hw);
            return report_dict(cm.cost_of(op, level < 0 ? p.api_level : level, arg));
        },
        py::arg("op"), py::arg("preset") = "baseline", py::arg("level") = -1, py::arg("arg") = 0);

    m.def(
        "bootstrap_cost", [](const std::string& preset) { return report_dict(model_for(preset).cost_of_bootstrap()); },
        py::arg("preset") = "baseline");

    m.def(
        "throughput",
        [](double n, double ell, double bp, double dram_gb, double bandwidth) {
            auto r = fhelab::throughput(n, ell, bp, dram_gb, bandwidth);
            py::dict d;
            d["brt_seconds"] = r.brt_seconds;
            d["throughput"] = r.throughput;
            return d;
        },
        py::arg("n"), py::arg("ell"), py::arg("bp"), py::arg("dram_gb"), py::arg("bandwidth") = 900e9);

    m.def(
        "search",
        [](const std::string& preset, int top) {
            Preset p = load_preset(preset);
            auto res = param_search(load_search_space(), p.opts, p.hw, p.cal);
            py::list out;
            for (std::size_t i = 0; i < res.size() && (top <= 0 || static_cast<int>(i) < top); ++i) {
                py::dict d;
                d["L"] = res[i].L;
                d["dnum"] = res[i].dnum;
                d["fft"] = res[i].fft;
                d["level_out"] = res[i].level_out;
                d["gop"] = res[i].gop;
                d["gb"] = res[i].gb;
                d["throughput"] = res[i].throughput;
                out.append(d);
            }
            return out;
        },
        py::arg("preset") = "best-case", py::arg("top") = 10);

    m.def("dram_compare", [] {
        auto s = load_dram();
        std::vector<AccessTrace> traces = {
            AccessTrace::make(AccessPattern::limb_wise, s.limbs, s.slots, s.cfg, s.block_bursts),
            AccessTrace::make(AccessPattern::slot_wise, s.limbs, s.slots, s.cfg, s.block_bursts)};
        auto cmp = compare_mappings(traces, s.mappings, s.cfg);
        py::list cells;
        for (auto& c : cmp.cells) {
            py::dict d;
            d["mapping"] = c.mapping;
            d["pattern"] = std::string(pattern_name(c.pattern));
            d["ms"] = c.result.ms();
            d["activations"] = c.result.row_activations;
            cells.append(d);
        }
        py::dict out;
        out["cells"] = cells;
        out["total_vs_first"] = cmp.total_vs_first;
        return out;
    });

    m.def(
        "selftest",
        [](std::uint64_t seed) {
            py::gil_scoped_release nogil;
            std::vector<CheckResult> c = {check_modmul(seed, 100000), check_ntt_convolution(seed),
                                          check_basis_conversion(seed), check_mod_down(seed)};
            py::gil_scoped_acquire gil;
            py::list out;
            for (auto& x : c) {
                py::dict d;
                d["id"] = x.id;
                d["pass"] = x.pass;
                d["detail"] = x.detail;
                out.append(d);
            }
            return out;
        },
        py::arg("seed") = 1);
}
