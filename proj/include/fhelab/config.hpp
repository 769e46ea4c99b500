#pragma once

#include <map>
#include <string>
#include <vector>

#include "fhelab/apps.hpp"
#include "fhelab/bootstrap.hpp"
#include "fhelab/ckks.hpp"
#include "fhelab/cost.hpp"
#include "fhelab/dram.hpp"

namespace fhelab {

// data/*.yaml compiled into the library
const std::map<std::string, std::string>& embedded_files();

// Text of a config file: a path on disk when it exists, otherwise an embedded name.
std::string config_text(const std::string& name_or_path);

struct Preset {
    std::string name, description;
    ModelParams model;
    OptimizationSet opts;
    HardwareModel hw;
    Calibration cal;
    int api_level = 35;  // level of the subroutine and API rows
    int app_level = 20;  // first level after a bootstrap
};

std::vector<std::string> preset_names(const std::string& file = "presets.yaml");
// throws std::invalid_argument on an unknown name
Preset load_preset(const std::string& name, const std::string& file = "presets.yaml");
HardwareModel load_hardware(const std::string& file = "presets.yaml");
SearchSpace load_search_space(const std::string& file = "presets.yaml");

struct TargetRow {
    std::string op, label;
    int arg = 0;
    bool gated = true;
    std::map<std::string, double> cells;  // column -> published value
};

struct TargetTable {
    std::string id, title, preset;
    int level = 0;
    std::vector<std::string> gate;
    std::vector<TargetRow> rows;
};

struct ThroughputTarget {
    ExternalRow row;
    double throughput = 0;  // published, in millions
};

struct DramTarget {
    std::string mapping, pattern;
    double ms = 0;
};

struct Targets {
    double cost_tol = 0.05, throughput_tol = 0.05, dram_tol = 0.20;
    std::vector<TargetTable> cost_tables;
    double ai_improvement = 0, dram_reduction = 0, ai_improvement_min = 0, dram_reduction_min = 0;
    std::vector<ThroughputTarget> throughput;
    int search_L = 0, search_dnum = 0, search_fft = 0;
    std::vector<DramTarget> dram;
    double dram_improvement = 0, dram_improvement_lo = 0, dram_improvement_hi = 0;

    const TargetTable& table(const std::string& id) const;
    const TargetRow& row(const std::string& table_id, const std::string& op) const;
};

Targets load_targets(const std::string& file = "targets.yaml");
// embedded targets, parsed once
const Targets& targets();

struct DramSetup {
    DramConfig cfg;
    std::vector<AddressMapping> mappings;  // file order
    std::uint32_t limbs = 35, slots = 1u << 17, block_bursts = 3;
    const AddressMapping& mapping(const std::string& name) const;
};
DramSetup load_dram(const std::string& file = "dram.yaml");

struct BootstrapPlan {
    std::string name;
    CkksParams ckks;
    BootstrapParams bs;
    int input_level = 0;
    std::uint64_t seed = 1, message_seed = 1;
    bool conjugation = true;
    std::vector<int> extra_rotations;  // listed on top of the derived ones
    double max_error = 0x1p-8;
};

struct LrPlan {
    std::string name;
    CkksParams ckks;
    BootstrapParams bs;
    LrConfig lr;
    std::size_t samples = 8, features = 4;
    std::uint64_t data_seed = 5, seed = 1;
    double separation = 1.0;
    double max_weight_error = 0x1p-6;
};

BootstrapPlan load_bootstrap_plan(const std::string& name = "toy", const std::string& file = "plans.yaml");
LrPlan load_lr_plan(const std::string& name = "toy", const std::string& file = "plans.yaml");

}  // namespace fhelab
