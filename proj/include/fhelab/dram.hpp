#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fhelab {

struct DramTiming {
    // cycles of the command clock
    int tRCD = 16, tRP = 16, tRAS = 39, tCL = 16, tRTP = 9;
    int tCCD_S = 4, tCCD_L = 5, tBURST = 4;
    int tRRD_S = 4, tRRD_L = 6, tFAW = 26, tRTRS = 2;
};

struct DramConfig {
    std::string label = "ddr4-2400";
    int channels = 1, ranks = 2, bank_groups = 4, banks_per_group = 4;
    std::uint32_t rows = 65536, columns = 1024;  // columns counted in bus words
    int bus_bytes = 8, burst_length = 8;
    double clock_hz = 1.2e9;  // DDR: two transfers per clock
    DramTiming t;

    int burst_bytes() const { return bus_bytes * burst_length; }
    std::uint64_t row_bytes() const { return std::uint64_t(columns) * bus_bytes; }
    double peak_bandwidth() const { return 2 * clock_hz * bus_bytes * channels; }
    void validate() const;
};

enum class DramField { offset, column, row, bank_group, bank, rank, channel };
const char* field_name(DramField f);

// Consumes the index slot | limb << slot_bits from the least significant bit upward.
// Each segment hands `width` bits to a field, filling that field from its low bit.
struct AddressMapping {
    std::string name;
    int slot_bits = 17, limb_bits = 6;
    struct Segment {
        DramField field;
        int width;
    };
    std::vector<Segment> segments;

    static AddressMapping baseline();
    static AddressMapping optimized();

    struct Location {
        std::uint32_t channel = 0, rank = 0, bank_group = 0, bank = 0, row = 0, column = 0, offset = 0;
    };
    Location map(std::uint64_t slot, std::uint64_t limb) const;
    // checks segment widths cover the index and fit the geometry
    void validate(const DramConfig& cfg) const;
};

enum class AccessPattern { limb_wise, slot_wise };
const char* pattern_name(AccessPattern p);

struct AccessTrace {
    AccessPattern pattern = AccessPattern::limb_wise;
    // one request per burst: (first slot of the burst, limb)
    std::vector<std::pair<std::uint32_t, std::uint32_t>> requests;

    // limbs x slots of 8-byte words; slot_wise reads block_bursts bursts of every limb before moving on
    static AccessTrace make(AccessPattern p, std::uint32_t limbs, std::uint32_t slots, const DramConfig& cfg,
                            std::uint32_t block_bursts = 3);
};

struct SimResult {
    double seconds = 0;
    std::uint64_t cycles = 0, row_activations = 0, row_hits = 0, same_group_pairs = 0, bytes = 0;
    double ms() const { return seconds * 1e3; }
};

SimResult simulate(const AccessTrace& trace, const AddressMapping& mapping, const DramConfig& cfg);

struct MappingComparison {
    struct Cell {
        std::string mapping;
        AccessPattern pattern;
        SimResult result;
    };
    std::vector<Cell> cells;
    // per mapping slot/limb time ratio, and total time of first mapping over each other mapping
    std::vector<std::pair<std::string, double>> slot_over_limb;
    std::vector<std::pair<std::string, double>> total_vs_first;
    std::string csv() const;
};

MappingComparison compare_mappings(const std::vector<AccessTrace>& traces, const std::vector<AddressMapping>& mappings,
                                   const DramConfig& cfg);

}  // namespace fhelab
