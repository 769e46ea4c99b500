#include "fhelab/dram.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <deque>
#include <sstream>
#include <stdexcept>

namespace fhelab {

namespace {

int log2_exact(std::uint64_t v, const char* what) {
    if (v == 0 || !std::has_single_bit(v)) throw std::invalid_argument(std::string(what) + " must be a power of two");
    return std::countr_zero(v);
}

}  // namespace

void DramConfig::validate() const {
    log2_exact(channels, "channels");
    log2_exact(ranks, "ranks");
    log2_exact(bank_groups, "bank_groups");
    log2_exact(banks_per_group, "banks_per_group");
    log2_exact(rows, "rows");
    log2_exact(columns, "columns");
    log2_exact(burst_length, "burst_length");
    if (bus_bytes <= 0 || clock_hz <= 0) throw std::invalid_argument("bus width and clock must be positive");
    if (static_cast<std::uint32_t>(burst_length) > columns) throw std::invalid_argument("burst longer than a row");
}

const char* field_name(DramField f) {
    switch (f) {
        case DramField::offset: return "offset";
        case DramField::column: return "column";
        case DramField::row: return "row";
        case DramField::bank_group: return "bank_group";
        case DramField::bank: return "bank";
        case DramField::rank: return "rank";
        case DramField::channel: return "channel";
    }
    return "?";
}

const char* pattern_name(AccessPattern p) { return p == AccessPattern::limb_wise ? "limb-wise" : "slot-wise"; }

// Slots are 8-byte words; three slot bits pick the word inside a 64-byte burst.
AddressMapping AddressMapping::baseline() {
    // slots in the low 17 bits, limbs right above: every limb of the ciphertext sits in one bank
    return {"baseline", 17, 6,
            {{DramField::offset, 3}, {DramField::column, 7}, {DramField::row, 7}, {DramField::row, 6}}};
}

AddressMapping AddressMapping::optimized() {
    // slots: 7 column bits + row bits; limbs: bank group, bank and rank bits, then 2 row bits
    return {"optimized",
            17,
            6,
            {{DramField::offset, 3},
             {DramField::column, 7},
             {DramField::row, 7},
             {DramField::bank_group, 2},
             {DramField::bank, 1},
             {DramField::rank, 1},
             {DramField::row, 2}}};
}

AddressMapping::Location AddressMapping::map(std::uint64_t slot, std::uint64_t limb) const {
    if (slot >> slot_bits || limb >> limb_bits) throw std::invalid_argument("address outside the mapped space");
    std::uint64_t idx = slot | (limb << slot_bits);
    Location loc;
    std::array<int, 7> filled{};
    for (auto& s : segments) {
        std::uint32_t v = static_cast<std::uint32_t>(idx & ((1ULL << s.width) - 1));
        idx >>= s.width;
        int& at = filled[static_cast<int>(s.field)];
        std::uint32_t* dst = nullptr;
        switch (s.field) {
            case DramField::offset: dst = &loc.offset; break;
            case DramField::column: dst = &loc.column; break;
            case DramField::row: dst = &loc.row; break;
            case DramField::bank_group: dst = &loc.bank_group; break;
            case DramField::bank: dst = &loc.bank; break;
            case DramField::rank: dst = &loc.rank; break;
            case DramField::channel: dst = &loc.channel; break;
        }
        *dst |= v << at;
        at += s.width;
    }
    return loc;
}

void AddressMapping::validate(const DramConfig& cfg) const {
    cfg.validate();
    std::array<int, 7> width{};
    int total = 0;
    for (auto& s : segments) {
        if (s.width < 0) throw std::invalid_argument("negative segment width");
        width[static_cast<int>(s.field)] += s.width;
        total += s.width;
    }
    if (total != slot_bits + limb_bits) throw std::invalid_argument("mapping " + name + " does not cover the index bits");
    const int word_bits = log2_exact(cfg.burst_length, "burst_length");
    auto cap = [&](DramField f, int bits) {
        if (width[static_cast<int>(f)] > bits)
            throw std::invalid_argument("mapping " + name + ": field " + field_name(f) + " exceeds geometry");
    };
    if (width[static_cast<int>(DramField::offset)] != word_bits)
        throw std::invalid_argument("mapping " + name + ": offset must select the word inside a burst");
    cap(DramField::column, log2_exact(cfg.columns, "columns") - word_bits);
    cap(DramField::row, log2_exact(cfg.rows, "rows"));
    cap(DramField::bank_group, log2_exact(cfg.bank_groups, "bank_groups"));
    cap(DramField::bank, log2_exact(cfg.banks_per_group, "banks_per_group"));
    cap(DramField::rank, log2_exact(cfg.ranks, "ranks"));
    cap(DramField::channel, log2_exact(cfg.channels, "channels"));
}

AccessTrace AccessTrace::make(AccessPattern p, std::uint32_t limbs, std::uint32_t slots, const DramConfig& cfg,
                              std::uint32_t block_bursts) {
    const std::uint32_t per_burst = cfg.burst_length;
    if (slots % per_burst) throw std::invalid_argument("slot count must be a multiple of the burst");
    if (block_bursts == 0) throw std::invalid_argument("slot block must hold at least one burst");
    const std::uint32_t bursts = slots / per_burst;
    AccessTrace t;
    t.pattern = p;
    t.requests.reserve(std::size_t(bursts) * limbs);
    if (p == AccessPattern::limb_wise) {
        for (std::uint32_t l = 0; l < limbs; ++l)
            for (std::uint32_t b = 0; b < bursts; ++b) t.requests.emplace_back(b * per_burst, l);
    } else {
        for (std::uint32_t b0 = 0; b0 < bursts; b0 += block_bursts)
            for (std::uint32_t l = 0; l < limbs; ++l)
                for (std::uint32_t b = b0; b < std::min(bursts, b0 + block_bursts); ++b)
                    t.requests.emplace_back(b * per_burst, l);
    }
    return t;
}

// In-order data return with activate look-ahead: a request may open its row while
// earlier requests are still transferring, but column reads leave in trace order.
SimResult simulate(const AccessTrace& trace, const AddressMapping& mapping, const DramConfig& cfg) {
    mapping.validate(cfg);
    const DramTiming& t = cfg.t;
    struct Bank {
        std::int64_t open_row = -1;
        std::int64_t act = 0, last_cas = -(1LL << 40), ready = 0;
    };
    struct Rank {
        std::deque<std::int64_t> acts;  // last four activates
        std::int64_t last_act = -(1LL << 40);
        int last_act_group = -1;
    };
    const std::size_t nbanks = std::size_t(cfg.channels) * cfg.ranks * cfg.bank_groups * cfg.banks_per_group;
    std::vector<Bank> banks(nbanks);
    std::vector<Rank> ranks(std::size_t(cfg.channels) * cfg.ranks);
    SimResult r;
    std::int64_t last_cas = -(1LL << 40), bus_free = 0, last_act_issue = 0, end = 0;
    int last_group = -1, last_rank = -1;
    for (auto [slot, limb] : trace.requests) {
        auto loc = mapping.map(slot, limb);
        if (loc.row >= cfg.rows) throw std::invalid_argument("row outside geometry");
        const std::size_t rank_id = std::size_t(loc.channel) * cfg.ranks + loc.rank;
        const int group = static_cast<int>(rank_id * cfg.bank_groups + loc.bank_group);
        Bank& b = banks[(rank_id * cfg.bank_groups + loc.bank_group) * cfg.banks_per_group + loc.bank];
        Rank& rk = ranks[rank_id];
        std::int64_t cas_ready;
        if (b.open_row == loc.row) {
            ++r.row_hits;
            cas_ready = b.act + t.tRCD;
        } else {
            std::int64_t act = std::max(b.ready, last_act_issue);
            if (b.open_row >= 0) {
                std::int64_t pre = std::max(b.act + t.tRAS, b.last_cas + t.tRTP);
                act = std::max(act, pre + t.tRP);
            }
            act = std::max(act, rk.last_act + (rk.last_act_group == group ? t.tRRD_L : t.tRRD_S));
            if (rk.acts.size() == 4) act = std::max(act, rk.acts.front() + t.tFAW);
            rk.acts.push_back(act);
            if (rk.acts.size() > 4) rk.acts.pop_front();
            rk.last_act = act;
            rk.last_act_group = group;
            last_act_issue = act;
            b.act = act;
            b.open_row = loc.row;
            ++r.row_activations;
            cas_ready = act + t.tRCD;
        }
        std::int64_t gap = t.tCCD_S;
        if (last_rank >= 0 && static_cast<std::size_t>(last_rank) != rank_id) gap = t.tBURST + t.tRTRS;
        else if (last_group == group) {
            gap = t.tCCD_L;
            ++r.same_group_pairs;
        }
        std::int64_t cas = std::max({cas_ready, last_cas + gap, bus_free - t.tCL});
        b.last_cas = cas;
        b.ready = std::max(b.ready, cas);
        last_cas = cas;
        last_group = group;
        last_rank = static_cast<int>(rank_id);
        bus_free = cas + t.tCL + t.tBURST;
        end = bus_free;
        r.bytes += cfg.burst_bytes();
    }
    r.cycles = static_cast<std::uint64_t>(end);
    r.seconds = end / cfg.clock_hz;
    return r;
}

MappingComparison compare_mappings(const std::vector<AccessTrace>& traces, const std::vector<AddressMapping>& mappings,
                                   const DramConfig& cfg) {
    MappingComparison out;
    std::vector<double> totals;
    for (auto& m : mappings) {
        double limb = 0, slot = 0, total = 0;
        for (auto& tr : traces) {
            auto res = simulate(tr, m, cfg);
            out.cells.push_back({m.name, tr.pattern, res});
            total += res.seconds;
            (tr.pattern == AccessPattern::limb_wise ? limb : slot) += res.seconds;
        }
        if (limb > 0) out.slot_over_limb.emplace_back(m.name, slot / limb);
        totals.push_back(total);
    }
    for (std::size_t i = 0; i < mappings.size(); ++i) out.total_vs_first.emplace_back(mappings[i].name, totals[0] / totals[i]);
    return out;
}

std::string MappingComparison::csv() const {
    std::ostringstream os;
    os << "mapping,pattern,ms,activations,row_hits,bytes\n";
    for (auto& c : cells)
        os << c.mapping << ',' << pattern_name(c.pattern) << ',' << c.result.ms() << ',' << c.result.row_activations
           << ',' << c.result.row_hits << ',' << c.result.bytes << '\n';
    return os.str();
}

}  // namespace fhelab
