#include <cmath>
#include <vector>

#include "doctest.h"
#include "fhelab/config.hpp"
#include "fhelab/dram.hpp"

using namespace fhelab;

namespace {

constexpr double kTimeTol = 0.20;

bool within(double got, double want, double tol) { return std::fabs(got - want) <= tol * want; }

std::uint64_t linear(const AddressMapping::Location& l, const DramConfig& c) {
    std::uint64_t x = l.channel;
    x = x * c.ranks + l.rank;
    x = x * c.bank_groups + l.bank_group;
    x = x * c.banks_per_group + l.bank;
    x = x * c.rows + l.row;
    x = x * (c.columns / c.burst_length) + l.column;
    return x * c.burst_length + l.offset;
}

void check_bijective(const AddressMapping& m, const DramConfig& c) {
    const std::uint64_t space = std::uint64_t(c.channels) * c.ranks * c.bank_groups * c.banks_per_group * c.rows * c.columns;
    std::vector<bool> seen(space, false);
    std::uint64_t collisions = 0, outside = 0;
    for (std::uint64_t limb = 0; limb < (1ULL << m.limb_bits); ++limb)
        for (std::uint64_t slot = 0; slot < (1ULL << m.slot_bits); ++slot) {
            auto x = linear(m.map(slot, limb), c);
            if (x >= space) {
                ++outside;
                continue;
            }
            collisions += seen[x];
            seen[x] = true;
        }
    CHECK(outside == 0);
    CHECK(collisions == 0);
}

}  // namespace

TEST_CASE("default geometry peaks at 19.2 GB/s") {
    DramConfig c;
    CHECK(c.peak_bandwidth() == doctest::Approx(19.2e9));
    CHECK(c.burst_bytes() == 64);
    CHECK(c.row_bytes() == 8192);
}

TEST_CASE("one burst costs activate plus CAS plus transfer") {
    DramConfig c;
    AccessTrace t;
    t.requests = {{0, 0}};
    auto r = simulate(t, AddressMapping::baseline(), c);
    CHECK(r.cycles == std::uint64_t(c.t.tRCD + c.t.tCL + c.t.tBURST));
    CHECK(r.row_activations == 1);
}

TEST_CASE("both presets are bijections over 2^17 slots x 64 limbs") {
    DramConfig c;
    check_bijective(AddressMapping::baseline(), c);
    check_bijective(AddressMapping::optimized(), c);
}

TEST_CASE("bijection at reduced geometry") {
    DramConfig c;
    c.rows = 64;
    c.columns = 64;
    c.ranks = 1;
    c.bank_groups = 2;
    c.banks_per_group = 2;
    AddressMapping m{"small", 8, 3,
                     {{DramField::offset, 3}, {DramField::column, 3}, {DramField::bank_group, 1}, {DramField::row, 2},
                      {DramField::bank, 1}, {DramField::row, 1}}};
    m.validate(c);
    check_bijective(m, c);
    AddressMapping bad = m;
    bad.segments.back().width = 2;
    CHECK_THROWS(bad.validate(c));
}

TEST_CASE("conservation, bus bound and activation count") {
    DramConfig c;
    const std::uint32_t limbs = 35, slots = 1u << 17;
    for (auto m : {AddressMapping::baseline(), AddressMapping::optimized()})
        for (auto p : {AccessPattern::limb_wise, AccessPattern::slot_wise}) {
            auto tr = AccessTrace::make(p, limbs, slots, c);
            auto r = simulate(tr, m, c);
            CHECK(r.bytes == tr.requests.size() * 64);
            CHECK(r.bytes == std::uint64_t(limbs) * slots * 8);
            CHECK(r.seconds >= r.bytes / c.peak_bandwidth());
        }
    auto r = simulate(AccessTrace::make(AccessPattern::limb_wise, limbs, slots, c), AddressMapping::baseline(), c);
    const std::uint64_t per_limb = (std::uint64_t(slots) * 8 + c.row_bytes() - 1) / c.row_bytes();
    CHECK(r.row_activations == per_limb * limbs);
}

TEST_CASE("published transfer times within 20 percent") {
    const auto setup = load_dram();
    const DramConfig& c = setup.cfg;
    const auto& t = targets();
    std::vector<AccessTrace> traces = {AccessTrace::make(AccessPattern::limb_wise, setup.limbs, setup.slots, c),
                                       AccessTrace::make(AccessPattern::slot_wise, setup.limbs, setup.slots, c)};
    auto cmp = compare_mappings(traces, setup.mappings, c);
    REQUIRE(cmp.cells.size() == 4);
    REQUIRE(t.dram.size() == 4);
    for (int i = 0; i < 4; ++i) {
        INFO(cmp.cells[i].mapping << " " << pattern_name(cmp.cells[i].pattern) << " " << cmp.cells[i].result.ms());
        CHECK(cmp.cells[i].mapping == t.dram[i].mapping);
        CHECK(pattern_name(cmp.cells[i].pattern) == t.dram[i].pattern);
        CHECK(within(cmp.cells[i].result.ms(), t.dram[i].ms, kTimeTol));
    }
    double improvement = cmp.total_vs_first[1].second;
    CHECK(improvement >= t.dram_improvement_lo);
    CHECK(improvement <= t.dram_improvement_hi);
    CHECK(cmp.slot_over_limb[0].second >= 3.0);
    CHECK(within(cmp.cells[3].result.ms(), cmp.cells[2].result.ms(), 0.25));
    CHECK(cmp.csv().find("optimized,slot-wise") != std::string::npos);
}

TEST_CASE("config file agrees with the built-in presets") {
    const auto setup = load_dram();
    DramConfig d;
    CHECK(setup.cfg.peak_bandwidth() == d.peak_bandwidth());
    CHECK(setup.cfg.t.tCCD_L == d.t.tCCD_L);
    CHECK(setup.cfg.t.tFAW == d.t.tFAW);
    for (const auto& builtin : {AddressMapping::baseline(), AddressMapping::optimized()}) {
        const auto& m = setup.mapping(builtin.name);
        REQUIRE(m.segments.size() == builtin.segments.size());
        for (std::size_t i = 0; i < m.segments.size(); ++i) {
            CHECK(m.segments[i].field == builtin.segments[i].field);
            CHECK(m.segments[i].width == builtin.segments[i].width);
        }
    }
    CHECK_THROWS(setup.mapping("nope"));
}

TEST_CASE("deterministic and guarded") {
    DramConfig c;
    auto tr = AccessTrace::make(AccessPattern::slot_wise, 8, 1u << 12, c);
    auto a = simulate(tr, AddressMapping::optimized(), c), b = simulate(tr, AddressMapping::optimized(), c);
    CHECK(a.cycles == b.cycles);
    CHECK(a.row_activations == b.row_activations);
    AccessTrace bad;
    bad.requests = {{1u << 17, 0}};
    CHECK_THROWS(simulate(bad, AddressMapping::baseline(), c));
    bad.requests = {{0, 64}};
    CHECK_THROWS(simulate(bad, AddressMapping::baseline(), c));
    CHECK_THROWS(AccessTrace::make(AccessPattern::limb_wise, 1, 12, c));
}
