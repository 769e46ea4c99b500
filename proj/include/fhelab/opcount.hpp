#pragma once

#include <cstdint>

namespace fhelab {

// Modular op tally charged by the limb-level kernels. Counts follow the same
// per-primitive convention the cost model uses, so the two can be compared.
struct OpCounter {
    std::uint64_t mults = 0;
    std::uint64_t adds = 0;
    bool enabled = false;
};

OpCounter& op_counter();

inline void charge(std::uint64_t mults, std::uint64_t adds) {
    auto& c = op_counter();
    if (c.enabled) {
        c.mults += mults;
        c.adds += adds;
    }
}

class CountScope {
public:
    CountScope() : saved_(op_counter()) { op_counter() = OpCounter{0, 0, true}; }
    ~CountScope() { op_counter() = saved_; }
    OpCounter result() const { return op_counter(); }

private:
    OpCounter saved_;
};

}  // namespace fhelab
