#pragma once

#include <compare>
#include <cstdint>

namespace concurpaas {

// Simulated durations are integer microseconds; integer arithmetic keeps
// latency sums exact across long runs.
using Duration = std::uint64_t;

struct VirtualTime {
    std::uint64_t ticks = 0; // microseconds of simulated time

    auto operator<=>(const VirtualTime &) const = default;
};

inline VirtualTime operator+(VirtualTime t, Duration d) {
    return VirtualTime{t.ticks + d};
}

// Requires a >= b.
inline Duration operator-(VirtualTime a, VirtualTime b) {
    return a.ticks - b.ticks;
}

} // namespace concurpaas
