#pragma once

#include <cstddef>
#include <cstdint>

// Process-wide heap accounting via replacement operator new/delete. Only
// linked into binaries that measure memory (the CLI, the benchmark harness
// and its tests) -- in particular never into the python extension, where
// replacing the global allocator would affect the host interpreter.

namespace tinyintent::alloc_tracker {

struct Stats {
    std::size_t live_bytes = 0;
    std::size_t peak_bytes = 0;
    std::uint64_t alloc_count = 0;
};

// True when the replacement allocator is linked into this binary.
bool available();

Stats stats();

// Starts a measurement window: peak := live.
void reset_peak();

}  // namespace tinyintent::alloc_tracker
