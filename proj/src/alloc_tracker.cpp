#include "tinyintent/alloc_tracker.hpp"

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <new>

namespace {

std::atomic<std::size_t> g_live{0};
std::atomic<std::size_t> g_peak{0};
std::atomic<std::uint64_t> g_count{0};

void record_alloc(std::size_t size) {
    const std::size_t live = g_live.fetch_add(size, std::memory_order_relaxed) + size;
    g_count.fetch_add(1, std::memory_order_relaxed);
    std::size_t peak = g_peak.load(std::memory_order_relaxed);
    while (live > peak && !g_peak.compare_exchange_weak(peak, live, std::memory_order_relaxed)) {
    }
}

// Each block carries a header just below the user pointer: {size, offset back
// to the raw allocation}. The user pointer is aligned to the requested
// alignment; the raw block is over-allocated to make room.
constexpr std::size_t kMeta = 2 * sizeof(std::size_t);

void* tracked_alloc(std::size_t size, std::size_t alignment) noexcept {
    if (alignment < alignof(std::max_align_t)) alignment = alignof(std::max_align_t);
    void* raw = std::malloc(size + alignment + kMeta);
    if (!raw) return nullptr;
    std::uintptr_t user = reinterpret_cast<std::uintptr_t>(raw) + kMeta;
    user = (user + alignment - 1) / alignment * alignment;
    auto* meta = reinterpret_cast<std::size_t*>(user) - 2;
    meta[0] = size;
    meta[1] = user - reinterpret_cast<std::uintptr_t>(raw);
    record_alloc(size);
    return reinterpret_cast<void*>(user);
}

void tracked_free(void* p) noexcept {
    if (!p) return;
    auto* meta = reinterpret_cast<std::size_t*>(p) - 2;
    const std::size_t size = meta[0];
    const std::size_t offset = meta[1];
    g_live.fetch_sub(size, std::memory_order_relaxed);
    std::free(reinterpret_cast<char*>(p) - offset);
}

void* alloc_or_throw(std::size_t size, std::size_t alignment) {
    if (size == 0) size = 1;
    void* p = tracked_alloc(size, alignment);
    if (!p) throw std::bad_alloc();
    return p;
}

}  // namespace

namespace tinyintent::alloc_tracker {

bool available() { return true; }

Stats stats() {
    return Stats{g_live.load(std::memory_order_relaxed), g_peak.load(std::memory_order_relaxed),
                 g_count.load(std::memory_order_relaxed)};
}

void reset_peak() { g_peak.store(g_live.load(std::memory_order_relaxed), std::memory_order_relaxed); }

}  // namespace tinyintent::alloc_tracker

void* operator new(std::size_t size) { return alloc_or_throw(size, alignof(std::max_align_t)); }
void* operator new[](std::size_t size) { return alloc_or_throw(size, alignof(std::max_align_t)); }
void* operator new(std::size_t size, std::align_val_t align) {
    return alloc_or_throw(size, static_cast<std::size_t>(align));
}
void* operator new[](std::size_t size, std::align_val_t align) {
    return alloc_or_throw(size, static_cast<std::size_t>(align));
}
void* operator new(std::size_t size, const std::nothrow_t&) noexcept {
    return tracked_alloc(size == 0 ? 1 : size, alignof(std::max_align_t));
}
void* operator new[](std::size_t size, const std::nothrow_t&) noexcept {
    return tracked_alloc(size == 0 ? 1 : size, alignof(std::max_align_t));
}
void* operator new(std::size_t size, std::align_val_t align, const std::nothrow_t&) noexcept {
    return tracked_alloc(size == 0 ? 1 : size, static_cast<std::size_t>(align));
}
void* operator new[](std::size_t size, std::align_val_t align, const std::nothrow_t&) noexcept {
    return tracked_alloc(size == 0 ? 1 : size, static_cast<std::size_t>(align));
}

void operator delete(void* p) noexcept { tracked_free(p); }
void operator delete[](void* p) noexcept { tracked_free(p); }
void operator delete(void* p, std::size_t) noexcept { tracked_free(p); }
void operator delete[](void* p, std::size_t) noexcept { tracked_free(p); }
void operator delete(void* p, std::align_val_t) noexcept { tracked_free(p); }
void operator delete[](void* p, std::align_val_t) noexcept { tracked_free(p); }
void operator delete(void* p, std::size_t, std::align_val_t) noexcept { tracked_free(p); }
void operator delete[](void* p, std::size_t, std::align_val_t) noexcept { tracked_free(p); }
void operator delete(void* p, const std::nothrow_t&) noexcept { tracked_free(p); }
void operator delete[](void* p, const std::nothrow_t&) noexcept { tracked_free(p); }
void operator delete(void* p, std::align_val_t, const std::nothrow_t&) noexcept { tracked_free(p); }
void operator delete[](void* p, std::align_val_t, const std::nothrow_t&) noexcept { tracked_free(p); }
