#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "memopt/traces.hpp"

namespace memopt {

// ---------------------------------------------------------------------------
// Dynamic-memory-manager descriptions
//
// A DMM is an ordered list of regions partitioning the request-size axis
// [1, inf); the region owning a request's size serves it, with no fallback.
// Policies:
//   SEGREGATED_EXACT(granularity g): block = roundUp(request+header, g);
//     one free list per distinct block size.
//   SEGREGATED_POW2: block = max(16, nextPow2(request+header)).
//   BUDDY_BINARY{coalesce,split}: classes 16,32,64,...; splitting class k
//     yields two class k-1 blocks.
//   BUDDY_FIB{coalesce,split}: classes 16,32,48,80,128,... (c_k = c_{k-1} +
//     c_{k-2}); splitting class k yields a class k-1 left and class k-2 right
//     block.
//   FREE_LIST{fit,order,coalesce,split}: one list per region; FIRST fit stops
//     at the first block with size >= request+header, BEST fit inspects the
//     whole list and picks the smallest fitting block (ties to the earliest).
//     Order fixes both traversal and insertion: FIFO appends, LIFO prepends,
//     ADDR keeps the list address-sorted.
//
// Replay semantics (the reference oracle in tests/ mirrors this contract):
//  * Headers live inside the block: payload capacity = blockSize - header.
//  * Growth: when nothing in the region serves a needed block of B bytes the
//    heap grows by roundUp(B, quantum) and the grown range becomes one fresh
//    block owned by the region. Free-list regions serve the request from it
//    directly (splitting per their flag); segregated and buddy regions keep
//    it as a "reserve" block and carve exact block sizes from its front.
//    Reserve carving is not a split.
//  * Segregated alloc: pop the exact class list, else carve the first
//    fitting reserve block (FIFO scan), else grow. Frees push the block back
//    onto its class list (LIFO). Never splits or coalesces.
//  * Buddy alloc: pop the exact class list; else (split enabled) pop the
//    smallest nonempty larger class that can split down to the target and
//    split downward, keeping the smaller child whenever the target class is
//    still reachable from it (fib classes 0 and 1 cannot split; binary class
//    0 cannot) and pushing the sibling onto its class list; else carve
//    reserve; else grow. Frees (coalesce enabled) merge split-siblings
//    recursively whenever the sibling is free and unsplit, then push onto the
//    class list. Blocks carved from reserve have no sibling and never
//    coalesce.
//  * Free-list alloc: traverse per fit; split when the flag is on and the
//    remainder is >= header+16 bytes (remainder re-inserted per order), else
//    serve the whole block. Frees (coalesce enabled) absorb free
//    address-neighbors of the same region (left first, then right), then
//    insert per order.
//  * Cost model: simTime = allocs + frees + accesses + 2*splits +
//    3*coalesces, where `accesses` counts free-structure nodes inspected:
//    +1 per popped class-list node, +1 per reserve block examined, +1 per
//    free-list node visited by the fit scan (BEST always scans the whole
//    list). Insertions, map bookkeeping and freshly grown blocks cost 0.
//  * peakMemory is the maximum heap extent (brk), which never shrinks.
// ---------------------------------------------------------------------------

enum class DmmPolicyKind : std::uint8_t {
    SegregatedExact,
    SegregatedPow2,
    BuddyBinary,
    BuddyFib,
    FreeList,
};

enum class FitStrategy : std::uint8_t { First, Best };
enum class FreeOrder : std::uint8_t { Fifo, Lifo, Addr };

std::string toString(DmmPolicyKind k);
std::string toString(FitStrategy f);
std::string toString(FreeOrder o);

struct DmmPolicy {
    DmmPolicyKind kind = DmmPolicyKind::SegregatedExact;
    std::uint64_t granularity = 1;  // SegregatedExact only
    bool coalesce = false;          // buddies and free lists
    bool split = false;
    FitStrategy fit = FitStrategy::First;  // free lists only
    FreeOrder order = FreeOrder::Fifo;

    bool operator==(const DmmPolicy&) const = default;
};

constexpr std::uint64_t kOpenEnd = ~std::uint64_t{0};  // hi of the last region

struct DmmRegion {
    std::uint64_t lo = 1;          // inclusive request size
    std::uint64_t hi = kOpenEnd;   // exclusive; kOpenEnd = infinity
    DmmPolicy policy;

    bool operator==(const DmmRegion&) const = default;
};

struct DmmSpec {
    std::vector<DmmRegion> regions{{1, kOpenEnd, {}}};
    std::uint64_t headerBytes = 8;
    std::uint64_t heapGrowthQuantum = 4096;

    // Regions ascending, disjoint, covering [1, inf).
    void validate() const;
    std::size_t regionFor(std::uint64_t requestSize) const;

    bool operator==(const DmmSpec&) const = default;
};

std::string dmmSpecToJson(const DmmSpec& spec);
// strict = reject unsorted/overlapping regions; normalize = sort regions by
// upper bound, drop duplicate bounds and rebuild the lo/hi chain (the decode
// rule for grammar-derived specs).
DmmSpec dmmSpecFromJson(const std::string& text, bool normalize = false);

// Reference allocators: KNG (pow2 Kingsley), LEA (two-region simplified
// Doug Lea), FIB (Fibonacci buddy), S10 (ten segregated first-fit lists at
// boundaries 16*2^k), EXA (exact segregated list).
enum class ReferenceDmm { KNG, LEA, FIB, S10, EXA };
DmmSpec buildReference(ReferenceDmm kind);
std::string toString(ReferenceDmm r);
std::vector<ReferenceDmm> allReferenceDmms();

// ---------------------------------------------------------------------------
// Replay
// ---------------------------------------------------------------------------

struct DmmMetrics {
    std::uint64_t simTime = 0;     // weighted operation count
    std::uint64_t peakMemory = 0;  // max heap extent, bytes
    std::uint64_t accesses = 0;    // free-structure nodes inspected
    std::uint64_t allocs = 0;
    std::uint64_t frees = 0;
    std::uint64_t splits = 0;
    std::uint64_t coalesces = 0;

    bool operator==(const DmmMetrics&) const = default;
};

std::string metricsToJson(const DmmMetrics& m);

struct ReplayOptions {
    // Verify heap tiling, free-structure membership and payload conservation
    // after every event (slow).
    bool debugChecks = false;
    std::ostream* eventLog = nullptr;  // CSV heap-event log
};

// Replays an allocation trace; throws DataError (naming the event index) on
// double frees, unknown ids or duplicate live ids.
DmmMetrics replay(const DmmSpec& spec, const std::vector<AllocEvent>& trace,
                  const ReplayOptions& options = {});

struct FragmentationReport {
    // Measured right after the first event at which the heap reaches its
    // final peak extent.
    std::uint64_t internalBytes = 0;  // sum over live blocks of block-request-header
    std::uint64_t externalBytes = 0;  // free bytes in blocks too small for the
                                      // largest live request at that moment
    std::uint64_t peakMemory = 0;
};

FragmentationReport fragmentationReport(const DmmSpec& spec,
                                        const std::vector<AllocEvent>& trace);

// Fibonacci class sizes used by BUDDY_FIB (16, 32, 48, 80, 128, ...).
const std::vector<std::uint64_t>& fibonacciClassSizes();

}  // namespace memopt
