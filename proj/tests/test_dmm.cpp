#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sstream>

#include "memopt/dmm.hpp"
#include "oracles/reference_heap.hpp"

using namespace memopt;

namespace {

std::vector<AllocEvent> randomTrace(std::size_t events, std::uint64_t seed,
                                    std::vector<std::pair<std::uint64_t, double>> classes = {
                                        {24, 0.3}, {100, 0.3}, {300, 0.2}, {1500, 0.2}}) {
    AllocTraceSpec spec;
    spec.events = events;
    spec.sizeClasses = std::move(classes);
    spec.meanLifetime = 12;
    spec.seed = seed;
    return genSyntheticAllocTrace(spec);
}

}  // namespace

TEST_CASE("reference DMM construction: pinned shapes") {
    DmmSpec kng = buildReference(ReferenceDmm::KNG);
    REQUIRE(kng.regions.size() == 1);
    CHECK((kng.regions[0].policy.kind == DmmPolicyKind::SegregatedPow2));

    DmmSpec s10 = buildReference(ReferenceDmm::S10);
    REQUIRE(s10.regions.size() == 10);
    std::uint64_t expectHi = 16;
    for (std::size_t i = 0; i + 1 < s10.regions.size(); ++i) {
        CHECK(s10.regions[i].hi == expectHi);
        CHECK((s10.regions[i].policy.kind == DmmPolicyKind::FreeList));
        CHECK((s10.regions[i].policy.fit == FitStrategy::First));
        CHECK((s10.regions[i].policy.order == FreeOrder::Fifo));
        expectHi *= 2;
    }
    CHECK(s10.regions.back().hi == kOpenEnd);

    DmmSpec lea = buildReference(ReferenceDmm::LEA);
    REQUIRE(lea.regions.size() == 2);
    CHECK(lea.regions[0].hi == 512);
    CHECK(lea.regions[0].policy.granularity == 8);
    CHECK((lea.regions[1].policy.fit == FitStrategy::Best));
    CHECK((lea.regions[1].policy.order == FreeOrder::Addr));

    for (auto kind : allReferenceDmms()) buildReference(kind).validate();
}

TEST_CASE("fibonacci class sizes") {
    const auto& fib = fibonacciClassSizes();
    CHECK(fib[0] == 16);
    CHECK(fib[1] == 32);
    CHECK(fib[2] == 48);
    CHECK(fib[3] == 80);
    CHECK(fib[4] == 128);
    CHECK(fib[5] == 208);
    for (std::size_t i = 2; i < 20; ++i) CHECK(fib[i] == fib[i - 1] + fib[i - 2]);
}

TEST_CASE("empty trace yields all-zero metrics") {
    DmmMetrics m = replay(buildReference(ReferenceDmm::KNG), {});
    CHECK(m == DmmMetrics{});
}

TEST_CASE("KNG single alloc: pinned pow2 class and growth") {
    DmmSpec kng = buildReference(ReferenceDmm::KNG);
    std::vector<AllocEvent> trace{{AllocOp::Alloc, 1, 100}};
    DmmMetrics m = replay(kng, trace);
    // pow2 class of 100+8: one 128-byte block carved from a 4096-byte growth
    CHECK(m.peakMemory == 4096);
    CHECK(m.splits == 0);
    CHECK(m.coalesces == 0);
    CHECK(m.allocs == 1);
    // fresh-block carve costs no inspections
    CHECK(m.accesses == 0);
    CHECK(m.simTime == 1);

    FragmentationReport frag = fragmentationReport(kng, trace);
    CHECK(frag.internalBytes == 128 - 100 - 8);
}

TEST_CASE("EXA internal fragmentation is exactly zero") {
    DmmSpec exa = buildReference(ReferenceDmm::EXA);
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        auto trace = randomTrace(300, seed);
        FragmentationReport frag = fragmentationReport(exa, trace);
        CHECK(frag.internalBytes == 0);
    }
}

TEST_CASE("replay rejects double frees and unknown ids with event indices") {
    DmmSpec kng = buildReference(ReferenceDmm::KNG);
    {
        std::vector<AllocEvent> trace{{AllocOp::Alloc, 1, 10},
                                      {AllocOp::Free, 1, 0},
                                      {AllocOp::Free, 1, 0}};
        CHECK_THROWS_WITH_AS(replay(kng, trace), doctest::Contains("event 2"), DataError);
    }
    {
        std::vector<AllocEvent> trace{{AllocOp::Free, 5, 0}};
        CHECK_THROWS_WITH_AS(replay(kng, trace), doctest::Contains("event 0"), DataError);
    }
    {
        std::vector<AllocEvent> trace{{AllocOp::Alloc, 1, 10}, {AllocOp::Alloc, 1, 12}};
        CHECK_THROWS_WITH_AS(replay(kng, trace), doctest::Contains("duplicate"), DataError);
    }
}

TEST_CASE("replay metrics equal the brute-force oracle on all five references") {
    for (auto kind : allReferenceDmms()) {
        DmmSpec spec = buildReference(kind);
        for (std::uint64_t seed = 0; seed < 8; ++seed) {
            auto trace = randomTrace(500, seed * 31 + 7);
            ReplayOptions debug;
            debug.debugChecks = true;  // tiling + membership + conservation
            DmmMetrics mine = replay(spec, trace, debug);
            DmmMetrics ref = oracle::referenceReplay(spec, trace);
            INFO("reference ", toString(kind), " seed ", seed);
            CHECK(mine == ref);
        }
    }
}

TEST_CASE("oracle equality for synthesized mixed-policy specs") {
    // exercise buddy-binary and LIFO/ADDR free lists that the references skip
    DmmSpec spec;
    spec.regions.clear();
    DmmPolicy bbin;
    bbin.kind = DmmPolicyKind::BuddyBinary;
    bbin.coalesce = true;
    bbin.split = true;
    DmmPolicy lifo;
    lifo.kind = DmmPolicyKind::FreeList;
    lifo.fit = FitStrategy::First;
    lifo.order = FreeOrder::Lifo;
    lifo.coalesce = true;
    lifo.split = true;
    DmmPolicy addr;
    addr.kind = DmmPolicyKind::FreeList;
    addr.fit = FitStrategy::Best;
    addr.order = FreeOrder::Addr;
    addr.coalesce = false;
    addr.split = false;
    spec.regions.push_back({1, 128, bbin});
    spec.regions.push_back({128, 1024, lifo});
    spec.regions.push_back({1024, kOpenEnd, addr});
    spec.validate();

    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto trace = randomTrace(400, seed + 100,
                                 {{40, 0.3}, {90, 0.2}, {500, 0.3}, {3000, 0.2}});
        ReplayOptions debug;
        debug.debugChecks = true;
        DmmMetrics mine = replay(spec, trace, debug);
        DmmMetrics ref = oracle::referenceReplay(spec, trace);
        INFO("seed ", seed);
        CHECK(mine == ref);
    }
}

TEST_CASE("buddy-fib no-coalesce variant matches the oracle") {
    DmmSpec spec;
    DmmPolicy p;
    p.kind = DmmPolicyKind::BuddyFib;
    p.coalesce = false;
    p.split = true;
    spec.regions = {{1, kOpenEnd, p}};
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        auto trace = randomTrace(400, seed + 55);
        ReplayOptions debug;
        debug.debugChecks = true;
        CHECK(replay(spec, trace, debug) == oracle::referenceReplay(spec, trace));
    }
}

TEST_CASE("peak memory is the final heap extent and payload is conserved") {
    DmmSpec lea = buildReference(ReferenceDmm::LEA);
    auto trace = randomTrace(600, 8);
    std::uint64_t peakSoFar = 0;
    std::uint64_t live = 0;
    std::map<std::uint64_t, std::uint64_t> liveSize;
    for (std::size_t k = 0; k < trace.size(); ++k) {
        std::vector<AllocEvent> prefix(trace.begin(), trace.begin() + k + 1);
        // conservation on the prefix
        if (trace[k].op == AllocOp::Alloc) {
            live += trace[k].size;
            liveSize[trace[k].id] = trace[k].size;
        } else {
            live -= liveSize[trace[k].id];
        }
        if (k % 97 == 0) {
            DmmMetrics m = replay(lea, prefix);
            CHECK(m.peakMemory >= peakSoFar);   // monotone in prefix length
            CHECK(m.peakMemory >= live);        // covers live payload
            peakSoFar = m.peakMemory;
        }
    }
}

TEST_CASE("segregated policies: simTime independent of free order, no splits") {
    DmmSpec exa = buildReference(ReferenceDmm::EXA);
    // same multiset of allocs, two different free orders
    std::vector<AllocEvent> forward{{AllocOp::Alloc, 1, 64}, {AllocOp::Alloc, 2, 64},
                                    {AllocOp::Alloc, 3, 64}, {AllocOp::Free, 1, 0},
                                    {AllocOp::Free, 2, 0},   {AllocOp::Free, 3, 0},
                                    {AllocOp::Alloc, 4, 64}, {AllocOp::Alloc, 5, 64}};
    std::vector<AllocEvent> backward{{AllocOp::Alloc, 1, 64}, {AllocOp::Alloc, 2, 64},
                                     {AllocOp::Alloc, 3, 64}, {AllocOp::Free, 3, 0},
                                     {AllocOp::Free, 2, 0},   {AllocOp::Free, 1, 0},
                                     {AllocOp::Alloc, 4, 64}, {AllocOp::Alloc, 5, 64}};
    DmmMetrics a = replay(exa, forward);
    DmmMetrics b = replay(exa, backward);
    CHECK(a.simTime == b.simTime);
    CHECK(a.splits == 0);
    CHECK(a.coalesces == 0);
}

TEST_CASE("binary buddy splits halve and coalescing reconstructs the parent") {
    DmmSpec spec;
    DmmPolicy p;
    p.kind = DmmPolicyKind::BuddyBinary;
    p.coalesce = true;
    p.split = true;
    spec.regions = {{1, kOpenEnd, p}};

    // allocate 8 (class 16), free it, allocate 100 (class 128):
    // growth gives 4096 -> carve 16; free; then 128 carved from reserve
    std::vector<AllocEvent> trace{{AllocOp::Alloc, 1, 8},
                                  {AllocOp::Free, 1, 0},
                                  {AllocOp::Alloc, 2, 100}};
    ReplayOptions debug;
    debug.debugChecks = true;
    DmmMetrics m = replay(spec, trace, debug);
    CHECK(m.peakMemory == 4096);

    // force splits: alloc a big block, free it, then alloc small with split:
    // small alloc pops the freed 2048-class block and splits down to 16
    std::vector<AllocEvent> trace2{{AllocOp::Alloc, 1, 2000},  // class 2048
                                   {AllocOp::Free, 1, 0},
                                   {AllocOp::Alloc, 2, 8}};  // class 16
    DmmMetrics m2 = replay(spec, trace2, debug);
    CHECK(m2.splits == 7);  // 2048 -> 16 halves seven times
    // freeing the small block cascades all the way back up
    std::vector<AllocEvent> trace3 = trace2;
    trace3.push_back({AllocOp::Free, 2, 0});
    DmmMetrics m3 = replay(spec, trace3, debug);
    CHECK(m3.coalesces == 7);
}

TEST_CASE("fibonacci buddy split classes are consecutive") {
    DmmSpec fib = buildReference(ReferenceDmm::FIB);
    // class 208 block, freed, then a 16-class alloc forces a split chain
    std::vector<AllocEvent> trace{{AllocOp::Alloc, 1, 200},  // class 208 (200+8)
                                  {AllocOp::Free, 1, 0},
                                  {AllocOp::Alloc, 2, 8}};  // class 16
    ReplayOptions debug;
    debug.debugChecks = true;
    DmmMetrics m = replay(fib, trace, debug);
    CHECK(m.splits > 0);
    CHECK(replay(fib, trace) == oracle::referenceReplay(fib, trace));
}

TEST_CASE("coalescing lowers external fragmentation on an alternating trace") {
    DmmPolicy base;
    base.kind = DmmPolicyKind::FreeList;
    base.fit = FitStrategy::First;
    base.order = FreeOrder::Addr;
    base.split = true;

    DmmSpec on, off;
    base.coalesce = true;
    on.regions = {{1, kOpenEnd, base}};
    base.coalesce = false;
    off.regions = {{1, kOpenEnd, base}};

    // many small allocs, free all, then large allocs that only a coalesced
    // heap can serve in place
    std::vector<AllocEvent> trace;
    std::uint64_t id = 1;
    for (int i = 0; i < 32; ++i) trace.push_back({AllocOp::Alloc, id++, 100});
    for (std::uint64_t f = 1; f < id; ++f) trace.push_back({AllocOp::Free, f, 0});
    for (int i = 0; i < 4; ++i) trace.push_back({AllocOp::Alloc, id++, 800});

    FragmentationReport fragOn = fragmentationReport(on, trace);
    FragmentationReport fragOff = fragmentationReport(off, trace);
    CHECK(fragOn.externalBytes <= fragOff.externalBytes);
    CHECK(fragOn.peakMemory <= fragOff.peakMemory);
}

TEST_CASE("DMM spec JSON round trip, strict and normalizing") {
    DmmSpec lea = buildReference(ReferenceDmm::LEA);
    DmmSpec back = dmmSpecFromJson(dmmSpecToJson(lea));
    CHECK(back == lea);

    // normalizing decode sorts and deduplicates bounds
    std::string scrambled = R"({
      "regions": [
        {"policy": {"kind": "segregated_pow2"}},
        {"policy": {"kind": "segregated_exact", "granularity": 8}, "hi": 512},
        {"policy": {"kind": "free_list", "fit": "best", "order": "addr"}, "hi": 64},
        {"policy": {"kind": "segregated_exact", "granularity": 1}, "hi": 512}
      ]
    })";
    DmmSpec norm = dmmSpecFromJson(scrambled, true);
    REQUIRE(norm.regions.size() == 3);
    CHECK(norm.regions[0].hi == 64);
    CHECK((norm.regions[0].policy.kind == DmmPolicyKind::FreeList));
    CHECK(norm.regions[1].hi == 512);
    CHECK(norm.regions[1].policy.granularity == 8);  // first of the duplicates
    CHECK(norm.regions[2].hi == kOpenEnd);

    // strict mode rejects the same input
    CHECK_THROWS_AS(dmmSpecFromJson(scrambled, false), DataError);
}

TEST_CASE("spec validation rejects gaps, overlaps and bad lasts") {
    DmmSpec bad;
    bad.regions = {{1, 100, {}}, {200, kOpenEnd, {}}};
    CHECK_THROWS_AS(bad.validate(), DataError);
    bad.regions = {{1, 100, {}}};
    CHECK_THROWS_AS(bad.validate(), DataError);
    bad.regions = {{2, kOpenEnd, {}}};
    CHECK_THROWS_AS(bad.validate(), DataError);

    DmmSpec good;
    good.regions = {{1, 100, {}}, {100, kOpenEnd, {}}};
    good.validate();
    CHECK(good.regionFor(1) == 0);
    CHECK(good.regionFor(99) == 0);
    CHECK(good.regionFor(100) == 1);
    CHECK(good.regionFor(1 << 30) == 1);
}

TEST_CASE("debug event log emits one row per event") {
    DmmSpec kng = buildReference(ReferenceDmm::KNG);
    auto trace = randomTrace(50, 3);
    std::ostringstream log;
    ReplayOptions options;
    options.eventLog = &log;
    replay(kng, trace, options);
    std::size_t lines = 0;
    for (char c : log.str())
        if (c == '\n') ++lines;
    CHECK(lines == trace.size());
}
