#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>
#include <set>
#include <sstream>

#include "memopt/cache.hpp"
#include "memopt/cacheopt.hpp"
#include "oracles/reference_cache.hpp"

using namespace memopt;

namespace {

CacheConfig simpleConfig(std::uint64_t size, std::uint64_t block, std::uint32_t assoc,
                         Replacement repl = Replacement::LRU,
                         Prefetch pf = Prefetch::ON_DEMAND,
                         WritePolicy wp = WritePolicy::COPY_BACK) {
    CacheConfig c;
    c.iCache = {size, block, assoc, repl, pf};
    c.dCache = {size, block, assoc, repl, pf};
    c.writePolicy = wp;
    return c;
}

std::vector<MemRef> randomTrace(std::size_t n, std::uint64_t workingSet, Rng& rng) {
    std::vector<MemRef> trace;
    trace.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        double kind = rng.uniform01();
        AccessKind k = kind < 0.4   ? AccessKind::InstrFetch
                       : kind < 0.8 ? AccessKind::DataRead
                                    : AccessKind::DataWrite;
        trace.push_back({k, rng.uniformInt(workingSet)});
    }
    return trace;
}

}  // namespace

TEST_CASE("cold miss then hits") {
    std::vector<MemRef> trace(100, MemRef{AccessKind::DataRead, 0x4000});
    for (auto config :
         {simpleConfig(1024, 16, 1), simpleConfig(4096, 64, 4, Replacement::FIFO),
          simpleConfig(2048, 32, 2, Replacement::RANDOM)}) {
        CacheStats stats = simulate(trace, config);
        CHECK(stats.dAccess == 100);
        CHECK(stats.dMiss == 1);
        CHECK(stats.iAccess == 0);
    }
}

TEST_CASE("direct-mapped conflict eviction") {
    // 2-set direct-mapped, 16B blocks: blocks 0 and 2 both map to set 0
    CacheConfig config = simpleConfig(32, 16, 1);
    std::vector<MemRef> trace{{AccessKind::DataRead, 0x00},
                              {AccessKind::DataRead, 0x20},
                              {AccessKind::DataRead, 0x00}};
    CacheStats stats = simulate(trace, config);
    CHECK(stats.dMiss == 3);
}

TEST_CASE("instruction fetches and data references route to their caches") {
    std::vector<MemRef> trace{{AccessKind::InstrFetch, 0x0},
                              {AccessKind::DataRead, 0x0},
                              {AccessKind::InstrFetch, 0x0},
                              {AccessKind::DataWrite, 0x0}};
    CacheStats stats = simulate(trace, simpleConfig(1024, 16, 1));
    CHECK(stats.iAccess == 2);
    CHECK(stats.iMiss == 1);
    CHECK(stats.dAccess == 2);
    CHECK(stats.dMiss == 1);
}

TEST_CASE("write policies: writebacks vs writethroughs") {
    // write then evict via conflicting reads in a direct-mapped cache
    CacheConfig cb = simpleConfig(32, 16, 1);
    std::vector<MemRef> trace{{AccessKind::DataWrite, 0x00},
                              {AccessKind::DataRead, 0x20},
                              {AccessKind::DataRead, 0x00}};
    CacheStats stats = simulate(trace, cb);
    CHECK(stats.writebacks == 1);  // dirty block 0 evicted by block 2
    CHECK(stats.writethroughs == 0);

    CacheConfig wt = simpleConfig(32, 16, 1, Replacement::LRU, Prefetch::ON_DEMAND,
                                  WritePolicy::WRITE_THROUGH);
    CacheStats wtStats = simulate(trace, wt);
    CHECK(wtStats.writethroughs == 1);
    CHECK(wtStats.writebacks == 0);
}

TEST_CASE("ALWAYS prefetch fetches the next block without polluting demand stats") {
    CacheConfig config = simpleConfig(1024, 16, 2, Replacement::LRU, Prefetch::ALWAYS);
    std::vector<MemRef> trace{{AccessKind::DataRead, 0x00}, {AccessKind::DataRead, 0x10}};
    CacheStats stats = simulate(trace, config);
    CHECK(stats.dAccess == 2);
    CHECK(stats.dMiss == 1);          // second read hits the prefetched block
    CHECK(stats.prefetchFetches == 2);  // block 1 after ref 1, block 2 after ref 2
}

TEST_CASE("simulator equals the reference oracle on random traces and configs") {
    Rng rng(99);
    const std::vector<std::uint64_t> sizes{1024, 2048, 4096, 8192, 16384, 32768, 65536, 131072};
    const std::vector<std::uint64_t> blocks{8, 16, 32, 64};
    const std::vector<std::uint32_t> assocs{1, 2, 4, 8, 16};
    const std::vector<Replacement> repls{Replacement::LRU, Replacement::FIFO,
                                         Replacement::RANDOM};
    const std::vector<Prefetch> prefetches{Prefetch::ON_DEMAND, Prefetch::ALWAYS};
    const std::vector<WritePolicy> writes{WritePolicy::COPY_BACK, WritePolicy::WRITE_THROUGH};

    auto randomSide = [&](CacheSideConfig& side) {
        for (;;) {
            side.sizeBytes = sizes[rng.uniformInt(sizes.size())];
            side.blockBytes = blocks[rng.uniformInt(blocks.size())];
            side.associativity = assocs[rng.uniformInt(assocs.size())];
            if (side.sizeBytes >= side.blockBytes * side.associativity) break;
        }
        side.replacement = repls[rng.uniformInt(repls.size())];
        side.prefetch = prefetches[rng.uniformInt(prefetches.size())];
    };

    for (int trial = 0; trial < 60; ++trial) {
        CacheConfig config;
        randomSide(config.iCache);
        randomSide(config.dCache);
        config.writePolicy = writes[rng.uniformInt(writes.size())];
        auto trace = randomTrace(5000, 1 << 16, rng);
        std::uint64_t seed = rng.raw();
        CacheStats mine = simulate(trace, config, seed);
        CacheStats ref = oracle::referenceSimulate(trace, config, seed);
        CHECK(mine == ref);
    }
}

TEST_CASE("LRU stack inclusion for fully associative caches") {
    Rng rng(123);
    for (int trial = 0; trial < 5; ++trial) {
        auto trace = randomTrace(4000, 1 << 14, rng);
        std::uint64_t prevMisses = ~0ull;
        for (std::uint64_t kb = 1; kb <= 64; kb *= 2) {
            std::uint64_t size = kb * 1024;
            CacheConfig config;
            config.iCache = {size, 32, static_cast<std::uint32_t>(size / 32), Replacement::LRU,
                             Prefetch::ON_DEMAND};
            config.dCache = config.iCache;
            CacheStats stats = simulate(trace, config);
            std::uint64_t misses = stats.iMiss + stats.dMiss;
            CHECK(misses <= prevMisses);
            prevMisses = misses;
        }
    }
}

TEST_CASE("working set that fits yields exactly one miss per distinct block") {
    Rng rng(5);
    auto trace = randomTrace(3000, 1 << 12, rng);  // <= 128 distinct 32B blocks
    CacheConfig config;
    config.iCache = {16384, 32, 512, Replacement::LRU, Prefetch::ON_DEMAND};
    config.dCache = config.iCache;
    std::set<std::uint64_t> iBlocks, dBlocks;
    for (const auto& r : trace) {
        if (r.kind == AccessKind::InstrFetch)
            iBlocks.insert(r.address / 32);
        else
            dBlocks.insert(r.address / 32);
    }
    CacheStats stats = simulate(trace, config);
    CHECK(stats.iMiss == iBlocks.size());
    CHECK(stats.dMiss == dBlocks.size());
}

TEST_CASE("RANDOM replacement is reproducible given the seed") {
    Rng rng(8);
    auto trace = randomTrace(2000, 1 << 13, rng);
    CacheConfig config = simpleConfig(1024, 16, 4, Replacement::RANDOM);
    CacheStats a = simulate(trace, config, 42);
    CacheStats b = simulate(trace, config, 42);
    CHECK(a == b);
}

TEST_CASE("execTime reproduces the pinned hand substitution") {
    CacheStats stats;
    stats.iAccess = 100;
    stats.iMiss = 10;
    CacheConfig config = simpleConfig(1024, 32, 1);
    TechnologyTable tech;
    tech.insert({1024, 1, 32}, {1e-9, 1e-10});
    DramParams dram{1e-7, 0.1, 1e9};
    double t = execTime(stats, config, tech, dram);
    CHECK(t == doctest::Approx(1.42e-6).epsilon(1e-12));

    CacheStats zero;
    CHECK(execTime(zero, config, tech, dram) == 0.0);

    // halving data misses strictly decreases T
    CacheStats d1 = stats;
    d1.dAccess = 50;
    d1.dMiss = 20;
    CacheStats d2 = d1;
    d2.dMiss = 10;
    CHECK(execTime(d2, config, tech, dram) < execTime(d1, config, tech, dram));
}

TEST_CASE("energy reproduces the pinned hand substitution") {
    CacheStats stats;
    stats.iAccess = 10;
    stats.iMiss = 1;
    CacheConfig config = simpleConfig(1024, 16, 1);
    TechnologyTable tech;
    tech.insert({1024, 1, 16}, {1e-9, 1e-10});
    DramParams dram{1e-7, 0.1, 1e9};
    double e = energy(stats, config, tech, dram);
    CHECK(e == doctest::Approx(1.42e-8).epsilon(1e-12));

    CacheStats zero;
    CHECK(energy(zero, config, tech, dram) == 0.0);

    // linearity in counts
    CacheStats scaled = stats;
    scaled.iAccess *= 3;
    scaled.iMiss *= 3;
    CHECK(energy(scaled, config, tech, dram) == doctest::Approx(3 * e).epsilon(1e-12));

    // extended model adds the write-traffic DRAM term
    CacheStats wr = stats;
    wr.writebacks = 5;
    CHECK(energy(wr, config, tech, dram, true) ==
          doctest::Approx(e + 5 * 0.1 * 1e-7).epsilon(1e-12));
    CHECK(energy(wr, config, tech, dram, false) == doctest::Approx(e).epsilon(1e-12));
}

TEST_CASE("technology table: duplicate and monotonicity rejection") {
    {
        std::istringstream in(
            "size,assoc,block,access_time_s,access_energy_j\n"
            "1024,1,16,1e-9,1e-11\n"
            "1024,1,16,2e-9,2e-11\n");
        CHECK_THROWS_WITH_AS(loadTechnologyTable(in), doctest::Contains("duplicate"), DataError);
    }
    {
        // 32KB cheaper than 16KB at same assoc/block: monotonicity violation
        std::istringstream in(
            "size,assoc,block,access_time_s,access_energy_j\n"
            "16384,1,16,2e-9,2e-11\n"
            "32768,1,16,1e-9,1e-11\n");
        CHECK_THROWS_WITH_AS(loadTechnologyTable(in), doctest::Contains("monotone"), DataError);
    }
    {
        std::istringstream in("wrong,header\n");
        CHECK_THROWS_AS(loadTechnologyTable(in), ParseError);
    }
    {
        // missing entries are reported by key
        TechnologyTable tech;
        tech.insert({1024, 1, 16}, {1e-9, 1e-11});
        CacheStats stats;
        CacheConfig config = simpleConfig(2048, 16, 1);
        DramParams dram;
        CHECK_THROWS_WITH_AS(execTime(stats, config, tech, dram),
                             doctest::Contains("size=2048"), DataError);
    }
}

TEST_CASE("default technology table covers the default space and round-trips") {
    TechnologyTable table = defaultTechnologyTable();
    CHECK(table.size() == 8 * 5 * 4);
    table.checkMonotonicity();

    std::istringstream in(technologyTableToCsv(table));
    TechnologyTable back = loadTechnologyTable(in);
    CHECK(back.size() == table.size());
    for (const auto& [key, entry] : table.entries()) {
        CHECK(back.lookup(key).accessTimeSec == entry.accessTimeSec);
        CHECK(back.lookup(key).accessEnergyJ == entry.accessEnergyJ);
    }
}

TEST_CASE("cache config JSON round trip and validation") {
    CacheConfig config = simpleConfig(16384, 32, 4, Replacement::RANDOM, Prefetch::ALWAYS,
                                      WritePolicy::WRITE_THROUGH);
    CacheConfig back = cacheConfigFromJson(cacheConfigToJson(config));
    CHECK(back == config);

    CacheConfig bad = config;
    bad.iCache.sizeBytes = 3000;  // not a power of two
    CHECK_THROWS_AS(bad.validate(), DataError);
    bad = config;
    bad.dCache.associativity = 0;
    CHECK_THROWS_AS(bad.validate(), DataError);
    bad = config;
    bad.iCache.sizeBytes = 64;
    bad.iCache.blockBytes = 64;
    bad.iCache.associativity = 2;  // fewer than one set
    CHECK_THROWS_AS(bad.validate(), DataError);

    CacheStats stats{1, 2, 3, 4, 5, 6, 7};
    CHECK(statsFromJson(statsToJson(stats)) == stats);
}

TEST_CASE("shipped default table loads cleanly and covers the default space") {
    // the repository ships data/tech_default.csv generated from
    // defaultTechnologyTable(); both must stay in lockstep
    std::string path = std::string(MEMOPT_SOURCE_DIR) + "/data/tech_default.csv";
    std::ifstream shipped(path);
    REQUIRE(shipped.good());
    shipped.close();
    TechnologyTable fromFile = loadTechnologyTable(path);
    TechnologyTable generated = defaultTechnologyTable();
    CHECK(fromFile.size() == generated.size());
    DesignSpace space;
    for (std::uint64_t size : space.iSize)
        for (std::uint32_t assoc : space.iAssoc)
            for (std::uint64_t block : space.iBlock) {
                TechKey key{size, assoc, block};
                CHECK(fromFile.lookup(key).accessTimeSec ==
                      generated.lookup(key).accessTimeSec);
            }
}

TEST_CASE("execTime and energy are strictly monotone in every stats count") {
    CacheConfig config = simpleConfig(4096, 32, 2);
    TechnologyTable tech = defaultTechnologyTable();
    DramParams dram;
    CacheStats base{100, 10, 200, 20, 0, 0, 0};
    double t0 = execTime(base, config, tech, dram);
    double e0 = energy(base, config, tech, dram);

    for (auto member : {&CacheStats::iAccess, &CacheStats::iMiss, &CacheStats::dAccess,
                        &CacheStats::dMiss}) {
        CacheStats s = base;
        s.*member += 1;
        CHECK(execTime(s, config, tech, dram) > t0);
        CHECK(energy(s, config, tech, dram) > e0);
    }
}
