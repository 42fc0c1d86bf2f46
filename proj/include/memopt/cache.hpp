#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "memopt/traces.hpp"

namespace memopt {

// ---------------------------------------------------------------------------
// Cache configuration (split I/D, single level)
// ---------------------------------------------------------------------------

enum class Replacement : std::uint8_t { LRU, FIFO, RANDOM };
enum class Prefetch : std::uint8_t { ON_DEMAND, ALWAYS };
enum class WritePolicy : std::uint8_t { COPY_BACK, WRITE_THROUGH };

std::string toString(Replacement r);
std::string toString(Prefetch p);
std::string toString(WritePolicy w);
Replacement replacementFromString(const std::string& s);
Prefetch prefetchFromString(const std::string& s);
WritePolicy writePolicyFromString(const std::string& s);

struct CacheSideConfig {
    std::uint64_t sizeBytes = 16 * 1024;
    std::uint64_t blockBytes = 32;
    std::uint32_t associativity = 4;
    Replacement replacement = Replacement::LRU;
    Prefetch prefetch = Prefetch::ON_DEMAND;

    std::uint64_t numSets() const { return sizeBytes / (blockBytes * associativity); }
    bool operator==(const CacheSideConfig&) const = default;
};

struct CacheConfig {
    CacheSideConfig iCache;
    CacheSideConfig dCache;
    WritePolicy writePolicy = WritePolicy::COPY_BACK;  // data cache only

    void validate() const;  // power-of-two sizes/blocks, >= 1 set per side
    bool operator==(const CacheConfig&) const = default;
};

std::string cacheConfigToJson(const CacheConfig& config);
CacheConfig cacheConfigFromJson(const std::string& text);

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

struct CacheStats {
    std::uint64_t iAccess = 0;
    std::uint64_t iMiss = 0;
    std::uint64_t dAccess = 0;
    std::uint64_t dMiss = 0;
    std::uint64_t prefetchFetches = 0;  // prefetch-triggered fills, not demand traffic
    std::uint64_t writebacks = 0;       // dirty evictions under COPY_BACK
    std::uint64_t writethroughs = 0;    // data writes under WRITE_THROUGH

    bool operator==(const CacheStats&) const = default;
};

std::string statsToJson(const CacheStats& stats);
CacheStats statsFromJson(const std::string& text);

// Trace-driven split I/D simulation.
//
// Semantics (fixed; the reference simulator in the test suite mirrors them):
//  - instruction fetches go to the I-cache, data reads/writes to the D-cache;
//  - set index = (address / blockBytes) mod numSets;
//  - misses fill the referenced block, evicting per replacement policy; an
//    invalid way is always filled first; LRU updates recency on hits and
//    fills, FIFO only on fills, RANDOM picks a victim from one shared
//    mt19937_64 seeded with `seed` (consumed in trace order, only when a
//    full set must evict: way = raw() % associativity);
//  - ALWAYS prefetch fetches block+1 into the same cache after every demand
//    access; a present block is left untouched (no recency update), an absent
//    one is filled (counted in prefetchFetches, evictions as usual);
//  - writes allocate under both policies; COPY_BACK marks the block dirty and
//    counts a writeback when a dirty block is evicted (demand or prefetch
//    fill); WRITE_THROUGH counts every data write and never dirties blocks;
//  - dirty blocks remaining at the end are not flushed.
CacheStats simulate(const std::vector<MemRef>& trace, const CacheConfig& config,
                    std::uint64_t seed = 0);

// ---------------------------------------------------------------------------
// Technology table and timing/energy models
// ---------------------------------------------------------------------------

struct TechEntry {
    double accessTimeSec = 0;
    double accessEnergyJ = 0;
};

struct TechKey {
    std::uint64_t sizeBytes = 0;
    std::uint32_t associativity = 0;
    std::uint64_t blockBytes = 0;

    auto operator<=>(const TechKey&) const = default;
};

// Keyed by (size, associativity, block); access time and energy must strictly
// increase with size at fixed (assoc, block) and with associativity at fixed
// (size, block). Violations are rejected on load.
class TechnologyTable {
public:
    void insert(const TechKey& key, const TechEntry& entry);
    const TechEntry& lookup(const TechKey& key) const;  // DataError naming the key
    const TechEntry& lookup(const CacheSideConfig& side) const;
    std::size_t size() const { return entries_.size(); }
    const std::map<TechKey, TechEntry>& entries() const { return entries_; }

    void checkMonotonicity() const;

private:
    std::map<TechKey, TechEntry> entries_;
};

// CSV with header `size,assoc,block,access_time_s,access_energy_j`.
TechnologyTable loadTechnologyTable(std::istream& in);
TechnologyTable loadTechnologyTable(const std::string& path);
std::string technologyTableToCsv(const TechnologyTable& table);

// Synthetic monotone table covering the given value menus.
TechnologyTable defaultTechnologyTable(const std::vector<std::uint64_t>& sizes,
                                       const std::vector<std::uint32_t>& assocs,
                                       const std::vector<std::uint64_t>& blocks);
TechnologyTable defaultTechnologyTable();  // default design-space menus

struct DramParams {
    double accessTimeSec = 1e-7;
    double accessPowerW = 0.5;
    double bandwidthBytesPerSec = 1e9;

    void validate() const;
};

std::string dramToJson(const DramParams& dram);
DramParams dramFromJson(const std::string& text);

// Execution-time model:
//   T = Ia*It + Im*Td + Im*Bi/bw + Da*Dt + Dm*Td + Dm*Bd/bw
double execTime(const CacheStats& stats, const CacheConfig& config, const TechnologyTable& tech,
                const DramParams& dram);

// Energy model (CPU term dropped):
//   E = Ia*Ie + Da*De + Im*Ie*Bi + Dm*De*Bd
//     + Im*Pd*(Td + Bi/bw) + Dm*Pd*(Td + Bd/bw)
// An extended variant additionally charges Pd*Td per writeback/writethrough;
// it is off by default.
double energy(const CacheStats& stats, const CacheConfig& config, const TechnologyTable& tech,
              const DramParams& dram, bool extendedWriteModel = false);

}  // namespace memopt
