#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "memopt/cache.hpp"
#include "memopt/evolve.hpp"

namespace memopt {

// ---------------------------------------------------------------------------
// Design space: per-gene ordered value menus for the 11-gene cache genome
//   0 iSize 1 iBlock 2 iAssoc 3 iRepl 4 iPrefetch
//   5 dSize 6 dBlock 7 dAssoc 8 dRepl 9 dPrefetch 10 dWritePolicy
// ---------------------------------------------------------------------------

struct DesignSpace {
    std::vector<std::uint64_t> iSize{1024, 2048, 4096, 8192, 16384, 32768, 65536, 131072};
    std::vector<std::uint64_t> iBlock{8, 16, 32, 64};
    std::vector<std::uint32_t> iAssoc{1, 2, 4, 8, 16};
    std::vector<Replacement> iRepl{Replacement::LRU, Replacement::FIFO, Replacement::RANDOM};
    std::vector<Prefetch> iPrefetch{Prefetch::ON_DEMAND, Prefetch::ALWAYS};
    std::vector<std::uint64_t> dSize{1024, 2048, 4096, 8192, 16384, 32768, 65536, 131072};
    std::vector<std::uint64_t> dBlock{8, 16, 32, 64};
    std::vector<std::uint32_t> dAssoc{1, 2, 4, 8, 16};
    std::vector<Replacement> dRepl{Replacement::LRU, Replacement::FIFO, Replacement::RANDOM};
    std::vector<Prefetch> dPrefetch{Prefetch::ON_DEMAND, Prefetch::ALWAYS};
    std::vector<WritePolicy> dWritePolicy{WritePolicy::COPY_BACK, WritePolicy::WRITE_THROUGH};

    std::vector<int> cardinalities() const;  // 11 entries
    std::size_t pointCount() const;          // product of menu lengths
    void validate() const;
};

std::string designSpaceToJson(const DesignSpace& space);
DesignSpace designSpaceFromJson(const std::string& text);

// Index vector -> CacheConfig. Each side violating
// sizeBytes >= blockBytes*associativity is repaired by lowering associativity
// to the largest menu value that fits, then the block size if still needed;
// decode is total and idempotent on valid configurations.
CacheConfig decodeGenome(const std::vector<int>& genes, const DesignSpace& space);

// Table of baseline configurations:
//   1: 16KB/32B/4-way LRU on-demand, copy-back
//   2: 32KB/64B/4-way RANDOM always, copy-back
//   3: 32KB/64B/2-way LRU always, copy-back
CacheConfig baselineConfig(int which);
std::vector<CacheConfig> allBaselines();

// A baseline set as a JSON array of cache-config objects.
std::vector<CacheConfig> baselinesFromJson(const std::string& text);

// decode -> simulate -> (execTime, energy); pure in its inputs.
std::pair<double, double> evaluateCacheGenome(const std::vector<int>& genes,
                                              const std::vector<MemRef>& trace,
                                              const TechnologyTable& tech, const DramParams& dram,
                                              const DesignSpace& space, std::uint64_t simSeed = 0);

struct CacheFrontMember {
    CacheConfig config;
    std::vector<int> genes;
    double timeSeconds = 0;
    double energyJoules = 0;
};

struct CacheOptResult {
    std::vector<CacheFrontMember> front;  // sorted by time ascending
    std::size_t evaluations = 0;
};

// NSGA-II over the design space minimizing (execution time, energy).
// Evaluations are memoized by decoded configuration; deterministic given
// config.seed for any jobs count.
CacheOptResult optimizeCacheConfig(const std::vector<MemRef>& trace, const DesignSpace& space,
                                   const TechnologyTable& tech, const DramParams& dram,
                                   const EvolutionConfig& config);

// Exhaustive enumeration of the whole space (oracle-sized spaces only).
std::vector<CacheFrontMember> enumerateParetoFront(const std::vector<MemRef>& trace,
                                                   const DesignSpace& space,
                                                   const TechnologyTable& tech,
                                                   const DramParams& dram,
                                                   std::uint64_t simSeed = 0);

struct ImprovementRow {
    std::size_t memberIndex = 0;
    std::size_t baselineIndex = 0;
    double timePercent = 0;    // 100*(baseline-member)/baseline
    double energyPercent = 0;
};

struct ImprovementReport {
    std::vector<ImprovementRow> rows;
    // per-baseline averages over the front
    std::vector<double> avgTimePercent;
    std::vector<double> avgEnergyPercent;
};

// Negative improvements are retained, never filtered.
ImprovementReport improvementReport(const std::vector<CacheFrontMember>& front,
                                    const std::vector<CacheConfig>& baselines,
                                    const std::vector<MemRef>& trace, const TechnologyTable& tech,
                                    const DramParams& dram, std::uint64_t simSeed = 0);

std::string improvementReportToCsv(const ImprovementReport& report);
std::string frontToCsv(const std::vector<CacheFrontMember>& front);
std::string frontToJson(const std::vector<CacheFrontMember>& front);

}  // namespace memopt
