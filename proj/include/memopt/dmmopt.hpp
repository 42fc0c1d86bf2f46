#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "memopt/dmm.hpp"
#include "memopt/evolve.hpp"
#include "memopt/traces.hpp"

namespace memopt {

struct AllocProfile {
    std::map<std::uint64_t, std::uint64_t> sizeHistogram;  // size -> count
    std::vector<std::uint64_t> topSizes;  // by descending count, ties by ascending size
    std::uint64_t p50 = 0;                // nearest-rank quantiles of the size multiset
    std::uint64_t p90 = 0;
    std::uint64_t p99 = 0;
    std::uint64_t maxLiveBytes = 0;       // peak live payload
    std::size_t eventCount = 0;
};

AllocProfile profileTrace(const std::vector<AllocEvent>& trace);

struct GrammarLimits {
    std::size_t maxRegions = 5;
    std::size_t maxTopSizes = 8;
};

// BNF over the DmmSpec JSON surface. Region-count alternatives are encoded
// structurally (<r1>..<rN>); boundary terminals are the top sizes plus the
// p50/p90/p99 quantiles, each +1 (a boundary must lie above the size it keeps
// in the lower region), deduplicated and sorted. Every sentence parses as a
// DmmSpec under the normalizing decoder.
Grammar generateGrammar(const AllocProfile& profile, const GrammarLimits& limits = {});

// Phenotype (JSON sentence) -> DmmSpec via the normalizing decoder.
DmmSpec decodeDmmPhenotype(const std::string& phenotype);

struct DmmFitness {
    double value = 0;  // 0.5*T/tKng + 0.5*M/mLea
    double simTime = 0;
    double peakMemory = 0;
    bool valid = true;
};

struct DmmNormalizers {
    double tKng = 0;  // KNG simTime on the trace
    double mLea = 0;  // LEA peakMemory on the trace
};

DmmNormalizers computeNormalizers(const std::vector<AllocEvent>& trace);

DmmFitness dmmFitness(const DmmSpec& spec, const std::vector<AllocEvent>& trace,
                      const DmmNormalizers& refs);

struct ReferenceComparison {
    std::string name;
    double objectivePercent = 0;    // 100*(F_ref - F_best)/F_ref
    double performancePercent = 0;  // 100*(T_ref - T_best)/T_ref
    double memoryPercent = 0;       // 100*(M_ref - M_best)/M_ref
    DmmFitness refFitness;
};

struct DmmOptResult {
    DmmSpec bestSpec;
    DmmFitness bestFitness;
    std::string bestPhenotype;
    std::vector<ReferenceComparison> comparisons;  // KNG, LEA, FIB, S10, EXA
    std::vector<double> fitnessLog;                // population best per generation
    std::size_t evaluations = 0;
};

// Full pipeline: profile -> grammar -> normalizers -> GE with SDT/ROG.
DmmOptResult optimizeDmm(const std::vector<AllocEvent>& trace, const EvolutionConfig& config,
                         const GrammarLimits& limits = {});

// All sentences of a grammar, by exhaustive derivation (throws when the
// grammar is recursive or yields more than `limit` sentences). Oracle support
// for single-region grammars.
std::vector<std::string> enumerateSentences(const Grammar& grammar, std::size_t limit = 100000);

std::string comparisonsToCsv(const std::vector<ReferenceComparison>& comparisons);
std::string fitnessLogToCsv(const std::vector<double>& log);

}  // namespace memopt
