#include "memopt/dmmopt.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace memopt {

AllocProfile profileTrace(const std::vector<AllocEvent>& trace) {
    validateAllocTrace(trace);
    AllocProfile profile;
    profile.eventCount = trace.size();

    std::uint64_t live = 0;
    std::map<std::uint64_t, std::uint64_t> liveSizes;  // id -> size
    for (const auto& e : trace) {
        if (e.op == AllocOp::Alloc) {
            ++profile.sizeHistogram[e.size];
            liveSizes[e.id] = e.size;
            live += e.size;
            profile.maxLiveBytes = std::max(profile.maxLiveBytes, live);
        } else {
            live -= liveSizes.at(e.id);
            liveSizes.erase(e.id);
        }
    }
    if (profile.sizeHistogram.empty()) throw DataError("trace contains no allocations");

    // top sizes: descending count, ties ascending size
    std::vector<std::pair<std::uint64_t, std::uint64_t>> bySize(profile.sizeHistogram.begin(),
                                                                profile.sizeHistogram.end());
    std::stable_sort(bySize.begin(), bySize.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    for (const auto& [size, count] : bySize) profile.topSizes.push_back(size);

    // nearest-rank quantiles over the size multiset
    std::uint64_t total = 0;
    for (const auto& [size, count] : profile.sizeHistogram) total += count;
    auto quantile = [&](double q) {
        std::uint64_t rank = static_cast<std::uint64_t>(std::ceil(q * static_cast<double>(total)));
        rank = std::max<std::uint64_t>(rank, 1);
        std::uint64_t cum = 0;
        for (const auto& [size, count] : profile.sizeHistogram) {
            cum += count;
            if (cum >= rank) return size;
        }
        return profile.sizeHistogram.rbegin()->first;
    };
    profile.p50 = quantile(0.50);
    profile.p90 = quantile(0.90);
    profile.p99 = quantile(0.99);
    return profile;
}

Grammar generateGrammar(const AllocProfile& profile, const GrammarLimits& limits) {
    if (profile.sizeHistogram.empty()) throw DataError("cannot build a grammar from an empty profile");
    if (limits.maxRegions == 0) throw DataError("maxRegions must be >= 1");

    // Boundary pool: top sizes and quantiles, each +1, deduplicated, sorted.
    std::vector<std::uint64_t> pool;
    for (std::size_t i = 0; i < profile.topSizes.size() && i < limits.maxTopSizes; ++i)
        pool.push_back(profile.topSizes[i] + 1);
    pool.push_back(profile.p50 + 1);
    pool.push_back(profile.p90 + 1);
    pool.push_back(profile.p99 + 1);
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());

    auto nt = [](const std::string& name) { return GrammarSymbol{false, name}; };
    auto t = [](const std::string& text) { return GrammarSymbol{true, text}; };

    std::vector<GrammarRule> rules;

    rules.push_back({"dmm", {{t("{\"regions\":["), nt("r1"), t("]}")}}});

    // <rk> ::= <last> | <mid> , <r(k+1)>   (structural region counting)
    for (std::size_t k = 1; k <= limits.maxRegions; ++k) {
        GrammarRule rule;
        rule.name = "r" + std::to_string(k);
        if (k == limits.maxRegions) {
            rule.alternatives = {{nt("last")}};
        } else {
            rule.alternatives = {{nt("last")},
                                 {nt("mid"), t(","), nt("r" + std::to_string(k + 1))}};
        }
        rules.push_back(std::move(rule));
    }

    rules.push_back(
        {"mid", {{t("{\"policy\":"), nt("policy"), t(",\"hi\":"), nt("boundary"), t("}")}}});
    rules.push_back({"last", {{t("{\"policy\":"), nt("policy"), t("}")}}});

    rules.push_back({"policy",
                     {{nt("exact")}, {nt("pow2")}, {nt("bbin")}, {nt("bfib")}, {nt("flist")}}});
    rules.push_back(
        {"exact",
         {{t("{\"kind\":\"segregated_exact\",\"granularity\":"), nt("granularity"), t("}")}}});
    rules.push_back({"granularity", {{t("1")}, {t("8")}}});
    rules.push_back({"pow2", {{t("{\"kind\":\"segregated_pow2\"}")}}});
    rules.push_back({"bbin",
                     {{t("{\"kind\":\"buddy_binary\",\"coalesce\":"), nt("bool"), t(",\"split\":"),
                       nt("bool"), t("}")}}});
    rules.push_back({"bfib",
                     {{t("{\"kind\":\"buddy_fib\",\"coalesce\":"), nt("bool"), t(",\"split\":"),
                       nt("bool"), t("}")}}});
    rules.push_back({"flist",
                     {{t("{\"kind\":\"free_list\",\"fit\":"), nt("fit"), t(",\"order\":"),
                       nt("order"), t(",\"coalesce\":"), nt("bool"), t(",\"split\":"), nt("bool"),
                       t("}")}}});
    rules.push_back({"fit", {{t("\"first\"")}, {t("\"best\"")}}});
    rules.push_back({"order", {{t("\"fifo\"")}, {t("\"lifo\"")}, {t("\"addr\"")}}});
    rules.push_back({"bool", {{t("true")}, {t("false")}}});

    GrammarRule boundary;
    boundary.name = "boundary";
    for (std::uint64_t b : pool) boundary.alternatives.push_back({t(std::to_string(b))});
    rules.push_back(std::move(boundary));

    return Grammar(std::move(rules));
}

DmmSpec decodeDmmPhenotype(const std::string& phenotype) {
    return dmmSpecFromJson(phenotype, /*normalize=*/true);
}

DmmNormalizers computeNormalizers(const std::vector<AllocEvent>& trace) {
    DmmNormalizers refs;
    DmmMetrics kng = replay(buildReference(ReferenceDmm::KNG), trace);
    DmmMetrics lea = replay(buildReference(ReferenceDmm::LEA), trace);
    refs.tKng = static_cast<double>(kng.simTime);
    refs.mLea = static_cast<double>(lea.peakMemory);
    if (refs.tKng <= 0 || refs.mLea <= 0)
        throw DataError("degenerate normalizers (empty trace?)");
    return refs;
}

DmmFitness dmmFitness(const DmmSpec& spec, const std::vector<AllocEvent>& trace,
                      const DmmNormalizers& refs) {
    DmmFitness fitness;
    if (refs.tKng <= 0 || refs.mLea <= 0) throw DataError("normalizers must be positive");
    try {
        DmmMetrics m = replay(spec, trace);
        fitness.simTime = static_cast<double>(m.simTime);
        fitness.peakMemory = static_cast<double>(m.peakMemory);
        fitness.value = 0.5 * fitness.simTime / refs.tKng + 0.5 * fitness.peakMemory / refs.mLea;
    } catch (const DataError&) {
        fitness.value = kWorstFitness;
        fitness.valid = false;
    }
    return fitness;
}

DmmOptResult optimizeDmm(const std::vector<AllocEvent>& trace, const EvolutionConfig& config,
                         const GrammarLimits& limits) {
    AllocProfile profile = profileTrace(trace);
    Grammar grammar = generateGrammar(profile, limits);
    DmmNormalizers refs = computeNormalizers(trace);

    GeProblem problem;
    problem.grammar = grammar;
    problem.codonLength = 200;
    problem.codonMax = 256;
    problem.evaluate = [&](const std::string& phenotype) {
        DmmSpec spec = decodeDmmPhenotype(phenotype);
        DmmFitness f = dmmFitness(spec, trace, refs);
        if (!f.valid) throw DataError("replay failed");
        return f.value;
    };

    GeResult ge = geRun(problem, config);
    if (!ge.best.valid || ge.bestPhenotype.empty())
        throw DataError("grammar produced no feasible DMM");

    DmmOptResult result;
    result.bestSpec = decodeDmmPhenotype(ge.bestPhenotype);
    result.bestPhenotype = ge.bestPhenotype;
    result.bestFitness = dmmFitness(result.bestSpec, trace, refs);
    result.fitnessLog = ge.bestPerGeneration;
    result.evaluations = ge.evaluations;

    for (ReferenceDmm ref : allReferenceDmms()) {
        ReferenceComparison cmp;
        cmp.name = toString(ref);
        cmp.refFitness = dmmFitness(buildReference(ref), trace, refs);
        cmp.objectivePercent =
            100.0 * (cmp.refFitness.value - result.bestFitness.value) / cmp.refFitness.value;
        cmp.performancePercent =
            100.0 * (cmp.refFitness.simTime - result.bestFitness.simTime) / cmp.refFitness.simTime;
        cmp.memoryPercent = 100.0 * (cmp.refFitness.peakMemory - result.bestFitness.peakMemory) /
                            cmp.refFitness.peakMemory;
        result.comparisons.push_back(std::move(cmp));
    }
    return result;
}

namespace {

void expandSentences(const Grammar& grammar, std::vector<std::string>& out,
                     std::vector<GrammarSymbol>& pending, std::string& prefix,
                     std::size_t limit, std::size_t depth) {
    if (depth > 64) throw DataError("grammar too deep for exhaustive enumeration");
    if (out.size() > limit) throw DataError("sentence enumeration limit exceeded");
    // find first nonterminal
    std::size_t i = 0;
    std::string saved = prefix;
    while (i < pending.size() && pending[i].terminal) {
        prefix += pending[i].text;
        ++i;
    }
    if (i == pending.size()) {
        out.push_back(prefix);
        prefix = saved;
        return;
    }
    const GrammarRule& rule = grammar.rule(pending[i].text);
    std::vector<GrammarSymbol> rest(pending.begin() + static_cast<std::ptrdiff_t>(i) + 1,
                                    pending.end());
    for (const auto& alt : rule.alternatives) {
        std::vector<GrammarSymbol> next = alt;
        next.insert(next.end(), rest.begin(), rest.end());
        expandSentences(grammar, out, next, prefix, limit, depth + 1);
    }
    prefix = saved;
}

}  // namespace

std::vector<std::string> enumerateSentences(const Grammar& grammar, std::size_t limit) {
    std::vector<std::string> out;
    std::vector<GrammarSymbol> start{{false, grammar.startSymbol()}};
    std::string prefix;
    expandSentences(grammar, out, start, prefix, limit, 0);
    return out;
}

std::string comparisonsToCsv(const std::vector<ReferenceComparison>& comparisons) {
    std::string out = "reference,objective_pct,performance_pct,memory_pct,ref_fitness\n";
    for (const auto& c : comparisons) {
        out += c.name + ',' + formatDouble(c.objectivePercent) + ',' +
               formatDouble(c.performancePercent) + ',' + formatDouble(c.memoryPercent) + ',' +
               formatDouble(c.refFitness.value) + '\n';
    }
    return out;
}

std::string fitnessLogToCsv(const std::vector<double>& log) {
    std::string out = "generation,best_fitness\n";
    for (std::size_t g = 0; g < log.size(); ++g)
        out += std::to_string(g) + ',' + formatDouble(log[g]) + '\n';
    return out;
}

}  // namespace memopt
