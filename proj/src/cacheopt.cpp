#include "memopt/cacheopt.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <sstream>

#include "json.hpp"

namespace memopt {

using nlohmann::json;

std::vector<int> DesignSpace::cardinalities() const {
    return {static_cast<int>(iSize.size()),     static_cast<int>(iBlock.size()),
            static_cast<int>(iAssoc.size()),    static_cast<int>(iRepl.size()),
            static_cast<int>(iPrefetch.size()), static_cast<int>(dSize.size()),
            static_cast<int>(dBlock.size()),    static_cast<int>(dAssoc.size()),
            static_cast<int>(dRepl.size()),     static_cast<int>(dPrefetch.size()),
            static_cast<int>(dWritePolicy.size())};
}

std::size_t DesignSpace::pointCount() const {
    std::size_t n = 1;
    for (int c : cardinalities()) n *= static_cast<std::size_t>(c);
    return n;
}

void DesignSpace::validate() const {
    for (int c : cardinalities())
        if (c == 0) throw DataError("design-space menu must be nonempty");
    auto ascendingPow2 = [](const auto& v) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            if ((v[i] & (v[i] - 1)) != 0) return false;
            if (i > 0 && v[i] <= v[i - 1]) return false;
        }
        return true;
    };
    if (!ascendingPow2(iSize) || !ascendingPow2(dSize) || !ascendingPow2(iBlock) ||
        !ascendingPow2(dBlock))
        throw DataError("sizes and blocks must be ascending powers of two");
}

namespace {

template <typename T>
json menuToJson(const std::vector<T>& menu) {
    json arr = json::array();
    for (const T& v : menu) {
        if constexpr (std::is_same_v<T, Replacement> || std::is_same_v<T, Prefetch> ||
                      std::is_same_v<T, WritePolicy>)
            arr.push_back(toString(v));
        else
            arr.push_back(v);
    }
    return arr;
}

}  // namespace

std::string designSpaceToJson(const DesignSpace& space) {
    json j;
    j["iSize"] = menuToJson(space.iSize);
    j["iBlock"] = menuToJson(space.iBlock);
    j["iAssoc"] = menuToJson(space.iAssoc);
    j["iRepl"] = menuToJson(space.iRepl);
    j["iPrefetch"] = menuToJson(space.iPrefetch);
    j["dSize"] = menuToJson(space.dSize);
    j["dBlock"] = menuToJson(space.dBlock);
    j["dAssoc"] = menuToJson(space.dAssoc);
    j["dRepl"] = menuToJson(space.dRepl);
    j["dPrefetch"] = menuToJson(space.dPrefetch);
    j["dWritePolicy"] = menuToJson(space.dWritePolicy);
    return j.dump(2);
}

DesignSpace designSpaceFromJson(const std::string& text) {
    try {
        json j = json::parse(text);
        DesignSpace s;
        auto numbers64 = [&](const char* key, std::vector<std::uint64_t>& out) {
            if (j.contains(key)) out = j.at(key).get<std::vector<std::uint64_t>>();
        };
        auto numbers32 = [&](const char* key, std::vector<std::uint32_t>& out) {
            if (j.contains(key)) out = j.at(key).get<std::vector<std::uint32_t>>();
        };
        numbers64("iSize", s.iSize);
        numbers64("iBlock", s.iBlock);
        numbers32("iAssoc", s.iAssoc);
        numbers64("dSize", s.dSize);
        numbers64("dBlock", s.dBlock);
        numbers32("dAssoc", s.dAssoc);
        if (j.contains("iRepl")) {
            s.iRepl.clear();
            for (const auto& v : j.at("iRepl")) s.iRepl.push_back(replacementFromString(v));
        }
        if (j.contains("dRepl")) {
            s.dRepl.clear();
            for (const auto& v : j.at("dRepl")) s.dRepl.push_back(replacementFromString(v));
        }
        if (j.contains("iPrefetch")) {
            s.iPrefetch.clear();
            for (const auto& v : j.at("iPrefetch")) s.iPrefetch.push_back(prefetchFromString(v));
        }
        if (j.contains("dPrefetch")) {
            s.dPrefetch.clear();
            for (const auto& v : j.at("dPrefetch")) s.dPrefetch.push_back(prefetchFromString(v));
        }
        if (j.contains("dWritePolicy")) {
            s.dWritePolicy.clear();
            for (const auto& v : j.at("dWritePolicy"))
                s.dWritePolicy.push_back(writePolicyFromString(v));
        }
        s.validate();
        return s;
    } catch (const json::exception& e) {
        throw DataError(std::string("bad design-space JSON: ") + e.what());
    }
}

namespace {

// Largest menu associativity with block*assoc <= size; falls back to the
// smallest menu value when none fits (the block repair then applies).
std::uint32_t repairAssoc(std::uint64_t size, std::uint64_t block,
                          const std::vector<std::uint32_t>& menu, std::uint32_t current) {
    if (size >= block * static_cast<std::uint64_t>(current)) return current;
    std::uint32_t best = 0;
    for (std::uint32_t a : menu)
        if (block * static_cast<std::uint64_t>(a) <= size) best = std::max(best, a);
    return best != 0 ? best : *std::min_element(menu.begin(), menu.end());
}

std::uint64_t repairBlock(std::uint64_t size, std::uint32_t assoc,
                          const std::vector<std::uint64_t>& menu, std::uint64_t current) {
    if (size >= current * assoc) return current;
    std::uint64_t best = 0;
    for (std::uint64_t b : menu)
        if (b * assoc <= size) best = std::max(best, b);
    return best != 0 ? best : *std::min_element(menu.begin(), menu.end());
}

}  // namespace

CacheConfig decodeGenome(const std::vector<int>& genes, const DesignSpace& space) {
    if (genes.size() != 11) throw DataError("cache genome must have 11 genes");
    auto card = space.cardinalities();
    for (std::size_t g = 0; g < genes.size(); ++g)
        if (genes[g] < 0 || genes[g] >= card[g])
            throw DataError("gene " + std::to_string(g) + " out of range");

    CacheConfig config;
    config.iCache.sizeBytes = space.iSize[genes[0]];
    config.iCache.blockBytes = space.iBlock[genes[1]];
    config.iCache.associativity = space.iAssoc[genes[2]];
    config.iCache.replacement = space.iRepl[genes[3]];
    config.iCache.prefetch = space.iPrefetch[genes[4]];
    config.dCache.sizeBytes = space.dSize[genes[5]];
    config.dCache.blockBytes = space.dBlock[genes[6]];
    config.dCache.associativity = space.dAssoc[genes[7]];
    config.dCache.replacement = space.dRepl[genes[8]];
    config.dCache.prefetch = space.dPrefetch[genes[9]];
    config.writePolicy = space.dWritePolicy[genes[10]];

    config.iCache.associativity = repairAssoc(config.iCache.sizeBytes, config.iCache.blockBytes,
                                              space.iAssoc, config.iCache.associativity);
    config.iCache.blockBytes = repairBlock(config.iCache.sizeBytes, config.iCache.associativity,
                                           space.iBlock, config.iCache.blockBytes);
    config.dCache.associativity = repairAssoc(config.dCache.sizeBytes, config.dCache.blockBytes,
                                              space.dAssoc, config.dCache.associativity);
    config.dCache.blockBytes = repairBlock(config.dCache.sizeBytes, config.dCache.associativity,
                                           space.dBlock, config.dCache.blockBytes);
    config.validate();
    return config;
}

CacheConfig baselineConfig(int which) {
    CacheConfig config;
    switch (which) {
        case 1:
            config.iCache = {16384, 32, 4, Replacement::LRU, Prefetch::ON_DEMAND};
            config.dCache = {16384, 32, 4, Replacement::LRU, Prefetch::ON_DEMAND};
            break;
        case 2:
            config.iCache = {32768, 64, 4, Replacement::RANDOM, Prefetch::ALWAYS};
            config.dCache = {32768, 64, 4, Replacement::RANDOM, Prefetch::ALWAYS};
            break;
        case 3:
            config.iCache = {32768, 64, 2, Replacement::LRU, Prefetch::ALWAYS};
            config.dCache = {32768, 64, 2, Replacement::LRU, Prefetch::ALWAYS};
            break;
        default:
            throw DataError("baseline index must be 1, 2 or 3");
    }
    config.writePolicy = WritePolicy::COPY_BACK;
    return config;
}

std::vector<CacheConfig> allBaselines() {
    return {baselineConfig(1), baselineConfig(2), baselineConfig(3)};
}

std::vector<CacheConfig> baselinesFromJson(const std::string& text) {
    try {
        json arr = json::parse(text);
        if (!arr.is_array() || arr.empty())
            throw DataError("baseline file must hold a nonempty JSON array");
        std::vector<CacheConfig> baselines;
        for (const auto& j : arr) baselines.push_back(cacheConfigFromJson(j.dump()));
        return baselines;
    } catch (const json::exception& e) {
        throw DataError(std::string("bad baselines JSON: ") + e.what());
    }
}

std::pair<double, double> evaluateCacheGenome(const std::vector<int>& genes,
                                              const std::vector<MemRef>& trace,
                                              const TechnologyTable& tech, const DramParams& dram,
                                              const DesignSpace& space, std::uint64_t simSeed) {
    CacheConfig config = decodeGenome(genes, space);
    CacheStats stats = simulate(trace, config, simSeed);
    return {execTime(stats, config, tech, dram), energy(stats, config, tech, dram)};
}

namespace {

std::string configKey(const CacheConfig& c) {
    return cacheConfigToJson(c);
}

std::vector<CacheFrontMember> sortedFront(std::vector<CacheFrontMember> front) {
    std::sort(front.begin(), front.end(), [](const auto& a, const auto& b) {
        if (a.timeSeconds != b.timeSeconds) return a.timeSeconds < b.timeSeconds;
        if (a.energyJoules != b.energyJoules) return a.energyJoules < b.energyJoules;
        return configKey(a.config) < configKey(b.config);
    });
    return front;
}

}  // namespace

CacheOptResult optimizeCacheConfig(const std::vector<MemRef>& trace, const DesignSpace& space,
                                   const TechnologyTable& tech, const DramParams& dram,
                                   const EvolutionConfig& config) {
    space.validate();
    auto card = space.cardinalities();

    // Repair aliases many genomes onto one configuration; memoize by decoded
    // config. Guarded for concurrent evaluation; hits/misses never change
    // results, only work.
    std::map<std::string, std::pair<double, double>> memo;
    std::mutex memoMutex;

    IntegerVectorGenome prototype;
    prototype.values.assign(11, 0);
    prototype.cardinality = card;

    MultiObjectiveProblem problem;
    problem.numObjectives = 2;
    problem.makeGenome = [prototype](Rng& rng) { return randomGenome(Genome{prototype}, rng); };
    problem.evaluate = [&](const Genome& g) {
        const auto& genes = std::get<IntegerVectorGenome>(g).values;
        CacheConfig decoded = decodeGenome(genes, space);
        std::string key = configKey(decoded);
        {
            std::lock_guard<std::mutex> lock(memoMutex);
            auto it = memo.find(key);
            if (it != memo.end()) return std::vector<double>{it->second.first, it->second.second};
        }
        CacheStats stats = simulate(trace, decoded, config.seed);
        double t = execTime(stats, decoded, tech, dram);
        double e = energy(stats, decoded, tech, dram);
        {
            std::lock_guard<std::mutex> lock(memoMutex);
            memo.emplace(key, std::make_pair(t, e));
        }
        return std::vector<double>{t, e};
    };

    ParetoFront front = nsga2Run(problem, config);

    // Deduplicate by decoded configuration.
    CacheOptResult result;
    result.evaluations = config.populationSize * (config.generations + 1);
    std::map<std::string, CacheFrontMember> unique;
    for (const auto& ind : front.members) {
        CacheFrontMember m;
        m.genes = std::get<IntegerVectorGenome>(ind.genome).values;
        m.config = decodeGenome(m.genes, space);
        m.timeSeconds = ind.objectives[0];
        m.energyJoules = ind.objectives[1];
        unique.emplace(configKey(m.config), std::move(m));
    }
    for (auto& [key, m] : unique) result.front.push_back(std::move(m));
    result.front = sortedFront(std::move(result.front));
    return result;
}

std::vector<CacheFrontMember> enumerateParetoFront(const std::vector<MemRef>& trace,
                                                   const DesignSpace& space,
                                                   const TechnologyTable& tech,
                                                   const DramParams& dram, std::uint64_t simSeed) {
    space.validate();
    auto card = space.cardinalities();
    std::vector<CacheFrontMember> all;
    std::vector<int> genes(11, 0);

    // Odometer over the full space; repair may alias points, deduplicate.
    std::map<std::string, CacheFrontMember> unique;
    for (;;) {
        CacheConfig decoded = decodeGenome(genes, space);
        std::string key = configKey(decoded);
        if (!unique.contains(key)) {
            CacheStats stats = simulate(trace, decoded, simSeed);
            CacheFrontMember m;
            m.config = decoded;
            m.genes = genes;
            m.timeSeconds = execTime(stats, decoded, tech, dram);
            m.energyJoules = energy(stats, decoded, tech, dram);
            unique.emplace(key, std::move(m));
        }
        int g = 10;
        while (g >= 0 && ++genes[g] == card[g]) genes[g--] = 0;
        if (g < 0) break;
    }

    for (auto& [key, m] : unique) all.push_back(std::move(m));
    std::vector<CacheFrontMember> front;
    for (const auto& a : all) {
        bool dominated = false;
        for (const auto& b : all) {
            bool noWorse = b.timeSeconds <= a.timeSeconds && b.energyJoules <= a.energyJoules;
            bool better = b.timeSeconds < a.timeSeconds || b.energyJoules < a.energyJoules;
            if (noWorse && better) {
                dominated = true;
                break;
            }
        }
        if (!dominated) front.push_back(a);
    }
    return sortedFront(std::move(front));
}

ImprovementReport improvementReport(const std::vector<CacheFrontMember>& front,
                                    const std::vector<CacheConfig>& baselines,
                                    const std::vector<MemRef>& trace, const TechnologyTable& tech,
                                    const DramParams& dram, std::uint64_t simSeed) {
    ImprovementReport report;
    std::vector<std::pair<double, double>> baseObjectives;
    for (const auto& b : baselines) {
        CacheStats stats = simulate(trace, b, simSeed);
        double t = execTime(stats, b, tech, dram);
        double e = energy(stats, b, tech, dram);
        if (t == 0 || e == 0) throw DataError("baseline with zero objective (degenerate inputs)");
        baseObjectives.emplace_back(t, e);
    }
    report.avgTimePercent.assign(baselines.size(), 0.0);
    report.avgEnergyPercent.assign(baselines.size(), 0.0);
    for (std::size_t m = 0; m < front.size(); ++m) {
        for (std::size_t b = 0; b < baselines.size(); ++b) {
            ImprovementRow row;
            row.memberIndex = m;
            row.baselineIndex = b;
            row.timePercent =
                100.0 * (baseObjectives[b].first - front[m].timeSeconds) / baseObjectives[b].first;
            row.energyPercent = 100.0 * (baseObjectives[b].second - front[m].energyJoules) /
                                baseObjectives[b].second;
            report.avgTimePercent[b] += row.timePercent;
            report.avgEnergyPercent[b] += row.energyPercent;
            report.rows.push_back(row);
        }
    }
    if (!front.empty()) {
        for (std::size_t b = 0; b < baselines.size(); ++b) {
            report.avgTimePercent[b] /= static_cast<double>(front.size());
            report.avgEnergyPercent[b] /= static_cast<double>(front.size());
        }
    }
    return report;
}

std::string improvementReportToCsv(const ImprovementReport& report) {
    std::string out = "member,baseline,time_improvement_pct,energy_improvement_pct\n";
    for (const auto& row : report.rows) {
        out += std::to_string(row.memberIndex) + ',' + std::to_string(row.baselineIndex + 1) +
               ',' + formatDouble(row.timePercent) + ',' + formatDouble(row.energyPercent) + '\n';
    }
    for (std::size_t b = 0; b < report.avgTimePercent.size(); ++b) {
        out += "average," + std::to_string(b + 1) + ',' + formatDouble(report.avgTimePercent[b]) +
               ',' + formatDouble(report.avgEnergyPercent[b]) + '\n';
    }
    return out;
}

namespace {

std::string configCsvFields(const CacheConfig& c) {
    return std::to_string(c.iCache.sizeBytes) + ',' + std::to_string(c.iCache.blockBytes) + ',' +
           std::to_string(c.iCache.associativity) + ',' + toString(c.iCache.replacement) + ',' +
           toString(c.iCache.prefetch) + ',' + std::to_string(c.dCache.sizeBytes) + ',' +
           std::to_string(c.dCache.blockBytes) + ',' + std::to_string(c.dCache.associativity) +
           ',' + toString(c.dCache.replacement) + ',' + toString(c.dCache.prefetch) + ',' +
           toString(c.writePolicy);
}

}  // namespace

std::string frontToCsv(const std::vector<CacheFrontMember>& front) {
    std::string out =
        "isize,iblock,iassoc,irepl,iprefetch,dsize,dblock,dassoc,drepl,dprefetch,"
        "dwritepolicy,time_s,energy_j\n";
    for (const auto& m : front)
        out += configCsvFields(m.config) + ',' + formatDouble(m.timeSeconds) + ',' +
               formatDouble(m.energyJoules) + '\n';
    return out;
}

std::string frontToJson(const std::vector<CacheFrontMember>& front) {
    json arr = json::array();
    for (const auto& m : front) {
        json j;
        j["timeSeconds"] = m.timeSeconds;
        j["energyJoules"] = m.energyJoules;
        j["config"] = json::parse(cacheConfigToJson(m.config));
        j["genes"] = m.genes;
        arr.push_back(std::move(j));
    }
    return arr.dump(2);
}

}  // namespace memopt
