#include "memopt/cache.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"

namespace memopt {

using nlohmann::json;

std::string toString(Replacement r) {
    switch (r) {
        case Replacement::LRU: return "LRU";
        case Replacement::FIFO: return "FIFO";
        case Replacement::RANDOM: return "RANDOM";
    }
    return "?";
}

std::string toString(Prefetch p) {
    return p == Prefetch::ON_DEMAND ? "ON_DEMAND" : "ALWAYS";
}

std::string toString(WritePolicy w) {
    return w == WritePolicy::COPY_BACK ? "COPY_BACK" : "WRITE_THROUGH";
}

Replacement replacementFromString(const std::string& s) {
    if (s == "LRU") return Replacement::LRU;
    if (s == "FIFO") return Replacement::FIFO;
    if (s == "RANDOM") return Replacement::RANDOM;
    throw DataError("unknown replacement policy '" + s + "'");
}

Prefetch prefetchFromString(const std::string& s) {
    if (s == "ON_DEMAND") return Prefetch::ON_DEMAND;
    if (s == "ALWAYS") return Prefetch::ALWAYS;
    throw DataError("unknown prefetch policy '" + s + "'");
}

WritePolicy writePolicyFromString(const std::string& s) {
    if (s == "COPY_BACK") return WritePolicy::COPY_BACK;
    if (s == "WRITE_THROUGH") return WritePolicy::WRITE_THROUGH;
    throw DataError("unknown write policy '" + s + "'");
}

namespace {

void validateSide(const CacheSideConfig& side, const char* name) {
    if (!std::has_single_bit(side.sizeBytes) || !std::has_single_bit(side.blockBytes))
        throw DataError(std::string(name) + ": size and block must be powers of two");
    if (side.associativity < 1) throw DataError(std::string(name) + ": associativity must be >= 1");
    if (side.sizeBytes < side.blockBytes * side.associativity)
        throw DataError(std::string(name) + ": fewer than one set");
}

}  // namespace

void CacheConfig::validate() const {
    validateSide(iCache, "icache");
    validateSide(dCache, "dcache");
}

namespace {

json sideToJson(const CacheSideConfig& side) {
    return {{"sizeBytes", side.sizeBytes},
            {"blockBytes", side.blockBytes},
            {"associativity", side.associativity},
            {"replacement", toString(side.replacement)},
            {"prefetch", toString(side.prefetch)}};
}

CacheSideConfig sideFromJson(const json& j) {
    CacheSideConfig side;
    side.sizeBytes = j.at("sizeBytes");
    side.blockBytes = j.at("blockBytes");
    side.associativity = j.at("associativity");
    side.replacement = replacementFromString(j.at("replacement"));
    side.prefetch = prefetchFromString(j.at("prefetch"));
    return side;
}

}  // namespace

std::string cacheConfigToJson(const CacheConfig& config) {
    json j;
    j["icache"] = sideToJson(config.iCache);
    j["dcache"] = sideToJson(config.dCache);
    j["writePolicy"] = toString(config.writePolicy);
    return j.dump(2);
}

CacheConfig cacheConfigFromJson(const std::string& text) {
    try {
        json j = json::parse(text);
        CacheConfig config;
        config.iCache = sideFromJson(j.at("icache"));
        config.dCache = sideFromJson(j.at("dcache"));
        config.writePolicy = writePolicyFromString(j.at("writePolicy"));
        config.validate();
        return config;
    } catch (const json::exception& e) {
        throw DataError(std::string("bad cache config JSON: ") + e.what());
    }
}

std::string statsToJson(const CacheStats& stats) {
    json j;
    j["iAccess"] = stats.iAccess;
    j["iMiss"] = stats.iMiss;
    j["dAccess"] = stats.dAccess;
    j["dMiss"] = stats.dMiss;
    j["prefetchFetches"] = stats.prefetchFetches;
    j["writebacks"] = stats.writebacks;
    j["writethroughs"] = stats.writethroughs;
    return j.dump(2);
}

CacheStats statsFromJson(const std::string& text) {
    try {
        json j = json::parse(text);
        CacheStats s;
        s.iAccess = j.at("iAccess");
        s.iMiss = j.at("iMiss");
        s.dAccess = j.at("dAccess");
        s.dMiss = j.at("dMiss");
        s.prefetchFetches = j.at("prefetchFetches");
        s.writebacks = j.at("writebacks");
        s.writethroughs = j.at("writethroughs");
        return s;
    } catch (const json::exception& e) {
        throw DataError(std::string("bad stats JSON: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

namespace {

struct CacheLine {
    std::uint64_t tag = 0;
    bool valid = false;
    bool dirty = false;
    std::uint64_t lastUse = 0;   // LRU stamp: hits and fills
    std::uint64_t filledAt = 0;  // FIFO stamp: fills only
};

class CacheSide {
public:
    CacheSide(const CacheSideConfig& config, std::mt19937_64& rng)
        : config_(config), rng_(rng), sets_(config.numSets()),
          lines_(config.numSets() * config.associativity) {}

    // Demand access; returns true on hit. `write` dirties the block under
    // copy-back.
    bool access(std::uint64_t address, bool write, bool copyBack, std::uint64_t* writebacks) {
        std::uint64_t block = address / config_.blockBytes;
        CacheLine* line = find(block);
        ++clock_;
        if (line) {
            if (config_.replacement == Replacement::LRU) line->lastUse = clock_;
            if (write && copyBack) line->dirty = true;
            return true;
        }
        CacheLine& filled = fill(block, writebacks);
        if (write && copyBack) filled.dirty = true;
        return false;
    }

    // Next-sequential prefetch; fills only when absent, never touches recency
    // of a present block. Returns true when a fill happened.
    bool prefetchNext(std::uint64_t address, std::uint64_t* writebacks) {
        std::uint64_t block = address / config_.blockBytes + 1;
        if (find(block)) return false;
        ++clock_;
        fill(block, writebacks);
        return true;
    }

private:
    CacheLine* find(std::uint64_t block) {
        std::uint64_t set = block % sets_;
        std::uint64_t tag = block / sets_;
        CacheLine* base = &lines_[set * config_.associativity];
        for (std::uint32_t w = 0; w < config_.associativity; ++w)
            if (base[w].valid && base[w].tag == tag) return &base[w];
        return nullptr;
    }

    CacheLine& fill(std::uint64_t block, std::uint64_t* writebacks) {
        std::uint64_t set = block % sets_;
        std::uint64_t tag = block / sets_;
        CacheLine* base = &lines_[set * config_.associativity];
        CacheLine* victim = nullptr;
        for (std::uint32_t w = 0; w < config_.associativity; ++w)
            if (!base[w].valid) {
                victim = &base[w];
                break;
            }
        if (!victim) {
            switch (config_.replacement) {
                case Replacement::LRU:
                    victim = base;
                    for (std::uint32_t w = 1; w < config_.associativity; ++w)
                        if (base[w].lastUse < victim->lastUse) victim = &base[w];
                    break;
                case Replacement::FIFO:
                    victim = base;
                    for (std::uint32_t w = 1; w < config_.associativity; ++w)
                        if (base[w].filledAt < victim->filledAt) victim = &base[w];
                    break;
                case Replacement::RANDOM:
                    victim = &base[rng_() % config_.associativity];
                    break;
            }
            if (victim->dirty && writebacks) ++*writebacks;
        }
        victim->tag = tag;
        victim->valid = true;
        victim->dirty = false;
        victim->lastUse = clock_;
        victim->filledAt = clock_;
        return *victim;
    }

    CacheSideConfig config_;
    std::mt19937_64& rng_;
    std::uint64_t sets_;
    std::uint64_t clock_ = 0;
    std::vector<CacheLine> lines_;
};

}  // namespace

CacheStats simulate(const std::vector<MemRef>& trace, const CacheConfig& config,
                    std::uint64_t seed) {
    config.validate();
    std::mt19937_64 rng(seed);
    CacheSide icache(config.iCache, rng);
    CacheSide dcache(config.dCache, rng);
    const bool copyBack = config.writePolicy == WritePolicy::COPY_BACK;

    CacheStats stats;
    for (const MemRef& ref : trace) {
        if (ref.kind == AccessKind::InstrFetch) {
            ++stats.iAccess;
            if (!icache.access(ref.address, false, copyBack, &stats.writebacks)) ++stats.iMiss;
            if (config.iCache.prefetch == Prefetch::ALWAYS &&
                icache.prefetchNext(ref.address, &stats.writebacks))
                ++stats.prefetchFetches;
        } else {
            bool write = ref.kind == AccessKind::DataWrite;
            ++stats.dAccess;
            if (!dcache.access(ref.address, write, copyBack, &stats.writebacks)) ++stats.dMiss;
            if (write && !copyBack) ++stats.writethroughs;
            if (config.dCache.prefetch == Prefetch::ALWAYS &&
                dcache.prefetchNext(ref.address, &stats.writebacks))
                ++stats.prefetchFetches;
        }
    }
    return stats;
}

// ---------------------------------------------------------------------------
// Technology table
// ---------------------------------------------------------------------------

namespace {

std::string keyToString(const TechKey& key) {
    return "(size=" + std::to_string(key.sizeBytes) + ", assoc=" +
           std::to_string(key.associativity) + ", block=" + std::to_string(key.blockBytes) + ")";
}

}  // namespace

void TechnologyTable::insert(const TechKey& key, const TechEntry& entry) {
    if (entry.accessTimeSec <= 0 || entry.accessEnergyJ <= 0)
        throw DataError("technology entry " + keyToString(key) + " must be positive");
    if (!entries_.emplace(key, entry).second)
        throw DataError("duplicate technology key " + keyToString(key));
}

const TechEntry& TechnologyTable::lookup(const TechKey& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw DataError("missing technology entry " + keyToString(key));
    return it->second;
}

const TechEntry& TechnologyTable::lookup(const CacheSideConfig& side) const {
    return lookup(TechKey{side.sizeBytes, side.associativity, side.blockBytes});
}

void TechnologyTable::checkMonotonicity() const {
    for (auto it = entries_.begin(); it != entries_.end(); ++it) {
        for (auto jt = entries_.begin(); jt != entries_.end(); ++jt) {
            const TechKey& a = it->first;
            const TechKey& b = jt->first;
            bool growsSize = a.associativity == b.associativity && a.blockBytes == b.blockBytes &&
                             a.sizeBytes < b.sizeBytes;
            bool growsAssoc = a.sizeBytes == b.sizeBytes && a.blockBytes == b.blockBytes &&
                              a.associativity < b.associativity;
            if (!growsSize && !growsAssoc) continue;
            if (it->second.accessTimeSec >= jt->second.accessTimeSec ||
                it->second.accessEnergyJ >= jt->second.accessEnergyJ)
                throw DataError("technology table not monotone between " + keyToString(a) +
                                " and " + keyToString(b));
        }
    }
}

TechnologyTable loadTechnologyTable(std::istream& in) {
    TechnologyTable table;
    std::string line;
    std::size_t lineNo = 0;
    bool headerSeen = false;
    while (std::getline(in, line)) {
        ++lineNo;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (!headerSeen) {
            if (line != "size,assoc,block,access_time_s,access_energy_j")
                throw ParseError("expected header 'size,assoc,block,access_time_s,access_energy_j'",
                                 lineNo);
            headerSeen = true;
            continue;
        }
        std::istringstream ls(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ls, field, ',')) fields.push_back(field);
        if (fields.size() != 5) throw ParseError("expected 5 comma-separated fields", lineNo);
        try {
            TechKey key{std::stoull(fields[0]), static_cast<std::uint32_t>(std::stoul(fields[1])),
                        std::stoull(fields[2])};
            TechEntry entry{std::stod(fields[3]), std::stod(fields[4])};
            table.insert(key, entry);
        } catch (const DataError&) {
            throw;
        } catch (const std::exception&) {
            throw ParseError("malformed technology row", lineNo);
        }
    }
    if (!headerSeen) throw ParseError("empty technology table", lineNo + 1);
    table.checkMonotonicity();
    return table;
}

TechnologyTable loadTechnologyTable(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    return loadTechnologyTable(in);
}

std::string technologyTableToCsv(const TechnologyTable& table) {
    std::string out = "size,assoc,block,access_time_s,access_energy_j\n";
    for (const auto& [key, entry] : table.entries()) {
        out += std::to_string(key.sizeBytes) + ',' + std::to_string(key.associativity) + ',' +
               std::to_string(key.blockBytes) + ',' + formatDouble(entry.accessTimeSec) + ',' +
               formatDouble(entry.accessEnergyJ) + '\n';
    }
    return out;
}

TechnologyTable defaultTechnologyTable(const std::vector<std::uint64_t>& sizes,
                                       const std::vector<std::uint32_t>& assocs,
                                       const std::vector<std::uint64_t>& blocks) {
    // Synthetic characterization-tool-style scaling: access time and energy grow
    // with log2 of capacity and associativity, plus a mild block-size term.
    TechnologyTable table;
    for (std::uint64_t size : sizes) {
        for (std::uint32_t assoc : assocs) {
            for (std::uint64_t block : blocks) {
                double s = std::log2(static_cast<double>(size) / 1024.0);
                double a = std::log2(static_cast<double>(assoc));
                double bl = std::log2(static_cast<double>(block) / 8.0);
                TechEntry entry;
                entry.accessTimeSec = 0.5e-9 * (1.0 + 0.25 * s + 0.18 * a + 0.05 * bl);
                entry.accessEnergyJ = 1.0e-11 * (1.0 + 0.35 * s + 0.22 * a + 0.08 * bl);
                table.insert({size, assoc, block}, entry);
            }
        }
    }
    table.checkMonotonicity();
    return table;
}

TechnologyTable defaultTechnologyTable() {
    return defaultTechnologyTable(
        {1024, 2048, 4096, 8192, 16384, 32768, 65536, 131072},
        {1, 2, 4, 8, 16},
        {8, 16, 32, 64});
}

void DramParams::validate() const {
    if (accessTimeSec <= 0 || accessPowerW <= 0 || bandwidthBytesPerSec <= 0)
        throw DataError("DRAM parameters must be > 0");
}

std::string dramToJson(const DramParams& dram) {
    json j;
    j["accessTimeSec"] = dram.accessTimeSec;
    j["accessPowerW"] = dram.accessPowerW;
    j["bandwidthBytesPerSec"] = dram.bandwidthBytesPerSec;
    return j.dump(2);
}

DramParams dramFromJson(const std::string& text) {
    try {
        json j = json::parse(text);
        DramParams dram;
        dram.accessTimeSec = j.at("accessTimeSec");
        dram.accessPowerW = j.at("accessPowerW");
        dram.bandwidthBytesPerSec = j.at("bandwidthBytesPerSec");
        dram.validate();
        return dram;
    } catch (const json::exception& e) {
        throw DataError(std::string("bad DRAM JSON: ") + e.what());
    }
}

double execTime(const CacheStats& stats, const CacheConfig& config, const TechnologyTable& tech,
                const DramParams& dram) {
    dram.validate();
    const TechEntry& it = tech.lookup(config.iCache);
    const TechEntry& dt = tech.lookup(config.dCache);
    double ia = static_cast<double>(stats.iAccess);
    double im = static_cast<double>(stats.iMiss);
    double da = static_cast<double>(stats.dAccess);
    double dm = static_cast<double>(stats.dMiss);
    double ib = static_cast<double>(config.iCache.blockBytes);
    double db = static_cast<double>(config.dCache.blockBytes);
    return ia * it.accessTimeSec + im * dram.accessTimeSec + im * ib / dram.bandwidthBytesPerSec +
           da * dt.accessTimeSec + dm * dram.accessTimeSec + dm * db / dram.bandwidthBytesPerSec;
}

double energy(const CacheStats& stats, const CacheConfig& config, const TechnologyTable& tech,
              const DramParams& dram, bool extendedWriteModel) {
    dram.validate();
    const TechEntry& ie = tech.lookup(config.iCache);
    const TechEntry& de = tech.lookup(config.dCache);
    double ia = static_cast<double>(stats.iAccess);
    double im = static_cast<double>(stats.iMiss);
    double da = static_cast<double>(stats.dAccess);
    double dm = static_cast<double>(stats.dMiss);
    double ib = static_cast<double>(config.iCache.blockBytes);
    double db = static_cast<double>(config.dCache.blockBytes);
    double e = ia * ie.accessEnergyJ + da * de.accessEnergyJ + im * ie.accessEnergyJ * ib +
               dm * de.accessEnergyJ * db +
               im * dram.accessPowerW * (dram.accessTimeSec + ib / dram.bandwidthBytesPerSec) +
               dm * dram.accessPowerW * (dram.accessTimeSec + db / dram.bandwidthBytesPerSec);
    if (extendedWriteModel)
        e += static_cast<double>(stats.writebacks + stats.writethroughs) * dram.accessPowerW *
             dram.accessTimeSec;
    return e;
}

}  // namespace memopt
