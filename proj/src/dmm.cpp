#include "memopt/dmm.hpp"

#include <algorithm>
#include <bit>
#include <deque>
#include <map>
#include <optional>
#include <ostream>
#include <unordered_map>

#include "json.hpp"

namespace memopt {

using nlohmann::json;

std::string toString(DmmPolicyKind k) {
    switch (k) {
        case DmmPolicyKind::SegregatedExact: return "segregated_exact";
        case DmmPolicyKind::SegregatedPow2: return "segregated_pow2";
        case DmmPolicyKind::BuddyBinary: return "buddy_binary";
        case DmmPolicyKind::BuddyFib: return "buddy_fib";
        case DmmPolicyKind::FreeList: return "free_list";
    }
    return "?";
}

std::string toString(FitStrategy f) { return f == FitStrategy::First ? "first" : "best"; }

std::string toString(FreeOrder o) {
    switch (o) {
        case FreeOrder::Fifo: return "fifo";
        case FreeOrder::Lifo: return "lifo";
        case FreeOrder::Addr: return "addr";
    }
    return "?";
}

namespace {

DmmPolicyKind policyKindFromString(const std::string& s) {
    if (s == "segregated_exact") return DmmPolicyKind::SegregatedExact;
    if (s == "segregated_pow2") return DmmPolicyKind::SegregatedPow2;
    if (s == "buddy_binary") return DmmPolicyKind::BuddyBinary;
    if (s == "buddy_fib") return DmmPolicyKind::BuddyFib;
    if (s == "free_list") return DmmPolicyKind::FreeList;
    throw DataError("unknown policy kind '" + s + "'");
}

FitStrategy fitFromString(const std::string& s) {
    if (s == "first") return FitStrategy::First;
    if (s == "best") return FitStrategy::Best;
    throw DataError("unknown fit strategy '" + s + "'");
}

FreeOrder orderFromString(const std::string& s) {
    if (s == "fifo") return FreeOrder::Fifo;
    if (s == "lifo") return FreeOrder::Lifo;
    if (s == "addr") return FreeOrder::Addr;
    throw DataError("unknown free order '" + s + "'");
}

}  // namespace

void DmmSpec::validate() const {
    if (regions.empty()) throw DataError("DMM spec needs at least one region");
    if (heapGrowthQuantum == 0) throw DataError("heap growth quantum must be > 0");
    if (regions.front().lo != 1) throw DataError("first region must start at 1");
    for (std::size_t i = 0; i < regions.size(); ++i) {
        const DmmRegion& r = regions[i];
        if (r.hi != kOpenEnd && r.hi <= r.lo) throw DataError("empty region range");
        if (i + 1 < regions.size()) {
            if (r.hi == kOpenEnd) throw DataError("only the last region may be open-ended");
            if (regions[i + 1].lo != r.hi) throw DataError("regions must tile [1, inf)");
        } else if (r.hi != kOpenEnd) {
            throw DataError("last region must be open-ended");
        }
        if (r.policy.kind == DmmPolicyKind::SegregatedExact && r.policy.granularity == 0)
            throw DataError("granularity must be > 0");
    }
}

std::size_t DmmSpec::regionFor(std::uint64_t requestSize) const {
    for (std::size_t i = 0; i < regions.size(); ++i) {
        if (requestSize >= regions[i].lo &&
            (regions[i].hi == kOpenEnd || requestSize < regions[i].hi))
            return i;
    }
    throw DataError("no region owns request size " + std::to_string(requestSize));
}

namespace {

json policyToJsonObj(const DmmPolicy& p) {
    json j;
    j["kind"] = toString(p.kind);
    switch (p.kind) {
        case DmmPolicyKind::SegregatedExact:
            j["granularity"] = p.granularity;
            break;
        case DmmPolicyKind::SegregatedPow2:
            break;
        case DmmPolicyKind::BuddyBinary:
        case DmmPolicyKind::BuddyFib:
            j["coalesce"] = p.coalesce;
            j["split"] = p.split;
            break;
        case DmmPolicyKind::FreeList:
            j["fit"] = toString(p.fit);
            j["order"] = toString(p.order);
            j["coalesce"] = p.coalesce;
            j["split"] = p.split;
            break;
    }
    return j;
}

DmmPolicy policyFromJsonObj(const json& j) {
    DmmPolicy p;
    p.kind = policyKindFromString(j.at("kind"));
    switch (p.kind) {
        case DmmPolicyKind::SegregatedExact:
            p.granularity = j.value("granularity", std::uint64_t{1});
            break;
        case DmmPolicyKind::SegregatedPow2:
            break;
        case DmmPolicyKind::BuddyBinary:
        case DmmPolicyKind::BuddyFib:
            p.coalesce = j.value("coalesce", false);
            p.split = j.value("split", false);
            break;
        case DmmPolicyKind::FreeList:
            p.fit = fitFromString(j.value("fit", std::string("first")));
            p.order = orderFromString(j.value("order", std::string("fifo")));
            p.coalesce = j.value("coalesce", false);
            p.split = j.value("split", false);
            break;
    }
    return p;
}

}  // namespace

std::string dmmSpecToJson(const DmmSpec& spec) {
    json j;
    json regions = json::array();
    for (const auto& r : spec.regions) {
        json jr;
        jr["policy"] = policyToJsonObj(r.policy);
        if (r.hi != kOpenEnd) jr["hi"] = r.hi;
        regions.push_back(std::move(jr));
    }
    j["regions"] = std::move(regions);
    j["headerBytes"] = spec.headerBytes;
    j["heapGrowthQuantum"] = spec.heapGrowthQuantum;
    return j.dump(2);
}

DmmSpec dmmSpecFromJson(const std::string& text, bool normalize) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("bad DMM spec JSON: ") + e.what());
    }
    try {
        DmmSpec spec;
        spec.regions.clear();
        spec.headerBytes = j.value("headerBytes", std::uint64_t{8});
        spec.heapGrowthQuantum = j.value("heapGrowthQuantum", std::uint64_t{4096});
        struct Raw {
            std::uint64_t hi;
            DmmPolicy policy;
        };
        std::vector<Raw> raws;
        for (const auto& jr : j.at("regions")) {
            Raw raw;
            raw.policy = policyFromJsonObj(jr.at("policy"));
            raw.hi = jr.contains("hi") ? jr.at("hi").get<std::uint64_t>() : kOpenEnd;
            raws.push_back(std::move(raw));
        }
        if (raws.empty()) throw DataError("DMM spec needs at least one region");
        if (normalize) {
            // Sort by upper bound (open end last) and drop duplicate or empty
            // bounds; the surviving order rebuilds the lo/hi chain.
            std::stable_sort(raws.begin(), raws.end(),
                             [](const Raw& a, const Raw& b) { return a.hi < b.hi; });
            std::vector<Raw> dedup;
            for (auto& r : raws) {
                if (r.hi != kOpenEnd && r.hi <= 1) continue;
                if (!dedup.empty() && dedup.back().hi == r.hi) continue;
                dedup.push_back(std::move(r));
            }
            raws = std::move(dedup);
            if (raws.empty() || raws.back().hi != kOpenEnd)
                throw DataError("normalized DMM spec lacks an open-ended region");
        }
        std::uint64_t lo = 1;
        for (auto& raw : raws) {
            spec.regions.push_back({lo, raw.hi, raw.policy});
            lo = raw.hi;
        }
        spec.validate();
        return spec;
    } catch (const json::exception& e) {
        throw DataError(std::string("bad DMM spec JSON: ") + e.what());
    }
}

DmmSpec buildReference(ReferenceDmm kind) {
    DmmSpec spec;
    spec.regions.clear();
    switch (kind) {
        case ReferenceDmm::KNG: {
            DmmPolicy p;
            p.kind = DmmPolicyKind::SegregatedPow2;
            spec.regions.push_back({1, kOpenEnd, p});
            break;
        }
        case ReferenceDmm::LEA: {
            DmmPolicy small;
            small.kind = DmmPolicyKind::SegregatedExact;
            small.granularity = 8;
            DmmPolicy large;
            large.kind = DmmPolicyKind::FreeList;
            large.fit = FitStrategy::Best;
            large.order = FreeOrder::Addr;
            large.coalesce = true;
            large.split = true;
            spec.regions.push_back({1, 512, small});
            spec.regions.push_back({512, kOpenEnd, large});
            break;
        }
        case ReferenceDmm::FIB: {
            DmmPolicy p;
            p.kind = DmmPolicyKind::BuddyFib;
            p.coalesce = true;
            p.split = true;
            spec.regions.push_back({1, kOpenEnd, p});
            break;
        }
        case ReferenceDmm::S10: {
            DmmPolicy p;
            p.kind = DmmPolicyKind::FreeList;
            p.fit = FitStrategy::First;
            p.order = FreeOrder::Fifo;
            p.split = true;  // segregated-fit behavior: carve from region blocks
            std::uint64_t lo = 1;
            for (int k = 0; k < 9; ++k) {
                std::uint64_t hi = 16ull << k;
                spec.regions.push_back({lo, hi, p});
                lo = hi;
            }
            spec.regions.push_back({lo, kOpenEnd, p});
            break;
        }
        case ReferenceDmm::EXA: {
            DmmPolicy p;
            p.kind = DmmPolicyKind::SegregatedExact;
            p.granularity = 1;
            spec.regions.push_back({1, kOpenEnd, p});
            break;
        }
    }
    spec.validate();
    return spec;
}

std::string toString(ReferenceDmm r) {
    switch (r) {
        case ReferenceDmm::KNG: return "KNG";
        case ReferenceDmm::LEA: return "LEA";
        case ReferenceDmm::FIB: return "FIB";
        case ReferenceDmm::S10: return "S10";
        case ReferenceDmm::EXA: return "EXA";
    }
    return "?";
}

std::vector<ReferenceDmm> allReferenceDmms() {
    return {ReferenceDmm::KNG, ReferenceDmm::LEA, ReferenceDmm::FIB, ReferenceDmm::S10,
            ReferenceDmm::EXA};
}

const std::vector<std::uint64_t>& fibonacciClassSizes() {
    static const std::vector<std::uint64_t> classes = [] {
        std::vector<std::uint64_t> c{16, 32};
        while (c.back() < (1ull << 62)) c.push_back(c[c.size() - 1] + c[c.size() - 2]);
        return c;
    }();
    return classes;
}

std::string metricsToJson(const DmmMetrics& m) {
    json j;
    j["simTime"] = m.simTime;
    j["peakMemory"] = m.peakMemory;
    j["accesses"] = m.accesses;
    j["allocs"] = m.allocs;
    j["frees"] = m.frees;
    j["splits"] = m.splits;
    j["coalesces"] = m.coalesces;
    return j.dump(2);
}

// ---------------------------------------------------------------------------
// Heap state
// ---------------------------------------------------------------------------

namespace {

constexpr std::int64_t kNoSplit = -1;

struct Block {
    std::uint64_t size = 0;
    bool live = false;
    std::size_t region = 0;
    std::uint64_t requested = 0;      // payload bytes while live
    std::int64_t splitId = kNoSplit;  // buddy split record that created it
    bool isLeftChild = false;
};

struct SplitRecord {
    std::uint64_t parentAddr = 0;
    std::uint64_t parentSize = 0;
    std::int64_t parentSplitId = kNoSplit;
    bool parentIsLeft = false;
    std::uint64_t leftSize = 0;
    std::uint64_t rightSize = 0;
};

// Per-region free structures. Class lists are LIFO; the reserve is FIFO.
struct RegionState {
    std::map<std::uint64_t, std::deque<std::uint64_t>> classLists;  // size -> addrs
    std::deque<std::uint64_t> reserve;                              // addrs
    std::vector<std::uint64_t> freeList;                            // addrs, order per policy
};

class Heap {
public:
    Heap(const DmmSpec& spec, const ReplayOptions& options)
        : spec_(spec), options_(options), regions_(spec.regions.size()) {}

    DmmMetrics run(const std::vector<AllocEvent>& trace) {
        for (std::size_t i = 0; i < trace.size(); ++i) {
            const AllocEvent& e = trace[i];
            if (e.op == AllocOp::Alloc)
                handleAlloc(e, i);
            else
                handleFree(e, i);
            if (options_.eventLog) logEvent(e, i);
            if (options_.debugChecks) checkInvariants(i);
        }
        metrics_.peakMemory = brk_;  // brk never shrinks
        return metrics_;
    }

    FragmentationReport runWithFragmentation(const std::vector<AllocEvent>& trace) {
        FragmentationReport report;
        std::uint64_t lastPeak = 0;
        for (std::size_t i = 0; i < trace.size(); ++i) {
            const AllocEvent& e = trace[i];
            if (e.op == AllocOp::Alloc)
                handleAlloc(e, i);
            else
                handleFree(e, i);
            if (brk_ > lastPeak) {
                lastPeak = brk_;
                report = measureFragmentation();
            }
        }
        report.peakMemory = brk_;
        return report;
    }

private:
    // ---- policy helpers ----

    std::uint64_t neededBlockSize(const DmmPolicy& p, std::uint64_t request) const {
        std::uint64_t gross = request + spec_.headerBytes;
        switch (p.kind) {
            case DmmPolicyKind::SegregatedExact:
                return ((gross + p.granularity - 1) / p.granularity) * p.granularity;
            case DmmPolicyKind::SegregatedPow2:
            case DmmPolicyKind::BuddyBinary:
                return std::max<std::uint64_t>(16, std::bit_ceil(gross));
            case DmmPolicyKind::BuddyFib: {
                const auto& classes = fibonacciClassSizes();
                auto it = std::lower_bound(classes.begin(), classes.end(), gross);
                if (it == classes.end()) throw DataError("request too large for buddy classes");
                return *it;
            }
            case DmmPolicyKind::FreeList:
                return gross;
        }
        throw DataError("unreachable policy kind");
    }

    static std::size_t buddyClassIndex(const DmmPolicy& p, std::uint64_t size) {
        if (p.kind == DmmPolicyKind::BuddyBinary)
            return static_cast<std::size_t>(std::countr_zero(size)) - 4;  // 16 -> 0
        const auto& classes = fibonacciClassSizes();
        auto it = std::lower_bound(classes.begin(), classes.end(), size);
        return static_cast<std::size_t>(it - classes.begin());
    }

    static std::uint64_t buddyClassSize(const DmmPolicy& p, std::size_t index) {
        if (p.kind == DmmPolicyKind::BuddyBinary) return 16ull << index;
        return fibonacciClassSizes()[index];
    }

    // A target class t is reachable by splitting from class x iff x == t, or
    // x can split at all (binary: x >= 1, fib: x >= 2) and x > t.
    static bool reachesClass(const DmmPolicy& p, std::size_t from, std::size_t target) {
        if (from == target) return true;
        std::size_t minSplittable = p.kind == DmmPolicyKind::BuddyBinary ? 1 : 2;
        return from >= minSplittable && from > target;
    }

    // ---- block bookkeeping ----

    std::map<std::uint64_t, Block>::iterator insertBlock(std::uint64_t addr, Block block) {
        auto [it, ok] = blocks_.emplace(addr, block);
        if (!ok) throw DataError("internal heap corruption (duplicate block)");
        return it;
    }

    std::uint64_t grow(std::size_t region, std::uint64_t minBytes) {
        std::uint64_t amount =
            ((minBytes + spec_.heapGrowthQuantum - 1) / spec_.heapGrowthQuantum) *
            spec_.heapGrowthQuantum;
        std::uint64_t addr = brk_;
        brk_ += amount;
        Block fresh;
        fresh.size = amount;
        fresh.region = region;
        insertBlock(addr, fresh);
        return addr;
    }

    // ---- alloc paths ----

    void handleAlloc(const AllocEvent& e, std::size_t eventIndex) {
        if (e.size == 0) throw DataError("alloc of size 0 at event " + std::to_string(eventIndex));
        if (liveIds_.contains(e.id))
            throw DataError("duplicate live id " + std::to_string(e.id) + " at event " +
                            std::to_string(eventIndex));
        ++metrics_.allocs;
        ++metrics_.simTime;

        std::size_t regionIdx = spec_.regionFor(e.size);
        const DmmPolicy& policy = spec_.regions[regionIdx].policy;
        std::uint64_t addr;
        if (policy.kind == DmmPolicyKind::FreeList)
            addr = allocFreeList(regionIdx, e.size);
        else if (policy.kind == DmmPolicyKind::BuddyBinary ||
                 policy.kind == DmmPolicyKind::BuddyFib)
            addr = allocBuddy(regionIdx, e.size);
        else
            addr = allocSegregated(regionIdx, e.size);

        Block& block = blocks_.at(addr);
        block.live = true;
        block.requested = e.size;
        liveIds_.emplace(e.id, addr);
        livePayload_ += e.size;
    }

    std::uint64_t allocSegregated(std::size_t regionIdx, std::uint64_t request) {
        const DmmPolicy& policy = spec_.regions[regionIdx].policy;
        RegionState& state = regions_[regionIdx];
        std::uint64_t blockSize = neededBlockSize(policy, request);

        auto listIt = state.classLists.find(blockSize);
        if (listIt != state.classLists.end() && !listIt->second.empty()) {
            std::uint64_t addr = listIt->second.front();
            listIt->second.pop_front();
            countAccess(1);
            return addr;
        }
        if (auto addr = carveFromReserve(state, regionIdx, blockSize)) return *addr;
        std::uint64_t freshAddr = grow(regionIdx, blockSize);
        return carveFresh(freshAddr, blockSize, regionIdx);
    }

    std::uint64_t allocBuddy(std::size_t regionIdx, std::uint64_t request) {
        const DmmPolicy& policy = spec_.regions[regionIdx].policy;
        RegionState& state = regions_[regionIdx];
        std::uint64_t blockSize = neededBlockSize(policy, request);
        std::size_t target = buddyClassIndex(policy, blockSize);

        auto listIt = state.classLists.find(blockSize);
        if (listIt != state.classLists.end() && !listIt->second.empty()) {
            std::uint64_t addr = listIt->second.front();
            listIt->second.pop_front();
            countAccess(1);
            return addr;
        }
        if (policy.split) {
            // smallest nonempty class above the target that can split down to it
            for (auto it = state.classLists.upper_bound(blockSize);
                 it != state.classLists.end(); ++it) {
                if (it->second.empty()) continue;
                if (!reachesClass(policy, buddyClassIndex(policy, it->first), target)) continue;
                std::uint64_t addr = it->second.front();
                it->second.pop_front();
                countAccess(1);
                return splitDown(regionIdx, addr, target);
            }
        }
        if (auto addr = carveFromReserve(state, regionIdx, blockSize)) return *addr;
        std::uint64_t freshAddr = grow(regionIdx, blockSize);
        return carveFresh(freshAddr, blockSize, regionIdx);
    }

    // Splits the free block at `addr` down to the target class, keeping the
    // smaller child whenever the target is still reachable from it; the
    // sibling goes onto its class list.
    std::uint64_t splitDown(std::size_t regionIdx, std::uint64_t addr, std::size_t target) {
        const DmmPolicy& policy = spec_.regions[regionIdx].policy;
        RegionState& state = regions_[regionIdx];
        auto it = blocks_.find(addr);
        std::size_t cur = buddyClassIndex(policy, it->second.size);
        while (cur > target) {
            Block parent = it->second;
            std::uint64_t leftSize, rightSize;
            std::size_t leftClass, rightClass;
            if (policy.kind == DmmPolicyKind::BuddyBinary) {
                leftClass = rightClass = cur - 1;
                leftSize = rightSize = parent.size / 2;
            } else {
                leftClass = cur - 1;
                rightClass = cur - 2;
                leftSize = buddyClassSize(policy, leftClass);
                rightSize = buddyClassSize(policy, rightClass);
            }
            splitRecords_.push_back(
                {addr, parent.size, parent.splitId, parent.isLeftChild, leftSize, rightSize});
            std::int64_t recId = static_cast<std::int64_t>(splitRecords_.size()) - 1;
            ++metrics_.splits;
            metrics_.simTime += 2;

            blocks_.erase(it);
            Block left;
            left.size = leftSize;
            left.region = regionIdx;
            left.splitId = recId;
            left.isLeftChild = true;
            Block right = left;
            right.size = rightSize;
            right.isLeftChild = false;
            auto leftIt = insertBlock(addr, left);
            insertBlock(addr + leftSize, right);

            bool keepRight = rightClass < leftClass && reachesClass(policy, rightClass, target);
            if (keepRight) {
                state.classLists[leftSize].push_front(addr);
                addr = addr + leftSize;
                it = blocks_.find(addr);
                cur = rightClass;
            } else {
                state.classLists[rightSize].push_front(addr + leftSize);
                it = leftIt;
                cur = leftClass;
            }
        }
        return addr;
    }

    // Scans the reserve FIFO for the first block of at least blockSize bytes
    // and carves from its front; the shrunken remainder keeps its position.
    std::optional<std::uint64_t> carveFromReserve(RegionState& state, std::size_t regionIdx,
                                                  std::uint64_t blockSize) {
        for (std::size_t i = 0; i < state.reserve.size(); ++i) {
            countAccess(1);
            std::uint64_t addr = state.reserve[i];
            if (blocks_.at(addr).size < blockSize) continue;

            Block whole = blocks_.at(addr);
            blocks_.erase(addr);
            Block served;
            served.size = blockSize;
            served.region = regionIdx;
            insertBlock(addr, served);
            if (whole.size > blockSize) {
                Block rest;
                rest.size = whole.size - blockSize;
                rest.region = regionIdx;
                insertBlock(addr + blockSize, rest);
                state.reserve[i] = addr + blockSize;
            } else {
                state.reserve.erase(state.reserve.begin() + static_cast<std::ptrdiff_t>(i));
            }
            return addr;
        }
        return std::nullopt;
    }

    // Carves blockSize from a freshly grown block; the leftover becomes a
    // reserve block. Fresh blocks cost no inspections.
    std::uint64_t carveFresh(std::uint64_t addr, std::uint64_t blockSize, std::size_t regionIdx) {
        Block whole = blocks_.at(addr);
        blocks_.erase(addr);
        Block served;
        served.size = blockSize;
        served.region = regionIdx;
        insertBlock(addr, served);
        if (whole.size > blockSize) {
            Block rest;
            rest.size = whole.size - blockSize;
            rest.region = regionIdx;
            insertBlock(addr + blockSize, rest);
            regions_[regionIdx].reserve.push_back(addr + blockSize);
        }
        return addr;
    }

    std::uint64_t allocFreeList(std::size_t regionIdx, std::uint64_t request) {
        const DmmPolicy& policy = spec_.regions[regionIdx].policy;
        RegionState& state = regions_[regionIdx];
        std::uint64_t needed = request + spec_.headerBytes;

        std::size_t chosen = state.freeList.size();
        if (policy.fit == FitStrategy::First) {
            for (std::size_t i = 0; i < state.freeList.size(); ++i) {
                countAccess(1);
                if (blocks_.at(state.freeList[i]).size >= needed) {
                    chosen = i;
                    break;
                }
            }
        } else {
            std::uint64_t bestSize = 0;
            for (std::size_t i = 0; i < state.freeList.size(); ++i) {
                countAccess(1);
                std::uint64_t size = blocks_.at(state.freeList[i]).size;
                if (size >= needed && (chosen == state.freeList.size() || size < bestSize)) {
                    chosen = i;
                    bestSize = size;
                }
            }
        }

        std::uint64_t addr;
        if (chosen != state.freeList.size()) {
            addr = state.freeList[chosen];
            state.freeList.erase(state.freeList.begin() + static_cast<std::ptrdiff_t>(chosen));
        } else {
            addr = grow(regionIdx, needed);
        }
        return maybeSplitFreeListBlock(regionIdx, addr, needed);
    }

    std::uint64_t maybeSplitFreeListBlock(std::size_t regionIdx, std::uint64_t addr,
                                          std::uint64_t needed) {
        const DmmPolicy& policy = spec_.regions[regionIdx].policy;
        Block& block = blocks_.at(addr);
        const std::uint64_t minRemainder = spec_.headerBytes + 16;
        if (policy.split && block.size >= needed + minRemainder) {
            std::uint64_t restSize = block.size - needed;
            block.size = needed;
            Block rest;
            rest.size = restSize;
            rest.region = regionIdx;
            insertBlock(addr + needed, rest);
            insertIntoFreeList(regionIdx, addr + needed);
            ++metrics_.splits;
            metrics_.simTime += 2;
        }
        return addr;
    }

    void insertIntoFreeList(std::size_t regionIdx, std::uint64_t addr) {
        const DmmPolicy& policy = spec_.regions[regionIdx].policy;
        auto& list = regions_[regionIdx].freeList;
        switch (policy.order) {
            case FreeOrder::Fifo:
                list.push_back(addr);
                break;
            case FreeOrder::Lifo:
                list.insert(list.begin(), addr);
                break;
            case FreeOrder::Addr: {
                list.insert(std::lower_bound(list.begin(), list.end(), addr), addr);
                break;
            }
        }
    }

    void removeFromFreeList(std::size_t regionIdx, std::uint64_t addr) {
        auto& list = regions_[regionIdx].freeList;
        auto pos = std::find(list.begin(), list.end(), addr);
        if (pos == list.end()) throw DataError("internal heap corruption (free-list miss)");
        list.erase(pos);
    }

    void removeFromClassList(std::size_t regionIdx, std::uint64_t size, std::uint64_t addr) {
        auto& lists = regions_[regionIdx].classLists;
        auto it = lists.find(size);
        if (it == lists.end()) throw DataError("internal heap corruption (class-list miss)");
        auto pos = std::find(it->second.begin(), it->second.end(), addr);
        if (pos == it->second.end()) throw DataError("internal heap corruption (class-list miss)");
        it->second.erase(pos);
    }

    // ---- free paths ----

    void handleFree(const AllocEvent& e, std::size_t eventIndex) {
        auto idIt = liveIds_.find(e.id);
        if (idIt == liveIds_.end())
            throw DataError("free of unknown or already-freed id " + std::to_string(e.id) +
                            " at event " + std::to_string(eventIndex));
        ++metrics_.frees;
        ++metrics_.simTime;

        std::uint64_t addr = idIt->second;
        liveIds_.erase(idIt);
        Block& block = blocks_.at(addr);
        livePayload_ -= block.requested;
        block.live = false;
        block.requested = 0;

        std::size_t regionIdx = block.region;
        switch (spec_.regions[regionIdx].policy.kind) {
            case DmmPolicyKind::SegregatedExact:
            case DmmPolicyKind::SegregatedPow2:
                regions_[regionIdx].classLists[block.size].push_front(addr);
                break;
            case DmmPolicyKind::BuddyBinary:
            case DmmPolicyKind::BuddyFib:
                freeBuddy(regionIdx, addr);
                break;
            case DmmPolicyKind::FreeList:
                freeIntoFreeList(regionIdx, addr);
                break;
        }
    }

    void freeBuddy(std::size_t regionIdx, std::uint64_t addr) {
        const DmmPolicy& policy = spec_.regions[regionIdx].policy;
        if (policy.coalesce) {
            for (;;) {
                Block& block = blocks_.at(addr);
                if (block.splitId == kNoSplit) break;
                const SplitRecord rec = splitRecords_[static_cast<std::size_t>(block.splitId)];
                std::uint64_t siblingAddr =
                    block.isLeftChild ? rec.parentAddr + rec.leftSize : rec.parentAddr;
                std::uint64_t siblingSize = block.isLeftChild ? rec.rightSize : rec.leftSize;
                auto sibIt = blocks_.find(siblingAddr);
                if (sibIt == blocks_.end() || sibIt->second.live ||
                    sibIt->second.size != siblingSize || sibIt->second.splitId != block.splitId)
                    break;
                removeFromClassList(regionIdx, siblingSize, siblingAddr);
                blocks_.erase(addr);
                blocks_.erase(siblingAddr);
                Block parent;
                parent.size = rec.parentSize;
                parent.region = regionIdx;
                parent.splitId = rec.parentSplitId;
                parent.isLeftChild = rec.parentIsLeft;
                insertBlock(rec.parentAddr, parent);
                ++metrics_.coalesces;
                metrics_.simTime += 3;
                addr = rec.parentAddr;
            }
        }
        regions_[regionIdx].classLists[blocks_.at(addr).size].push_front(addr);
    }

    void freeIntoFreeList(std::size_t regionIdx, std::uint64_t addr) {
        const DmmPolicy& policy = spec_.regions[regionIdx].policy;
        if (policy.coalesce) {
            // left neighbor, then right; same-region free blocks only
            auto it = blocks_.find(addr);
            if (it != blocks_.begin()) {
                auto left = std::prev(it);
                if (!left->second.live && left->second.region == regionIdx) {
                    removeFromFreeList(regionIdx, left->first);
                    std::uint64_t newAddr = left->first;
                    Block merged;
                    merged.size = left->second.size + it->second.size;
                    merged.region = regionIdx;
                    blocks_.erase(left);
                    blocks_.erase(addr);
                    insertBlock(newAddr, merged);
                    ++metrics_.coalesces;
                    metrics_.simTime += 3;
                    addr = newAddr;
                }
            }
            it = blocks_.find(addr);
            auto right = std::next(it);
            if (right != blocks_.end() && !right->second.live &&
                right->second.region == regionIdx) {
                removeFromFreeList(regionIdx, right->first);
                Block merged;
                merged.size = it->second.size + right->second.size;
                merged.region = regionIdx;
                blocks_.erase(right);
                blocks_.erase(addr);
                insertBlock(addr, merged);
                ++metrics_.coalesces;
                metrics_.simTime += 3;
            }
        }
        insertIntoFreeList(regionIdx, addr);
    }

    void countAccess(std::uint64_t n) {
        metrics_.accesses += n;
        metrics_.simTime += n;
    }

    // ---- diagnostics ----

    FragmentationReport measureFragmentation() const {
        FragmentationReport report;
        std::uint64_t largestLive = 0;
        for (const auto& [addr, block] : blocks_)
            if (block.live) largestLive = std::max(largestLive, block.requested);
        for (const auto& [addr, block] : blocks_) {
            if (block.live) {
                report.internalBytes += block.size - block.requested - spec_.headerBytes;
            } else if (largestLive > 0 && block.size < largestLive + spec_.headerBytes) {
                report.externalBytes += block.size;
            }
        }
        report.peakMemory = brk_;
        return report;
    }

    void logEvent(const AllocEvent& e, std::size_t index) {
        *options_.eventLog << index << ',' << (e.op == AllocOp::Alloc ? 'A' : 'F') << ',' << e.id
                           << ',' << e.size << ',' << brk_ << ',' << metrics_.simTime << '\n';
    }

    void checkInvariants(std::size_t eventIndex) const {
        // tiling of [0, brk)
        std::uint64_t expect = 0;
        for (const auto& [addr, block] : blocks_) {
            if (addr != expect)
                throw DataError("tiling violated at event " + std::to_string(eventIndex));
            if (block.size == 0) throw DataError("empty block");
            expect = addr + block.size;
        }
        if (expect != brk_)
            throw DataError("tiling does not reach brk at event " + std::to_string(eventIndex));

        // membership: every free block in exactly one structure, live in none
        std::map<std::uint64_t, int> membership;
        for (const auto& region : regions_) {
            for (const auto& [size, list] : region.classLists)
                for (std::uint64_t addr : list) ++membership[addr];
            for (std::uint64_t addr : region.reserve) ++membership[addr];
            for (std::uint64_t addr : region.freeList) ++membership[addr];
        }
        std::uint64_t payload = 0;
        for (const auto& [addr, block] : blocks_) {
            int count = membership.contains(addr) ? membership.at(addr) : 0;
            if (block.live && count != 0)
                throw DataError("live block in a free structure at event " +
                                std::to_string(eventIndex));
            if (!block.live && count != 1)
                throw DataError("free block in " + std::to_string(count) +
                                " structures at event " + std::to_string(eventIndex));
            if (block.live) payload += block.requested;
        }
        for (const auto& [addr, count] : membership)
            if (!blocks_.contains(addr))
                throw DataError("dangling free-structure entry at event " +
                                std::to_string(eventIndex));
        if (payload != livePayload_)
            throw DataError("payload conservation violated at event " +
                            std::to_string(eventIndex));
    }

    const DmmSpec& spec_;
    const ReplayOptions& options_;
    std::vector<RegionState> regions_;
    std::map<std::uint64_t, Block> blocks_;  // address-ordered heap tiling
    std::vector<SplitRecord> splitRecords_;
    std::unordered_map<std::uint64_t, std::uint64_t> liveIds_;
    std::uint64_t brk_ = 0;
    std::uint64_t livePayload_ = 0;
    DmmMetrics metrics_;
};

}  // namespace

DmmMetrics replay(const DmmSpec& spec, const std::vector<AllocEvent>& trace,
                  const ReplayOptions& options) {
    spec.validate();
    Heap heap(spec, options);
    return heap.run(trace);
}

FragmentationReport fragmentationReport(const DmmSpec& spec,
                                        const std::vector<AllocEvent>& trace) {
    spec.validate();
    ReplayOptions options;
    Heap heap(spec, options);
    return heap.runWithFragmentation(trace);
}

}  // namespace memopt
