#pragma once

// Brute-force heap replay oracle. Re-implements the documented DMM replay
// contract over a flat address-sorted block vector with linear searches and
// parallel free-structure vectors; no shared code with the library's Heap.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "memopt/dmm.hpp"
#include "memopt/traces.hpp"

namespace oracle {

struct HBlock {
    std::uint64_t addr = 0;
    std::uint64_t size = 0;
    bool live = false;
    std::size_t region = 0;
    std::uint64_t requested = 0;
    long long splitRec = -1;  // index into splits, -1 when not a split child
    bool left = false;
};

struct HSplit {
    std::uint64_t parentAddr = 0;
    std::uint64_t parentSize = 0;
    long long parentRec = -1;
    bool parentLeft = false;
    std::uint64_t leftSize = 0;
    std::uint64_t rightSize = 0;
};

struct HRegion {
    // parallel vectors: class lists as (classSize, addr) pairs in LIFO order
    // per class, a FIFO reserve, and the policy-ordered free list.
    std::vector<std::pair<std::uint64_t, std::vector<std::uint64_t>>> classLists;
    std::vector<std::uint64_t> reserve;
    std::vector<std::uint64_t> freeList;
};

class ReferenceHeap {
public:
    explicit ReferenceHeap(const memopt::DmmSpec& spec)
        : spec_(spec), regions_(spec.regions.size()) {}

    memopt::DmmMetrics run(const std::vector<memopt::AllocEvent>& trace) {
        for (std::size_t i = 0; i < trace.size(); ++i) {
            if (trace[i].op == memopt::AllocOp::Alloc)
                alloc(trace[i].id, trace[i].size);
            else
                freeId(trace[i].id);
        }
        m_.peakMemory = brk_;
        return m_;
    }

private:
    using Policy = memopt::DmmPolicy;
    using Kind = memopt::DmmPolicyKind;

    std::size_t blockAt(std::uint64_t addr) const {
        for (std::size_t i = 0; i < blocks_.size(); ++i)
            if (blocks_[i].addr == addr) return i;
        throw std::runtime_error("oracle: unknown block address");
    }

    std::vector<std::uint64_t>& classList(HRegion& r, std::uint64_t size) {
        for (auto& [s, list] : r.classLists)
            if (s == size) return list;
        r.classLists.emplace_back(size, std::vector<std::uint64_t>{});
        // keep class lists sorted by class size for the buddy upper scan
        std::sort(r.classLists.begin(), r.classLists.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        return classList(r, size);
    }

    static std::uint64_t roundUp(std::uint64_t v, std::uint64_t q) {
        return (v + q - 1) / q * q;
    }

    std::uint64_t blockSizeFor(const Policy& p, std::uint64_t request) const {
        std::uint64_t gross = request + spec_.headerBytes;
        switch (p.kind) {
            case Kind::SegregatedExact:
                return roundUp(gross, p.granularity);
            case Kind::SegregatedPow2:
            case Kind::BuddyBinary: {
                std::uint64_t c = 16;
                while (c < gross) c *= 2;
                return c;
            }
            case Kind::BuddyFib: {
                for (std::uint64_t c : memopt::fibonacciClassSizes())
                    if (c >= gross) return c;
                throw std::runtime_error("oracle: fib class overflow");
            }
            case Kind::FreeList:
                return gross;
        }
        throw std::runtime_error("oracle: bad policy");
    }

    static std::size_t classIndex(const Policy& p, std::uint64_t size) {
        if (p.kind == Kind::BuddyBinary) {
            std::size_t i = 0;
            std::uint64_t c = 16;
            while (c < size) {
                c *= 2;
                ++i;
            }
            return i;
        }
        const auto& fib = memopt::fibonacciClassSizes();
        for (std::size_t i = 0; i < fib.size(); ++i)
            if (fib[i] == size) return i;
        throw std::runtime_error("oracle: not a class size");
    }

    static std::uint64_t classSize(const Policy& p, std::size_t index) {
        if (p.kind == Kind::BuddyBinary) return 16ull << index;
        return memopt::fibonacciClassSizes()[index];
    }

    static bool reaches(const Policy& p, std::size_t from, std::size_t target) {
        if (from == target) return true;
        std::size_t minSplit = p.kind == Kind::BuddyBinary ? 1 : 2;
        return from >= minSplit && from > target;
    }

    void insertSorted(HBlock b) {
        auto pos = std::lower_bound(blocks_.begin(), blocks_.end(), b.addr,
                                    [](const HBlock& x, std::uint64_t a) { return x.addr < a; });
        blocks_.insert(pos, b);
    }

    std::uint64_t grow(std::size_t region, std::uint64_t minBytes) {
        std::uint64_t amount = roundUp(minBytes, spec_.heapGrowthQuantum);
        HBlock fresh;
        fresh.addr = brk_;
        fresh.size = amount;
        fresh.region = region;
        brk_ += amount;
        insertSorted(fresh);
        return fresh.addr;
    }

    // carve blockSize from the front of the free block at addr; remainder (if
    // any) stays free and is reported to the caller
    std::uint64_t carveFront(std::uint64_t addr, std::uint64_t blockSize, std::size_t region,
                             std::uint64_t* remainderAddr) {
        std::size_t i = blockAt(addr);
        std::uint64_t whole = blocks_[i].size;
        blocks_.erase(blocks_.begin() + static_cast<std::ptrdiff_t>(i));
        HBlock served;
        served.addr = addr;
        served.size = blockSize;
        served.region = region;
        insertSorted(served);
        if (whole > blockSize) {
            HBlock rest;
            rest.addr = addr + blockSize;
            rest.size = whole - blockSize;
            rest.region = region;
            insertSorted(rest);
            if (remainderAddr) *remainderAddr = rest.addr;
            return addr;
        }
        if (remainderAddr) *remainderAddr = 0;
        return addr;
    }

    void alloc(std::uint64_t id, std::uint64_t request) {
        ++m_.allocs;
        ++m_.simTime;
        std::size_t region = spec_.regionFor(request);
        const Policy& p = spec_.regions[region].policy;
        std::uint64_t addr;
        switch (p.kind) {
            case Kind::SegregatedExact:
            case Kind::SegregatedPow2:
                addr = allocSegregated(region, request);
                break;
            case Kind::BuddyBinary:
            case Kind::BuddyFib:
                addr = allocBuddy(region, request);
                break;
            case Kind::FreeList:
                addr = allocFreeList(region, request);
                break;
            default:
                throw std::runtime_error("oracle: bad policy");
        }
        std::size_t i = blockAt(addr);
        blocks_[i].live = true;
        blocks_[i].requested = request;
        ids_.emplace_back(id, addr);
    }

    std::uint64_t allocSegregated(std::size_t region, std::uint64_t request) {
        const Policy& p = spec_.regions[region].policy;
        HRegion& r = regions_[region];
        std::uint64_t want = blockSizeFor(p, request);
        auto& list = classList(r, want);
        if (!list.empty()) {
            std::uint64_t addr = list.front();
            list.erase(list.begin());
            ++m_.accesses;
            ++m_.simTime;
            return addr;
        }
        if (auto addr = tryReserve(region, want)) return *addr;
        return growAndCarve(region, want);
    }

    std::optional<std::uint64_t> tryReserve(std::size_t region, std::uint64_t want) {
        HRegion& r = regions_[region];
        for (std::size_t i = 0; i < r.reserve.size(); ++i) {
            ++m_.accesses;
            ++m_.simTime;
            std::uint64_t addr = r.reserve[i];
            if (blocks_[blockAt(addr)].size < want) continue;
            std::uint64_t remainder = 0;
            carveFront(addr, want, region, &remainder);
            if (remainder)
                r.reserve[i] = remainder;
            else
                r.reserve.erase(r.reserve.begin() + static_cast<std::ptrdiff_t>(i));
            return addr;
        }
        return std::nullopt;
    }

    std::uint64_t growAndCarve(std::size_t region, std::uint64_t want) {
        std::uint64_t fresh = grow(region, want);
        std::uint64_t remainder = 0;
        carveFront(fresh, want, region, &remainder);
        if (remainder) regions_[region].reserve.push_back(remainder);
        return fresh;
    }

    std::uint64_t allocBuddy(std::size_t region, std::uint64_t request) {
        const Policy& p = spec_.regions[region].policy;
        HRegion& r = regions_[region];
        std::uint64_t want = blockSizeFor(p, request);
        std::size_t target = classIndex(p, want);

        auto& exact = classList(r, want);
        if (!exact.empty()) {
            std::uint64_t addr = exact.front();
            exact.erase(exact.begin());
            ++m_.accesses;
            ++m_.simTime;
            return addr;
        }
        if (p.split) {
            // classLists kept sorted ascending by class size
            for (auto& [size, list] : r.classLists) {
                if (size <= want || list.empty()) continue;
                if (!reaches(p, classIndex(p, size), target)) continue;
                std::uint64_t addr = list.front();
                list.erase(list.begin());
                ++m_.accesses;
                ++m_.simTime;
                return splitDown(region, addr, target);
            }
        }
        if (auto addr = tryReserve(region, want)) return *addr;
        return growAndCarve(region, want);
    }

    std::uint64_t splitDown(std::size_t region, std::uint64_t addr, std::size_t target) {
        const Policy& p = spec_.regions[region].policy;
        HRegion& r = regions_[region];
        std::size_t cur = classIndex(p, blocks_[blockAt(addr)].size);
        while (cur > target) {
            std::size_t i = blockAt(addr);
            HBlock parent = blocks_[i];
            std::size_t leftClass = cur - 1;
            std::size_t rightClass = p.kind == Kind::BuddyBinary ? cur - 1 : cur - 2;
            std::uint64_t leftSize = classSize(p, leftClass);
            std::uint64_t rightSize = classSize(p, rightClass);

            splits_.push_back({parent.addr, parent.size, parent.splitRec, parent.left, leftSize,
                               rightSize});
            long long rec = static_cast<long long>(splits_.size()) - 1;
            ++m_.splits;
            m_.simTime += 2;

            blocks_.erase(blocks_.begin() + static_cast<std::ptrdiff_t>(i));
            HBlock lhs;
            lhs.addr = parent.addr;
            lhs.size = leftSize;
            lhs.region = region;
            lhs.splitRec = rec;
            lhs.left = true;
            HBlock rhs = lhs;
            rhs.addr = parent.addr + leftSize;
            rhs.size = rightSize;
            rhs.left = false;
            insertSorted(lhs);
            insertSorted(rhs);

            bool keepRight = rightClass < leftClass && reaches(p, rightClass, target);
            if (keepRight) {
                auto& list = classList(r, leftSize);
                list.insert(list.begin(), lhs.addr);
                addr = rhs.addr;
                cur = rightClass;
            } else {
                auto& list = classList(r, rightSize);
                list.insert(list.begin(), rhs.addr);
                addr = lhs.addr;
                cur = leftClass;
            }
        }
        return addr;
    }

    std::uint64_t allocFreeList(std::size_t region, std::uint64_t request) {
        const Policy& p = spec_.regions[region].policy;
        HRegion& r = regions_[region];
        std::uint64_t need = request + spec_.headerBytes;

        std::size_t chosen = r.freeList.size();
        if (p.fit == memopt::FitStrategy::First) {
            for (std::size_t i = 0; i < r.freeList.size(); ++i) {
                ++m_.accesses;
                ++m_.simTime;
                if (blocks_[blockAt(r.freeList[i])].size >= need) {
                    chosen = i;
                    break;
                }
            }
        } else {
            std::uint64_t best = 0;
            for (std::size_t i = 0; i < r.freeList.size(); ++i) {
                ++m_.accesses;
                ++m_.simTime;
                std::uint64_t size = blocks_[blockAt(r.freeList[i])].size;
                if (size >= need && (chosen == r.freeList.size() || size < best)) {
                    chosen = i;
                    best = size;
                }
            }
        }

        std::uint64_t addr;
        if (chosen != r.freeList.size()) {
            addr = r.freeList[chosen];
            r.freeList.erase(r.freeList.begin() + static_cast<std::ptrdiff_t>(chosen));
        } else {
            addr = grow(region, need);
        }

        std::size_t i = blockAt(addr);
        if (p.split && blocks_[i].size >= need + spec_.headerBytes + 16) {
            std::uint64_t rest = blocks_[i].size - need;
            blocks_[i].size = need;
            HBlock remainder;
            remainder.addr = addr + need;
            remainder.size = rest;
            remainder.region = region;
            insertSorted(remainder);
            insertOrdered(region, remainder.addr);
            ++m_.splits;
            m_.simTime += 2;
        }
        return addr;
    }

    void insertOrdered(std::size_t region, std::uint64_t addr) {
        const Policy& p = spec_.regions[region].policy;
        auto& list = regions_[region].freeList;
        switch (p.order) {
            case memopt::FreeOrder::Fifo:
                list.push_back(addr);
                break;
            case memopt::FreeOrder::Lifo:
                list.insert(list.begin(), addr);
                break;
            case memopt::FreeOrder::Addr:
                list.insert(std::lower_bound(list.begin(), list.end(), addr), addr);
                break;
        }
    }

    void removeAddr(std::vector<std::uint64_t>& list, std::uint64_t addr) {
        auto pos = std::find(list.begin(), list.end(), addr);
        if (pos == list.end()) throw std::runtime_error("oracle: list miss");
        list.erase(pos);
    }

    void freeId(std::uint64_t id) {
        ++m_.frees;
        ++m_.simTime;
        std::uint64_t addr = 0;
        bool found = false;
        for (std::size_t i = 0; i < ids_.size(); ++i) {
            if (ids_[i].first == id) {
                addr = ids_[i].second;
                ids_.erase(ids_.begin() + static_cast<std::ptrdiff_t>(i));
                found = true;
                break;
            }
        }
        if (!found) throw std::runtime_error("oracle: free of unknown id");

        std::size_t i = blockAt(addr);
        blocks_[i].live = false;
        blocks_[i].requested = 0;
        std::size_t region = blocks_[i].region;
        const Policy& p = spec_.regions[region].policy;
        HRegion& r = regions_[region];
        switch (p.kind) {
            case Kind::SegregatedExact:
            case Kind::SegregatedPow2: {
                auto& list = classList(r, blocks_[i].size);
                list.insert(list.begin(), addr);
                break;
            }
            case Kind::BuddyBinary:
            case Kind::BuddyFib:
                freeBuddy(region, addr);
                break;
            case Kind::FreeList:
                freeList(region, addr);
                break;
            default:
                throw std::runtime_error("oracle: bad policy");
        }
    }

    void freeBuddy(std::size_t region, std::uint64_t addr) {
        const Policy& p = spec_.regions[region].policy;
        HRegion& r = regions_[region];
        if (p.coalesce) {
            for (;;) {
                std::size_t i = blockAt(addr);
                if (blocks_[i].splitRec < 0) break;
                HSplit rec = splits_[static_cast<std::size_t>(blocks_[i].splitRec)];
                std::uint64_t sibAddr =
                    blocks_[i].left ? rec.parentAddr + rec.leftSize : rec.parentAddr;
                std::uint64_t sibSize = blocks_[i].left ? rec.rightSize : rec.leftSize;

                std::size_t sib = blocks_.size();
                for (std::size_t k = 0; k < blocks_.size(); ++k)
                    if (blocks_[k].addr == sibAddr) {
                        sib = k;
                        break;
                    }
                if (sib == blocks_.size() || blocks_[sib].live ||
                    blocks_[sib].size != sibSize ||
                    blocks_[sib].splitRec != blocks_[i].splitRec)
                    break;

                removeAddr(classList(r, sibSize), sibAddr);
                // erase higher index first
                if (sib > i) {
                    blocks_.erase(blocks_.begin() + static_cast<std::ptrdiff_t>(sib));
                    blocks_.erase(blocks_.begin() + static_cast<std::ptrdiff_t>(i));
                } else {
                    blocks_.erase(blocks_.begin() + static_cast<std::ptrdiff_t>(i));
                    blocks_.erase(blocks_.begin() + static_cast<std::ptrdiff_t>(sib));
                }
                HBlock parent;
                parent.addr = rec.parentAddr;
                parent.size = rec.parentSize;
                parent.region = region;
                parent.splitRec = rec.parentRec;
                parent.left = rec.parentLeft;
                insertSorted(parent);
                ++m_.coalesces;
                m_.simTime += 3;
                addr = parent.addr;
            }
        }
        std::size_t i = blockAt(addr);
        auto& list = classList(r, blocks_[i].size);
        list.insert(list.begin(), addr);
    }

    void freeList(std::size_t region, std::uint64_t addr) {
        const Policy& p = spec_.regions[region].policy;
        HRegion& r = regions_[region];
        if (p.coalesce) {
            std::size_t i = blockAt(addr);
            // left neighbor
            if (i > 0 && !blocks_[i - 1].live && blocks_[i - 1].region == region) {
                removeAddr(r.freeList, blocks_[i - 1].addr);
                std::uint64_t newAddr = blocks_[i - 1].addr;
                std::uint64_t newSize = blocks_[i - 1].size + blocks_[i].size;
                blocks_.erase(blocks_.begin() + static_cast<std::ptrdiff_t>(i));
                blocks_.erase(blocks_.begin() + static_cast<std::ptrdiff_t>(i - 1));
                HBlock merged;
                merged.addr = newAddr;
                merged.size = newSize;
                merged.region = region;
                insertSorted(merged);
                ++m_.coalesces;
                m_.simTime += 3;
                addr = newAddr;
            }
            i = blockAt(addr);
            if (i + 1 < blocks_.size() && !blocks_[i + 1].live &&
                blocks_[i + 1].region == region) {
                removeAddr(r.freeList, blocks_[i + 1].addr);
                std::uint64_t newSize = blocks_[i].size + blocks_[i + 1].size;
                blocks_.erase(blocks_.begin() + static_cast<std::ptrdiff_t>(i + 1));
                blocks_[blockAt(addr)].size = newSize;
                ++m_.coalesces;
                m_.simTime += 3;
            }
        }
        insertOrdered(region, addr);
    }

    const memopt::DmmSpec& spec_;
    std::vector<HRegion> regions_;
    std::vector<HBlock> blocks_;  // sorted by addr
    std::vector<HSplit> splits_;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> ids_;
    std::uint64_t brk_ = 0;
    memopt::DmmMetrics m_;
};

inline memopt::DmmMetrics referenceReplay(const memopt::DmmSpec& spec,
                                          const std::vector<memopt::AllocEvent>& trace) {
    ReferenceHeap heap(spec);
    return heap.run(trace);
}

}  // namespace oracle
