#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "memopt/common.hpp"

namespace memopt {

// ---------------------------------------------------------------------------
// Memory reference traces (.din): one record per line, `<label> <hex-addr>`,
// label 0 = data read, 1 = data write, 2 = instruction fetch. Addresses are
// accepted with or without a 0x prefix. Blank lines and `#` comments skipped.
// ---------------------------------------------------------------------------

enum class AccessKind : std::uint8_t { DataRead = 0, DataWrite = 1, InstrFetch = 2 };

struct MemRef {
    AccessKind kind;
    std::uint64_t address;

    bool operator==(const MemRef&) const = default;
};

std::vector<MemRef> parseMemTrace(std::istream& in);
void serializeMemTrace(const std::vector<MemRef>& trace, std::ostream& out);

// ---------------------------------------------------------------------------
// Allocation traces (.alloc): `A <id> <size>` or `F <id>` per line.
// ---------------------------------------------------------------------------

enum class AllocOp : std::uint8_t { Alloc, Free };

struct AllocEvent {
    AllocOp op;
    std::uint64_t id;
    std::uint64_t size = 0;  // meaningful only for Alloc

    bool operator==(const AllocEvent&) const = default;
};

std::vector<AllocEvent> parseAllocTrace(std::istream& in);
void serializeAllocTrace(const std::vector<AllocEvent>& trace, std::ostream& out);

// Flags double frees, frees of unknown ids, duplicate live ids and zero sizes.
// Throws DataError naming the 0-based event index.
void validateAllocTrace(const std::vector<AllocEvent>& trace);

// ---------------------------------------------------------------------------
// Register access profiles (.regprof):
//   header `registers <N> window <seconds>`, then lines `<reg> <reads> <writes>`.
// Missing registers default to zero counts.
// ---------------------------------------------------------------------------

struct RegisterProfile {
    std::size_t numRegisters = 0;
    std::vector<std::uint64_t> reads;
    std::vector<std::uint64_t> writes;
    double windowSeconds = 1.0;
};

RegisterProfile parseRegisterProfile(std::istream& in);
void serializeRegisterProfile(const RegisterProfile& profile, std::ostream& out);

// ---------------------------------------------------------------------------
// Synthetic workload generators. Pure functions of (spec, seed).
// ---------------------------------------------------------------------------

struct MemTraceSpec {
    std::size_t length = 10000;
    double instrShare = 0.5;      // fraction of instruction fetches
    std::uint64_t workingSetBytes = 1 << 20;
    double strideShare = 0.5;     // fraction of data refs that walk sequential strides
    std::uint64_t seed = 0;
};

std::vector<MemRef> genSyntheticMemTrace(const MemTraceSpec& spec);

struct AllocTraceSpec {
    std::size_t events = 10000;
    // size class -> probability weight; weights must sum to 1 (+- 1e-9)
    std::vector<std::pair<std::uint64_t, double>> sizeClasses{{64, 1.0}};
    double meanLifetime = 16.0;   // events between alloc and its free (exponential)
    std::uint64_t seed = 0;
};

std::vector<AllocEvent> genSyntheticAllocTrace(const AllocTraceSpec& spec);

// ---------------------------------------------------------------------------
// File helpers: transparently gunzip when the filename ends in .gz.
// ---------------------------------------------------------------------------

std::vector<MemRef> loadMemTrace(const std::string& path);
std::vector<AllocEvent> loadAllocTrace(const std::string& path);
RegisterProfile loadRegisterProfile(const std::string& path);

}  // namespace memopt
