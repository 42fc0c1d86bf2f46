#include "memopt/traces.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <queue>
#include <sstream>
#include <unordered_set>

namespace memopt {

namespace {

// Line-at-a-time source over an istream or a gzip file; keeps memory bounded
// by the longest line, not the file.
class LineReader {
public:
    explicit LineReader(std::istream& in) : in_(&in) {}

    explicit LineReader(const std::string& path) {
        if (path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0) {
            gz_ = gzopen(path.c_str(), "rb");
            if (!gz_) throw DataError("cannot open '" + path + "'");
        } else {
            file_ = std::make_unique<std::ifstream>(path, std::ios::binary);
            if (!*file_) throw DataError("cannot open '" + path + "'");
            in_ = file_.get();
        }
    }

    ~LineReader() {
        if (gz_) gzclose(gz_);
    }

    LineReader(const LineReader&) = delete;
    LineReader& operator=(const LineReader&) = delete;

    bool next(std::string& line) {
        if (gz_) {
            line.clear();
            char buf[4096];
            bool got = false;
            while (gzgets(gz_, buf, sizeof buf)) {
                got = true;
                line += buf;
                if (!line.empty() && line.back() == '\n') {
                    line.pop_back();
                    break;
                }
            }
            return got;
        }
        return static_cast<bool>(std::getline(*in_, line));
    }

private:
    std::istream* in_ = nullptr;
    std::unique_ptr<std::ifstream> file_;
    gzFile gz_ = nullptr;
};

// Splits on runs of spaces/tabs. Carriage returns are stripped (CRLF input).
std::vector<std::string> splitFields(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == '\r') continue;
        if (c == ' ' || c == '\t') {
            if (!cur.empty()) {
                fields.push_back(std::move(cur));
                cur.clear();
            }
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) fields.push_back(std::move(cur));
    return fields;
}

bool isSkippable(const std::vector<std::string>& fields) {
    return fields.empty() || fields[0][0] == '#';
}

std::uint64_t parseU64(const std::string& s, int base, const char* what, std::size_t line) {
    std::size_t pos = 0;
    std::uint64_t v = 0;
    try {
        v = std::stoull(s, &pos, base);
    } catch (const std::exception&) {
        throw ParseError(std::string("invalid ") + what + " '" + s + "'", line);
    }
    if (pos != s.size()) throw ParseError(std::string("invalid ") + what + " '" + s + "'", line);
    return v;
}

double parseF64(const std::string& s, const char* what, std::size_t line) {
    std::size_t pos = 0;
    double v = 0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw ParseError(std::string("invalid ") + what + " '" + s + "'", line);
    }
    if (pos != s.size()) throw ParseError(std::string("invalid ") + what + " '" + s + "'", line);
    return v;
}

std::vector<MemRef> parseMemTraceFrom(LineReader& reader) {
    std::vector<MemRef> trace;
    std::string line;
    std::size_t lineNo = 0;
    while (reader.next(line)) {
        ++lineNo;
        auto fields = splitFields(line);
        if (isSkippable(fields)) continue;
        if (fields.size() != 2) throw ParseError("expected '<label> <hex-address>'", lineNo);
        std::uint64_t label = parseU64(fields[0], 10, "label", lineNo);
        if (label > 2) throw ParseError("unknown label '" + fields[0] + "'", lineNo);
        std::uint64_t addr = parseU64(fields[1], 16, "address", lineNo);
        trace.push_back({static_cast<AccessKind>(label), addr});
    }
    return trace;
}

std::vector<AllocEvent> parseAllocTraceFrom(LineReader& reader) {
    std::vector<AllocEvent> trace;
    std::string line;
    std::size_t lineNo = 0;
    while (reader.next(line)) {
        ++lineNo;
        auto fields = splitFields(line);
        if (isSkippable(fields)) continue;
        if (fields[0] == "A") {
            if (fields.size() != 3) throw ParseError("expected 'A <id> <size>'", lineNo);
            std::uint64_t id = parseU64(fields[1], 10, "id", lineNo);
            std::uint64_t size = parseU64(fields[2], 10, "size", lineNo);
            if (size == 0) throw ParseError("alloc size must be > 0", lineNo);
            trace.push_back({AllocOp::Alloc, id, size});
        } else if (fields[0] == "F") {
            if (fields.size() != 2) throw ParseError("expected 'F <id>'", lineNo);
            trace.push_back({AllocOp::Free, parseU64(fields[1], 10, "id", lineNo), 0});
        } else {
            throw ParseError("unknown op '" + fields[0] + "'", lineNo);
        }
    }
    return trace;
}

RegisterProfile parseRegisterProfileFrom(LineReader& reader) {
    RegisterProfile profile;
    std::string line;
    std::size_t lineNo = 0;
    bool headerSeen = false;
    std::vector<bool> seen;
    while (reader.next(line)) {
        ++lineNo;
        auto fields = splitFields(line);
        if (isSkippable(fields)) continue;
        if (!headerSeen) {
            if (fields.size() != 4 || fields[0] != "registers" || fields[2] != "window")
                throw ParseError("expected 'registers <N> window <seconds>'", lineNo);
            profile.numRegisters = parseU64(fields[1], 10, "register count", lineNo);
            profile.windowSeconds = parseF64(fields[3], "window", lineNo);
            if (profile.windowSeconds <= 0) throw ParseError("window must be > 0", lineNo);
            profile.reads.assign(profile.numRegisters, 0);
            profile.writes.assign(profile.numRegisters, 0);
            seen.assign(profile.numRegisters, false);
            headerSeen = true;
            continue;
        }
        if (fields.size() != 3) throw ParseError("expected '<reg> <reads> <writes>'", lineNo);
        std::uint64_t idx = parseU64(fields[0], 10, "register index", lineNo);
        if (idx >= profile.numRegisters) throw ParseError("register index out of range", lineNo);
        if (seen[idx]) throw ParseError("duplicate register index " + fields[0], lineNo);
        seen[idx] = true;
        profile.reads[idx] = parseU64(fields[1], 10, "read count", lineNo);
        profile.writes[idx] = parseU64(fields[2], 10, "write count", lineNo);
    }
    if (!headerSeen) throw ParseError("missing 'registers ... window ...' header", lineNo + 1);
    return profile;
}

}  // namespace

std::vector<MemRef> parseMemTrace(std::istream& in) {
    LineReader reader(in);
    return parseMemTraceFrom(reader);
}

std::vector<AllocEvent> parseAllocTrace(std::istream& in) {
    LineReader reader(in);
    return parseAllocTraceFrom(reader);
}

RegisterProfile parseRegisterProfile(std::istream& in) {
    LineReader reader(in);
    return parseRegisterProfileFrom(reader);
}

std::vector<MemRef> loadMemTrace(const std::string& path) {
    LineReader reader(path);
    return parseMemTraceFrom(reader);
}

std::vector<AllocEvent> loadAllocTrace(const std::string& path) {
    LineReader reader(path);
    return parseAllocTraceFrom(reader);
}

RegisterProfile loadRegisterProfile(const std::string& path) {
    LineReader reader(path);
    return parseRegisterProfileFrom(reader);
}

void serializeMemTrace(const std::vector<MemRef>& trace, std::ostream& out) {
    char buf[32];
    for (const auto& r : trace) {
        std::snprintf(buf, sizeof buf, "%u 0x%llx\n", static_cast<unsigned>(r.kind),
                      static_cast<unsigned long long>(r.address));
        out << buf;
    }
}

void serializeAllocTrace(const std::vector<AllocEvent>& trace, std::ostream& out) {
    for (const auto& e : trace) {
        if (e.op == AllocOp::Alloc)
            out << "A " << e.id << ' ' << e.size << '\n';
        else
            out << "F " << e.id << '\n';
    }
}

void serializeRegisterProfile(const RegisterProfile& profile, std::ostream& out) {
    out << "registers " << profile.numRegisters << " window "
        << formatDouble(profile.windowSeconds) << '\n';
    for (std::size_t i = 0; i < profile.numRegisters; ++i)
        out << i << ' ' << profile.reads[i] << ' ' << profile.writes[i] << '\n';
}

void validateAllocTrace(const std::vector<AllocEvent>& trace) {
    std::unordered_set<std::uint64_t> live;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const auto& e = trace[i];
        if (e.op == AllocOp::Alloc) {
            if (e.size == 0) throw DataError("alloc of size 0 at event " + std::to_string(i));
            if (!live.insert(e.id).second)
                throw DataError("duplicate live id " + std::to_string(e.id) + " at event " +
                                std::to_string(i));
        } else {
            if (live.erase(e.id) == 0)
                throw DataError("free of unknown or already-freed id " + std::to_string(e.id) +
                                " at event " + std::to_string(i));
        }
    }
}

std::vector<MemRef> genSyntheticMemTrace(const MemTraceSpec& spec) {
    if (spec.length == 0) throw DataError("trace length must be > 0");
    if (spec.instrShare < 0 || spec.instrShare > 1 || spec.strideShare < 0 || spec.strideShare > 1)
        throw DataError("shares must lie in [0,1]");
    if (spec.workingSetBytes == 0) throw DataError("working set must be > 0");

    Rng rng(spec.seed);
    std::vector<MemRef> trace;
    trace.reserve(spec.length);

    // Instruction fetches walk a looping PC; data references mix sequential
    // stride runs with uniform draws inside the working set.
    const std::uint64_t ws = spec.workingSetBytes;
    const std::uint64_t loopLen = std::max<std::uint64_t>(16, ws / 64);
    std::uint64_t pc = 0;
    std::uint64_t strideAddr = 0;
    std::uint64_t strideLeft = 0;

    for (std::size_t i = 0; i < spec.length; ++i) {
        if (rng.bernoulli(spec.instrShare)) {
            trace.push_back({AccessKind::InstrFetch, pc % ws});
            pc = (pc + 4) % loopLen;
            continue;
        }
        AccessKind kind = rng.bernoulli(0.7) ? AccessKind::DataRead : AccessKind::DataWrite;
        std::uint64_t addr;
        if (rng.bernoulli(spec.strideShare)) {
            if (strideLeft == 0) {
                strideAddr = rng.uniformInt(ws);
                strideLeft = 8 + rng.uniformInt(56);
            }
            addr = strideAddr % ws;
            strideAddr += 8;
            --strideLeft;
        } else {
            addr = rng.uniformInt(ws);
        }
        trace.push_back({kind, addr});
    }
    return trace;
}

std::vector<AllocEvent> genSyntheticAllocTrace(const AllocTraceSpec& spec) {
    if (spec.events == 0) throw DataError("event count must be > 0");
    if (spec.sizeClasses.empty()) throw DataError("need at least one size class");
    double total = 0;
    for (const auto& [size, w] : spec.sizeClasses) {
        if (size == 0) throw DataError("size class of 0 bytes");
        if (w < 0) throw DataError("negative size-class weight");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) throw DataError("size-class weights must sum to 1");
    if (spec.meanLifetime <= 0) throw DataError("mean lifetime must be > 0");

    Rng rng(spec.seed);
    std::vector<AllocEvent> trace;
    trace.reserve(spec.events);

    // Min-heap of (deadline, id); a free is emitted once its deadline passes.
    using Pending = std::pair<double, std::uint64_t>;
    std::priority_queue<Pending, std::vector<Pending>, std::greater<>> pending;
    std::uint64_t nextId = 1;

    auto drawSize = [&] {
        double u = rng.uniform01();
        double c = 0;
        for (const auto& [size, w] : spec.sizeClasses) {
            c += w;
            if (u < c) return size;
        }
        return spec.sizeClasses.back().first;
    };

    while (trace.size() < spec.events) {
        double now = static_cast<double>(trace.size());
        if (!pending.empty() && pending.top().first <= now) {
            trace.push_back({AllocOp::Free, pending.top().second, 0});
            pending.pop();
            continue;
        }
        std::uint64_t id = nextId++;
        std::uint64_t size = drawSize();
        double life = -spec.meanLifetime * std::log(1.0 - rng.uniform01());
        trace.push_back({AllocOp::Alloc, id, size});
        if (trace.size() < spec.events) pending.push({now + 1.0 + life, id});
    }
    return trace;
}

}  // namespace memopt
