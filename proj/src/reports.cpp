#include "memopt/reports.hpp"

#include <algorithm>
#include <sstream>

#include "json.hpp"

namespace memopt {

using nlohmann::json;

namespace {

std::vector<std::string> genomeFields(const Genome& g) {
    std::vector<std::string> fields;
    if (const auto* iv = std::get_if<IntegerVectorGenome>(&g)) {
        for (int v : iv->values) fields.push_back(std::to_string(v));
    } else if (const auto* p = std::get_if<PermutationGenome>(&g)) {
        for (int v : p->order) fields.push_back(std::to_string(v));
    } else {
        for (int v : std::get<CodonGenome>(g).codons) fields.push_back(std::to_string(v));
    }
    return fields;
}

std::vector<std::size_t> sortedByFirstObjective(const ParetoFront& front) {
    std::vector<std::size_t> idx(front.members.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return front.members[a].objectives < front.members[b].objectives;
    });
    return idx;
}

}  // namespace

std::string emitParetoReport(const ParetoFront& front, ReportFormat format) {
    if (front.members.empty()) throw DataError("cannot report an empty front");
    auto order = sortedByFirstObjective(front);
    const std::size_t numObj = front.members[0].objectives.size();

    if (format == ReportFormat::Csv) {
        std::string out;
        for (std::size_t o = 0; o < numObj; ++o) {
            if (o > 0) out += ',';
            out += "objective" + std::to_string(o + 1);
        }
        out += ",genome...\n";
        for (std::size_t i : order) {
            const Individual& ind = front.members[i];
            std::string row;
            for (std::size_t o = 0; o < numObj; ++o) {
                if (o > 0) row += ',';
                row += formatDouble(ind.objectives[o]);
            }
            for (const auto& f : genomeFields(ind.genome)) row += ',' + f;
            out += row + '\n';
        }
        return out;
    }

    json arr = json::array();
    for (std::size_t i : order) {
        const Individual& ind = front.members[i];
        json j;
        j["objectives"] = ind.objectives;
        j["genome"] = json::parse(genomeToJson(ind.genome));
        arr.push_back(std::move(j));
    }
    return arr.dump(2);
}

std::vector<ParetoReportRow> parseParetoReportCsv(const std::string& text) {
    std::vector<ParetoReportRow> rows;
    std::istringstream in(text);
    std::string line;
    std::size_t lineNo = 0;
    std::size_t numObj = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::istringstream ls(line);
        std::string field;
        while (std::getline(ls, field, ',')) fields.push_back(field);
        if (lineNo == 1) {
            for (const auto& f : fields)
                if (f.rfind("objective", 0) == 0) ++numObj;
            if (numObj == 0) throw ParseError("missing objective columns", lineNo);
            continue;
        }
        if (fields.size() < numObj) throw ParseError("short row", lineNo);
        ParetoReportRow row;
        for (std::size_t o = 0; o < numObj; ++o) {
            try {
                row.objectives.push_back(std::stod(fields[o]));
            } catch (const std::exception&) {
                throw ParseError("bad objective value '" + fields[o] + "'", lineNo);
            }
        }
        for (std::size_t f = numObj; f < fields.size(); ++f)
            row.genomeFields.push_back(fields[f]);
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace memopt
