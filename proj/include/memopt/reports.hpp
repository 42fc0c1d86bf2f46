#pragma once

#include <string>
#include <vector>

#include "memopt/evolve.hpp"

namespace memopt {

enum class ReportFormat { Csv, Json };

// Plot-ready front emission: rows `objective1,objective2,<genome fields...>`
// sorted by objective1 ascending. JSON mirrors the CSV contents.
std::string emitParetoReport(const ParetoFront& front, ReportFormat format);

// Round-trip parser for the CSV form (objectives only; genome fields are
// opaque strings).
struct ParetoReportRow {
    std::vector<double> objectives;
    std::vector<std::string> genomeFields;
};
std::vector<ParetoReportRow> parseParetoReportCsv(const std::string& text);

}  // namespace memopt
