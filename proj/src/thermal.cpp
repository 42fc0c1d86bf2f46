#include "memopt/thermal.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "json.hpp"

namespace memopt {

using nlohmann::json;

std::pair<double, double> Floorplan::registerCenter(std::size_t reg) const {
    const CellRect& r = registers.at(reg);
    return {(r.x + r.wCells / 2.0) * cellSizeMicrons, (r.y + r.hCells / 2.0) * cellSizeMicrons};
}

void Floorplan::validate() const {
    if (gridWidth <= 0 || gridHeight <= 0) throw DataError("floorplan grid must be nonempty");
    if (cellSizeMicrons <= 0) throw DataError("cell size must be > 0");
    for (const auto& r : registers) {
        if (r.wCells <= 0 || r.hCells <= 0) throw DataError("register with empty extent");
        if (r.x < 0 || r.y < 0 || r.x + r.wCells > gridWidth || r.y + r.hCells > gridHeight)
            throw DataError("register outside the grid");
    }
    for (std::size_t i = 0; i < registers.size(); ++i) {
        for (std::size_t j = i + 1; j < registers.size(); ++j) {
            const auto& a = registers[i];
            const auto& b = registers[j];
            bool overlapX = a.x < b.x + b.wCells && b.x < a.x + a.wCells;
            bool overlapY = a.y < b.y + b.hCells && b.y < a.y + a.hCells;
            if (overlapX && overlapY) throw DataError("overlapping registers in floorplan");
        }
    }
}

Floorplan buildFloorplan(std::size_t numRegisters, int rows, int cols, int regWidthCells,
                         int regHeightCells, double cellSizeMicrons) {
    if (rows <= 0 || cols <= 0 || regWidthCells <= 0 || regHeightCells <= 0)
        throw DataError("floorplan dimensions must be positive");
    if (static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) != numRegisters)
        throw DataError("topology " + std::to_string(rows) + "x" + std::to_string(cols) +
                        " does not hold " + std::to_string(numRegisters) + " registers");
    Floorplan plan;
    plan.gridWidth = cols * regWidthCells;
    plan.gridHeight = rows * regHeightCells;
    plan.cellSizeMicrons = cellSizeMicrons;
    plan.topologyRows = rows;
    plan.topologyCols = cols;
    plan.registers.reserve(numRegisters);
    for (std::size_t r = 0; r < numRegisters; ++r) {
        int blockRow = static_cast<int>(r) / cols;
        int blockCol = static_cast<int>(r) % cols;
        plan.registers.push_back(
            {blockCol * regWidthCells, blockRow * regHeightCells, regWidthCells, regHeightCells});
    }
    plan.validate();
    return plan;
}

Floorplan presetFloorplan(const std::string& name) {
    struct Preset {
        std::size_t registers;
        int rows, cols;
    };
    static const std::map<std::string, Preset> presets = {
        {"vliw-c1", {32, 32, 1}}, {"vliw-c2", {32, 16, 2}}, {"vliw-c3", {32, 4, 8}},
        {"arm-c1", {16, 16, 1}},  {"arm-c2", {16, 8, 2}},   {"arm-c3", {16, 2, 8}},
    };
    auto it = presets.find(name);
    if (it == presets.end()) throw DataError("unknown floorplan preset '" + name + "'");
    const auto& p = it->second;
    return buildFloorplan(p.registers, p.rows, p.cols, 3, 3, 3.0);
}

std::vector<std::string> floorplanPresetNames() {
    return {"vliw-c1", "vliw-c2", "vliw-c3", "arm-c1", "arm-c2", "arm-c3"};
}

void MaterialParams::validate() const {
    if (conductivityWPerMK <= 0 || thicknessMicrons <= 0 || boundaryConductanceWPerK <= 0)
        throw DataError("material parameters must be strictly positive");
    if (!std::isfinite(ambientCelsius)) throw DataError("ambient must be finite");
}

std::vector<double> SparseMatrix::multiply(const std::vector<double>& x) const {
    std::vector<double> y(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0;
        for (std::size_t k = rowPtr[i]; k < rowPtr[i + 1]; ++k) acc += val[k] * x[col[k]];
        y[i] = acc;
    }
    return y;
}

std::vector<double> SparseMatrix::diagonal() const {
    std::vector<double> d(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = rowPtr[i]; k < rowPtr[i + 1]; ++k)
            if (col[k] == i) d[i] = val[k];
    return d;
}

ThermalSystem assembleSystem(const Floorplan& plan, const std::vector<double>& perRegisterPowerW,
                             const MaterialParams& material) {
    plan.validate();
    material.validate();
    if (perRegisterPowerW.size() != plan.registers.size())
        throw DataError("power vector length does not match register count");
    for (double p : perRegisterPowerW)
        if (!std::isfinite(p) || p < 0) throw DataError("register power must be finite and >= 0");

    const int w = plan.gridWidth;
    const int h = plan.gridHeight;
    const std::size_t n = plan.cellCount();

    // Lateral conductance between 4-adjacent cells: the cross-section
    // (cellSize x thickness) over the center distance (cellSize), so cellSize
    // cancels and only the film thickness remains.
    const double g = material.conductivityWPerMK * material.thicknessMicrons * 1e-6;
    const double b = material.boundaryConductanceWPerK;

    ThermalSystem sys;
    sys.conductance.n = n;
    sys.conductance.rowPtr.assign(n + 1, 0);
    sys.power.assign(n, 0.0);

    auto exposedEdges = [&](int x, int y) {
        int e = 0;
        if (x == 0) ++e;
        if (x == w - 1) ++e;
        if (y == 0) ++e;
        if (y == h - 1) ++e;
        return e;
    };

    // First pass: entries per row (diagonal + interior neighbors).
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::size_t i = plan.cellIndex(x, y);
            std::size_t entries = 1;
            entries += (x > 0) + (x < w - 1) + (y > 0) + (y < h - 1);
            sys.conductance.rowPtr[i + 1] = entries;
        }
    }
    for (std::size_t i = 0; i < n; ++i) sys.conductance.rowPtr[i + 1] += sys.conductance.rowPtr[i];
    sys.conductance.col.assign(sys.conductance.rowPtr[n], 0);
    sys.conductance.val.assign(sys.conductance.rowPtr[n], 0.0);

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::size_t i = plan.cellIndex(x, y);
            std::size_t k = sys.conductance.rowPtr[i];
            int neighbors = (x > 0) + (x < w - 1) + (y > 0) + (y < h - 1);
            double boundary = b * exposedEdges(x, y);
            sys.totalBoundaryConductance += boundary;
            // Row layout: ascending column order (west, north are smaller
            // indices than i; east, south larger). cellIndex = y*w + x.
            if (y > 0) {
                sys.conductance.col[k] = plan.cellIndex(x, y - 1);
                sys.conductance.val[k++] = -g;
            }
            if (x > 0) {
                sys.conductance.col[k] = plan.cellIndex(x - 1, y);
                sys.conductance.val[k++] = -g;
            }
            sys.conductance.col[k] = i;
            sys.conductance.val[k++] = g * neighbors + boundary;
            if (x < w - 1) {
                sys.conductance.col[k] = plan.cellIndex(x + 1, y);
                sys.conductance.val[k++] = -g;
            }
            if (y < h - 1) {
                sys.conductance.col[k] = plan.cellIndex(x, y + 1);
                sys.conductance.val[k++] = -g;
            }
        }
    }

    for (std::size_t r = 0; r < plan.registers.size(); ++r) {
        const CellRect& rect = plan.registers[r];
        double perCell = perRegisterPowerW[r] / (static_cast<double>(rect.wCells) * rect.hCells);
        for (int y = rect.y; y < rect.y + rect.hCells; ++y)
            for (int x = rect.x; x < rect.x + rect.wCells; ++x)
                sys.power[plan.cellIndex(x, y)] += perCell;
    }
    return sys;
}

std::vector<double> solveDenseCholesky(const SparseMatrix& a, const std::vector<double>& b) {
    const std::size_t n = a.n;
    std::vector<double> dense(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = a.rowPtr[i]; k < a.rowPtr[i + 1]; ++k)
            dense[i * n + a.col[k]] = a.val[k];

    // In-place lower Cholesky: A = L L^T.
    std::vector<double>& m = dense;
    for (std::size_t j = 0; j < n; ++j) {
        double d = m[j * n + j];
        for (std::size_t k = 0; k < j; ++k) d -= m[j * n + k] * m[j * n + k];
        if (d <= 0) throw DataError("floating thermal network (matrix not positive definite)");
        d = std::sqrt(d);
        m[j * n + j] = d;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = m[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= m[i * n + k] * m[j * n + k];
            m[i * n + j] = s / d;
        }
    }
    // Forward then backward substitution.
    std::vector<double> x(b);
    for (std::size_t i = 0; i < n; ++i) {
        double s = x[i];
        for (std::size_t k = 0; k < i; ++k) s -= m[i * n + k] * x[k];
        x[i] = s / m[i * n + i];
    }
    for (std::size_t ii = n; ii > 0; --ii) {
        std::size_t i = ii - 1;
        double s = x[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= m[k * n + i] * x[k];
        x[i] = s / m[i * n + i];
    }
    return x;
}

std::vector<double> solvePcgJacobi(const SparseMatrix& a, const std::vector<double>& b,
                                   double tolerance, std::size_t maxIterations) {
    const std::size_t n = a.n;
    auto dot = [&](const std::vector<double>& u, const std::vector<double>& v) {
        double s = 0;
        for (std::size_t i = 0; i < n; ++i) s += u[i] * v[i];
        return s;
    };
    double bNorm = std::sqrt(dot(b, b));
    std::vector<double> x(n, 0.0);
    if (bNorm == 0) return x;

    std::vector<double> diag = a.diagonal();
    for (double d : diag)
        if (d <= 0) throw DataError("floating thermal network (non-positive diagonal)");

    std::vector<double> r(b);
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / diag[i];
    std::vector<double> p(z);
    double rz = dot(r, z);

    for (std::size_t it = 0; it < maxIterations; ++it) {
        std::vector<double> q = a.multiply(p);
        double alpha = rz / dot(p, q);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        if (std::sqrt(dot(r, r)) <= tolerance * bNorm) return x;
        for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / diag[i];
        double rzNew = dot(r, z);
        double beta = rzNew / rz;
        rz = rzNew;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    throw DataError("thermal solver failed to converge");
}

TemperatureField solveSteadyState(const ThermalSystem& system, const Floorplan& plan) {
    if (system.totalBoundaryConductance <= 0)
        throw DataError("floating thermal network (no ambient coupling)");
    const std::size_t n = system.conductance.n;
    if (n != plan.cellCount()) throw DataError("system does not match floorplan");

    TemperatureField field;
    field.gridWidth = plan.gridWidth;
    field.gridHeight = plan.gridHeight;

    bool allZero = true;
    for (double p : system.power)
        if (p != 0) {
            allZero = false;
            break;
        }
    if (allZero) {
        field.deltaT.assign(n, 0.0);
    } else if (n <= 4096) {
        field.deltaT = solveDenseCholesky(system.conductance, system.power);
    } else {
        field.deltaT =
            solvePcgJacobi(system.conductance, system.power, 1e-10, 10 * n);
    }

    field.perRegister.reserve(plan.registers.size());
    for (const auto& rect : plan.registers) {
        RegisterRise rise;
        double sum = 0;
        for (int y = rect.y; y < rect.y + rect.hCells; ++y) {
            for (int x = rect.x; x < rect.x + rect.wCells; ++x) {
                double t = field.deltaT[plan.cellIndex(x, y)];
                sum += t;
                rise.max = std::max(rise.max, t);
            }
        }
        rise.avg = sum / (static_cast<double>(rect.wCells) * rect.hCells);
        field.perRegister.push_back(rise);
    }
    return field;
}

double TemperatureField::maxRise() const {
    double m = 0;
    for (double t : deltaT) m = std::max(m, t);
    return m;
}

double TemperatureField::avgRise() const {
    if (deltaT.empty()) return 0;
    double s = 0;
    for (double t : deltaT) s += t;
    return s / static_cast<double>(deltaT.size());
}

bool mirrorSymmetryCheck(const Floorplan& plan, const std::vector<double>& perRegisterPowerW,
                         const MaterialParams& material, double tolerance) {
    ThermalSystem sys = assembleSystem(plan, perRegisterPowerW, material);

    // Mirror the per-cell power field about the vertical axis and re-solve.
    ThermalSystem mirrored = sys;
    for (int y = 0; y < plan.gridHeight; ++y)
        for (int x = 0; x < plan.gridWidth; ++x)
            mirrored.power[plan.cellIndex(x, y)] =
                sys.power[plan.cellIndex(plan.gridWidth - 1 - x, y)];

    TemperatureField a = solveSteadyState(sys, plan);
    TemperatureField b = solveSteadyState(mirrored, plan);

    double scale = std::max(a.maxRise(), 1.0);
    for (int y = 0; y < plan.gridHeight; ++y)
        for (int x = 0; x < plan.gridWidth; ++x) {
            double lhs = a.deltaT[plan.cellIndex(x, y)];
            double rhs = b.deltaT[plan.cellIndex(plan.gridWidth - 1 - x, y)];
            if (std::abs(lhs - rhs) > tolerance * scale) return false;
        }
    return true;
}

std::string floorplanToJson(const Floorplan& plan) {
    json j;
    j["gridWidth"] = plan.gridWidth;
    j["gridHeight"] = plan.gridHeight;
    j["cellSizeMicrons"] = plan.cellSizeMicrons;
    j["topologyRows"] = plan.topologyRows;
    j["topologyCols"] = plan.topologyCols;
    json regs = json::array();
    for (const auto& r : plan.registers)
        regs.push_back({{"x", r.x}, {"y", r.y}, {"wCells", r.wCells}, {"hCells", r.hCells}});
    j["registers"] = std::move(regs);
    return j.dump(2);
}

Floorplan floorplanFromJson(const std::string& text) {
    try {
        json j = json::parse(text);
        Floorplan plan;
        plan.gridWidth = j.at("gridWidth");
        plan.gridHeight = j.at("gridHeight");
        plan.cellSizeMicrons = j.at("cellSizeMicrons");
        plan.topologyRows = j.value("topologyRows", 0);
        plan.topologyCols = j.value("topologyCols", 0);
        for (const auto& r : j.at("registers"))
            plan.registers.push_back(
                {r.at("x"), r.at("y"), r.at("wCells"), r.at("hCells")});
        plan.validate();
        return plan;
    } catch (const json::exception& e) {
        throw DataError(std::string("bad floorplan JSON: ") + e.what());
    }
}

std::string fieldToJson(const TemperatureField& field) {
    json j;
    j["gridWidth"] = field.gridWidth;
    j["gridHeight"] = field.gridHeight;
    j["deltaT"] = field.deltaT;
    json per = json::array();
    for (const auto& r : field.perRegister) per.push_back({{"avg", r.avg}, {"max", r.max}});
    j["perRegister"] = std::move(per);
    j["avgRise"] = field.avgRise();
    j["maxRise"] = field.maxRise();
    return j.dump(2);
}

std::string fieldToCsv(const TemperatureField& field) {
    std::string out;
    for (int y = 0; y < field.gridHeight; ++y) {
        for (int x = 0; x < field.gridWidth; ++x) {
            if (x > 0) out += ',';
            out += formatDouble(field.deltaT[static_cast<std::size_t>(y) * field.gridWidth + x]);
        }
        out += '\n';
    }
    return out;
}

}  // namespace memopt
