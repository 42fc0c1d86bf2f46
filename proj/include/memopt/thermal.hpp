#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "memopt/common.hpp"

namespace memopt {

// ---------------------------------------------------------------------------
// Register-file floorplans: a gridWidth x gridHeight field of square cells,
// with registers occupying disjoint rectangles.
// ---------------------------------------------------------------------------

struct CellRect {
    int x = 0;
    int y = 0;
    int wCells = 0;
    int hCells = 0;

    bool operator==(const CellRect&) const = default;
};

struct Floorplan {
    int gridWidth = 0;
    int gridHeight = 0;
    double cellSizeMicrons = 3.0;
    std::vector<CellRect> registers;
    int topologyRows = 0;
    int topologyCols = 0;

    std::size_t cellCount() const {
        return static_cast<std::size_t>(gridWidth) * static_cast<std::size_t>(gridHeight);
    }
    std::size_t cellIndex(int x, int y) const {
        return static_cast<std::size_t>(y) * gridWidth + x;
    }
    // Geometric center of a register rectangle, in microns.
    std::pair<double, double> registerCenter(std::size_t reg) const;

    void validate() const;  // in-bounds, pairwise disjoint rectangles
};

// Registers laid out row-major in a rows x cols block grid of regW x regH
// cell rectangles; the grid is exactly (cols*regW) x (rows*regH).
Floorplan buildFloorplan(std::size_t numRegisters, int rows, int cols, int regWidthCells,
                         int regHeightCells, double cellSizeMicrons);

// Named presets: vliw-c1 32x1, vliw-c2 16x2, vliw-c3 4x8 (32 registers);
// arm-c1 16x1, arm-c2 8x2, arm-c3 2x8 (16 registers). 3x3-cell registers,
// 3 um cells.
Floorplan presetFloorplan(const std::string& name);
std::vector<std::string> floorplanPresetNames();

// ---------------------------------------------------------------------------
// Material and the assembled steady-state system A*T = P
// ---------------------------------------------------------------------------

struct MaterialParams {
    double conductivityWPerMK = 150.0;   // silicon
    double thicknessMicrons = 10.0;
    // W/K per exposed boundary cell edge; sized so a lone default register
    // dissipating 1 mW rises about 1 C.
    double boundaryConductanceWPerK = 8.3e-5;
    double ambientCelsius = 45.0;

    void validate() const;
};

// Compressed sparse row, symmetric by construction.
struct SparseMatrix {
    std::size_t n = 0;
    std::vector<std::size_t> rowPtr;
    std::vector<std::size_t> col;
    std::vector<double> val;

    std::vector<double> multiply(const std::vector<double>& x) const;
    std::vector<double> diagonal() const;
};

struct ThermalSystem {
    SparseMatrix conductance;            // A, W/K
    std::vector<double> power;           // P, W per cell
    double totalBoundaryConductance = 0; // sum of ambient couplings, W/K
};

// 5-point stencil assembly. Neighbor conductance is
// conductivity * (cellSize * thickness) / cellSize; every exposed grid-border
// edge adds boundaryConductance to the diagonal. P spreads each register's
// power uniformly over its cells.
ThermalSystem assembleSystem(const Floorplan& plan, const std::vector<double>& perRegisterPowerW,
                             const MaterialParams& material);

struct RegisterRise {
    double avg = 0;
    double max = 0;
};

struct TemperatureField {
    int gridWidth = 0;
    int gridHeight = 0;
    std::vector<double> deltaT;  // per-cell rise over ambient, C, row-major
    std::vector<RegisterRise> perRegister;

    double maxRise() const;
    double avgRise() const;
};

// Solves A*deltaT = P to relative residual <= 1e-10: dense Cholesky for
// n <= 4096 cells, Jacobi-preconditioned CG beyond. Throws DataError
// ("floating thermal network") when the system has no ambient coupling.
TemperatureField solveSteadyState(const ThermalSystem& system, const Floorplan& plan);

// Both solver paths, exposed for cross-checking.
std::vector<double> solveDenseCholesky(const SparseMatrix& a, const std::vector<double>& b);
std::vector<double> solvePcgJacobi(const SparseMatrix& a, const std::vector<double>& b,
                                   double tolerance, std::size_t maxIterations);

// True iff mirroring the per-register powers about the vertical grid axis
// mirrors the temperature field (within tolerance). Requires a floorplan whose
// register layout is itself mirror-symmetric.
bool mirrorSymmetryCheck(const Floorplan& plan, const std::vector<double>& perRegisterPowerW,
                         const MaterialParams& material, double tolerance = 1e-9);

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

std::string floorplanToJson(const Floorplan& plan);
Floorplan floorplanFromJson(const std::string& text);
std::string fieldToJson(const TemperatureField& field);
// Row-major grid of per-cell rises, one row per line.
std::string fieldToCsv(const TemperatureField& field);

}  // namespace memopt
