#pragma once

#include <string>
#include <vector>

#include "memopt/evolve.hpp"
#include "memopt/thermal.hpp"
#include "memopt/traces.hpp"

namespace memopt {

struct EnergyParams {
    double eDynReadJ = 2e-12;   // dynamic read energy per access
    double eDynWriteJ = 3e-12;  // dynamic write energy per access

    void validate() const;
};

// Logical register i lives in physical slot assignment[i].
struct Placement {
    std::vector<int> assignment;  // bijection onto the floorplan's slots
    Floorplan floorplan;

    std::vector<int> inverse() const;  // slot -> logical register
    void validate() const;
};

struct PlacementObjectives {
    double thermalFitness = 0;  // pairwise dp_i*dp_j / distance sum
    double areaViolation = 0;   // cells of out-of-bounds plus pairwise overlap
};

// Per-register energy over the profiling window: reads*eRead + writes*eWrite.
std::vector<double> registerEnergy(const RegisterProfile& profile, const EnergyParams& params);

double totalEnergy(const RegisterProfile& profile, const EnergyParams& params);

// Power densities dp = (E/window)/area, in W/um^2; area from each register's
// slot rectangle.
std::vector<double> powerDensities(const RegisterProfile& profile, const EnergyParams& params,
                                   const Floorplan& plan);

// Sum over unordered pairs i<j of dp_i*dp_j / d_ij, with d_ij the Euclidean
// distance in microns between the centers of the slots holding logical
// registers i and j. Coincident centers are an error.
double placementFitness(const Placement& placement, const std::vector<double>& dp);

// Out-of-bounds area plus pairwise overlap area, in cells. Zero for any
// permutation over the floorplan's slot grid; nonzero only for free-form
// rectangle sets.
double areaViability(const std::vector<CellRect>& rects, int gridWidth, int gridHeight);
double areaViability(const Placement& placement);

PlacementObjectives placementObjectives(const Placement& placement,
                                        const std::vector<double>& dp);

struct PlacementFrontMember {
    Placement placement;
    PlacementObjectives objectives;
};

// NSGA-II over permutations minimizing (thermalFitness, areaViolation).
std::vector<PlacementFrontMember> optimizePlacement(const RegisterProfile& profile,
                                                    const EnergyParams& params,
                                                    const Floorplan& plan,
                                                    const EvolutionConfig& config);

struct TemperatureReport {
    double baselineAvgRise = 0;
    double baselineMaxRise = 0;
    double optimizedAvgRise = 0;
    double optimizedMaxRise = 0;
    double avgImprovementPercent = 0;  // 100*(baseline-optimized)/baseline, 0/0 -> 0
    double maxImprovementPercent = 0;
    TemperatureField baselineField;
    TemperatureField optimizedField;
};

// Thermal solve of the placement against the identity (row-major) baseline.
TemperatureReport temperatureReport(const Placement& placement, const RegisterProfile& profile,
                                    const EnergyParams& params, const MaterialParams& material);

std::string placementToJson(const Placement& placement, const PlacementObjectives& objectives);

}  // namespace memopt
