#include "memopt/regfile.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace memopt {

using nlohmann::json;

void EnergyParams::validate() const {
    if (eDynReadJ < 0 || eDynWriteJ < 0) throw DataError("access energies must be >= 0");
}

std::vector<int> Placement::inverse() const {
    std::vector<int> inv(assignment.size(), -1);
    for (std::size_t logical = 0; logical < assignment.size(); ++logical)
        inv[assignment[logical]] = static_cast<int>(logical);
    return inv;
}

void Placement::validate() const {
    floorplan.validate();
    if (assignment.size() != floorplan.registers.size())
        throw DataError("assignment length does not match slot count");
    std::vector<bool> used(assignment.size(), false);
    for (int slot : assignment) {
        if (slot < 0 || static_cast<std::size_t>(slot) >= assignment.size() || used[slot])
            throw DataError("assignment is not a bijection onto the slots");
        used[slot] = true;
    }
}

std::vector<double> registerEnergy(const RegisterProfile& profile, const EnergyParams& params) {
    params.validate();
    std::vector<double> energy(profile.numRegisters, 0.0);
    for (std::size_t i = 0; i < profile.numRegisters; ++i)
        energy[i] = static_cast<double>(profile.reads[i]) * params.eDynReadJ +
                    static_cast<double>(profile.writes[i]) * params.eDynWriteJ;
    return energy;
}

double totalEnergy(const RegisterProfile& profile, const EnergyParams& params) {
    double total = 0;
    for (double e : registerEnergy(profile, params)) total += e;
    return total;
}

std::vector<double> powerDensities(const RegisterProfile& profile, const EnergyParams& params,
                                   const Floorplan& plan) {
    if (profile.numRegisters != plan.registers.size())
        throw DataError("profile register count does not match floorplan");
    if (profile.windowSeconds <= 0) throw DataError("profiling window must be > 0");
    auto energy = registerEnergy(profile, params);
    std::vector<double> dp(profile.numRegisters, 0.0);
    for (std::size_t i = 0; i < profile.numRegisters; ++i) {
        const CellRect& r = plan.registers[i];
        double areaUm2 = static_cast<double>(r.wCells) * r.hCells * plan.cellSizeMicrons *
                         plan.cellSizeMicrons;
        dp[i] = (energy[i] / profile.windowSeconds) / areaUm2;
    }
    return dp;
}

double placementFitness(const Placement& placement, const std::vector<double>& dp) {
    const std::size_t n = placement.assignment.size();
    if (dp.size() != n) throw DataError("power density length does not match placement");
    double fitness = 0;
    for (std::size_t i = 0; i < n; ++i) {
        auto [xi, yi] = placement.floorplan.registerCenter(placement.assignment[i]);
        for (std::size_t j = i + 1; j < n; ++j) {
            auto [xj, yj] = placement.floorplan.registerCenter(placement.assignment[j]);
            double d = std::hypot(xi - xj, yi - yj);
            if (d == 0) throw DataError("coincident register centers");
            fitness += dp[i] * dp[j] / d;
        }
    }
    return fitness;
}

double areaViability(const std::vector<CellRect>& rects, int gridWidth, int gridHeight) {
    auto clamp = [](int v, int lo, int hi) { return std::max(lo, std::min(v, hi)); };
    double violation = 0;
    for (const auto& r : rects) {
        int area = r.wCells * r.hCells;
        int inW = clamp(r.x + r.wCells, 0, gridWidth) - clamp(r.x, 0, gridWidth);
        int inH = clamp(r.y + r.hCells, 0, gridHeight) - clamp(r.y, 0, gridHeight);
        violation += area - std::max(0, inW) * std::max(0, inH);
    }
    for (std::size_t i = 0; i < rects.size(); ++i) {
        for (std::size_t j = i + 1; j < rects.size(); ++j) {
            int ox = std::min(rects[i].x + rects[i].wCells, rects[j].x + rects[j].wCells) -
                     std::max(rects[i].x, rects[j].x);
            int oy = std::min(rects[i].y + rects[i].hCells, rects[j].y + rects[j].hCells) -
                     std::max(rects[i].y, rects[j].y);
            if (ox > 0 && oy > 0) violation += static_cast<double>(ox) * oy;
        }
    }
    return violation;
}

double areaViability(const Placement& placement) {
    std::vector<CellRect> rects;
    rects.reserve(placement.assignment.size());
    for (int slot : placement.assignment) rects.push_back(placement.floorplan.registers[slot]);
    return areaViability(rects, placement.floorplan.gridWidth, placement.floorplan.gridHeight);
}

PlacementObjectives placementObjectives(const Placement& placement,
                                        const std::vector<double>& dp) {
    return {placementFitness(placement, dp), areaViability(placement)};
}

std::vector<PlacementFrontMember> optimizePlacement(const RegisterProfile& profile,
                                                    const EnergyParams& params,
                                                    const Floorplan& plan,
                                                    const EvolutionConfig& config) {
    plan.validate();
    auto dp = powerDensities(profile, params, plan);
    const std::size_t n = plan.registers.size();

    PermutationGenome prototype;
    prototype.order.resize(n);
    for (std::size_t i = 0; i < n; ++i) prototype.order[i] = static_cast<int>(i);

    MultiObjectiveProblem problem;
    problem.numObjectives = 2;
    problem.makeGenome = [prototype](Rng& rng) { return randomGenome(Genome{prototype}, rng); };
    problem.evaluate = [&](const Genome& g) {
        Placement p{std::get<PermutationGenome>(g).order, plan};
        auto obj = placementObjectives(p, dp);
        return std::vector<double>{obj.thermalFitness, obj.areaViolation};
    };

    ParetoFront front = nsga2Run(problem, config);

    std::vector<PlacementFrontMember> members;
    members.reserve(front.members.size());
    for (const auto& ind : front.members) {
        PlacementFrontMember m;
        m.placement = {std::get<PermutationGenome>(ind.genome).order, plan};
        m.objectives = {ind.objectives[0], ind.objectives[1]};
        members.push_back(std::move(m));
    }
    std::sort(members.begin(), members.end(), [](const auto& a, const auto& b) {
        if (a.objectives.thermalFitness != b.objectives.thermalFitness)
            return a.objectives.thermalFitness < b.objectives.thermalFitness;
        return a.placement.assignment < b.placement.assignment;
    });
    return members;
}

TemperatureReport temperatureReport(const Placement& placement, const RegisterProfile& profile,
                                    const EnergyParams& params, const MaterialParams& material) {
    placement.validate();
    const Floorplan& plan = placement.floorplan;
    auto energy = registerEnergy(profile, params);
    if (energy.size() != plan.registers.size())
        throw DataError("profile register count does not match floorplan");

    // Power of physical slot s = power of the logical register living there.
    auto slotPowers = [&](const std::vector<int>& assignment) {
        std::vector<double> powers(plan.registers.size(), 0.0);
        for (std::size_t logical = 0; logical < assignment.size(); ++logical)
            powers[assignment[logical]] = energy[logical] / profile.windowSeconds;
        return powers;
    };

    std::vector<int> identity(plan.registers.size());
    for (std::size_t i = 0; i < identity.size(); ++i) identity[i] = static_cast<int>(i);

    TemperatureReport report;
    {
        ThermalSystem sys = assembleSystem(plan, slotPowers(identity), material);
        report.baselineField = solveSteadyState(sys, plan);
    }
    {
        ThermalSystem sys = assembleSystem(plan, slotPowers(placement.assignment), material);
        report.optimizedField = solveSteadyState(sys, plan);
    }
    report.baselineAvgRise = report.baselineField.avgRise();
    report.baselineMaxRise = report.baselineField.maxRise();
    report.optimizedAvgRise = report.optimizedField.avgRise();
    report.optimizedMaxRise = report.optimizedField.maxRise();

    auto improvement = [](double baseline, double optimized) {
        if (baseline == 0) return 0.0;  // zero-power guard
        return 100.0 * (baseline - optimized) / baseline;
    };
    report.avgImprovementPercent = improvement(report.baselineAvgRise, report.optimizedAvgRise);
    report.maxImprovementPercent = improvement(report.baselineMaxRise, report.optimizedMaxRise);
    return report;
}

std::string placementToJson(const Placement& placement, const PlacementObjectives& objectives) {
    json j;
    j["assignment"] = placement.assignment;
    j["thermalFitness"] = objectives.thermalFitness;
    j["areaViolation"] = objectives.areaViolation;
    return j.dump(2);
}

}  // namespace memopt
