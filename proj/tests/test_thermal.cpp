#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "memopt/thermal.hpp"

using namespace memopt;

namespace {

// Independent oracle: explicit Gauss-Jordan inverse of the dense system,
// then T = A^-1 * P. Deliberately a different algorithm from the library's
// Cholesky / PCG paths.
std::vector<double> gaussJordanSolve(const SparseMatrix& a, const std::vector<double>& b) {
    const std::size_t n = a.n;
    std::vector<std::vector<double>> aug(n, std::vector<double>(2 * n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = a.rowPtr[i]; k < a.rowPtr[i + 1]; ++k)
            aug[i][a.col[k]] = a.val[k];
        aug[i][n + i] = 1.0;
    }
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(aug[r][col]) > std::abs(aug[pivot][col])) pivot = r;
        std::swap(aug[col], aug[pivot]);
        double p = aug[col][col];
        REQUIRE(p != 0.0);
        for (std::size_t c = 0; c < 2 * n; ++c) aug[col][c] /= p;
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            double f = aug[r][col];
            if (f == 0) continue;
            for (std::size_t c = 0; c < 2 * n; ++c) aug[r][c] -= f * aug[col][c];
        }
    }
    std::vector<double> x(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) x[i] += aug[i][n + j] * b[j];
    return x;
}

MaterialParams defaultMaterial() { return MaterialParams{}; }

// one register per cell: lets tests drive arbitrary per-cell powers
Floorplan gridPlan(int w, int h, double cell = 3.0) {
    Floorplan plan;
    plan.gridWidth = w;
    plan.gridHeight = h;
    plan.cellSizeMicrons = cell;
    plan.topologyRows = h;
    plan.topologyCols = w;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) plan.registers.push_back({x, y, 1, 1});
    return plan;
}

}  // namespace

TEST_CASE("floorplan arithmetic: pinned preset shapes") {
    Floorplan armC1 = presetFloorplan("arm-c1");
    CHECK(armC1.gridWidth == 3);
    CHECK(armC1.gridHeight == 48);
    CHECK(armC1.registers.size() == 16);

    Floorplan armC3 = presetFloorplan("arm-c3");
    CHECK(armC3.gridWidth == 24);
    CHECK(armC3.gridHeight == 6);

    Floorplan vliwC3 = presetFloorplan("vliw-c3");
    CHECK(vliwC3.gridWidth == 24);
    CHECK(vliwC3.gridHeight == 12);
    CHECK(vliwC3.registers.size() == 32);

    CHECK_THROWS_AS(buildFloorplan(16, 3, 5, 3, 3, 3.0), DataError);
    CHECK_THROWS_AS(presetFloorplan("arm-c9"), DataError);
}

TEST_CASE("floorplan validation rejects overlaps and out-of-grid registers") {
    Floorplan plan = gridPlan(4, 4);
    plan.registers[0] = {0, 0, 2, 2};  // overlaps neighbors
    CHECK_THROWS_AS(plan.validate(), DataError);

    Floorplan plan2 = gridPlan(2, 2);
    plan2.registers[3] = {2, 0, 1, 1};  // outside
    CHECK_THROWS_AS(plan2.validate(), DataError);
}

TEST_CASE("assembly: single-cell system and row-sum identity") {
    Floorplan plan = gridPlan(1, 1);
    MaterialParams mat = defaultMaterial();
    ThermalSystem sys = assembleSystem(plan, {1e-3}, mat);
    REQUIRE(sys.conductance.n == 1);
    // sole cell has 4 exposed edges and no neighbors
    CHECK(sys.conductance.val[0] == doctest::Approx(4 * mat.boundaryConductanceWPerK));
    CHECK(sys.power[0] == doctest::Approx(1e-3));

    // each row sums to exactly the ambient coupling of that cell
    Floorplan plan2 = gridPlan(5, 4);
    std::vector<double> powers(20, 0.0);
    ThermalSystem sys2 = assembleSystem(plan2, powers, mat);
    for (std::size_t i = 0; i < sys2.conductance.n; ++i) {
        double rowSum = 0;
        for (std::size_t k = sys2.conductance.rowPtr[i]; k < sys2.conductance.rowPtr[i + 1]; ++k)
            rowSum += sys2.conductance.val[k];
        int x = static_cast<int>(i) % 5;
        int y = static_cast<int>(i) / 5;
        int exposed = (x == 0) + (x == 4) + (y == 0) + (y == 3);
        CHECK(rowSum == doctest::Approx(exposed * mat.boundaryConductanceWPerK).epsilon(1e-12));
    }
}

TEST_CASE("zero power gives exactly zero rise") {
    Floorplan plan = gridPlan(6, 6);
    ThermalSystem sys = assembleSystem(plan, std::vector<double>(36, 0.0), defaultMaterial());
    TemperatureField field = solveSteadyState(sys, plan);
    for (double t : field.deltaT) CHECK(t == 0.0);
}

TEST_CASE("single-cell analytic solution deltaT = p/(4b)") {
    Floorplan plan = gridPlan(1, 1);
    MaterialParams mat = defaultMaterial();
    double p = 2.5e-3;
    ThermalSystem sys = assembleSystem(plan, {p}, mat);
    TemperatureField field = solveSteadyState(sys, plan);
    CHECK(field.deltaT[0] ==
          doctest::Approx(p / (4 * mat.boundaryConductanceWPerK)).epsilon(1e-12));
}

TEST_CASE("solver matches the dense-inverse oracle on random grids") {
    Rng rng(2024);
    for (int trial = 0; trial < 25; ++trial) {
        int w = 2 + static_cast<int>(rng.uniformInt(7));
        int h = 2 + static_cast<int>(rng.uniformInt(7));
        Floorplan plan = gridPlan(w, h);
        std::vector<double> powers(static_cast<std::size_t>(w) * h);
        for (auto& p : powers) p = rng.uniform01() * 1e-3;
        ThermalSystem sys = assembleSystem(plan, powers, defaultMaterial());
        TemperatureField field = solveSteadyState(sys, plan);
        auto oracle = gaussJordanSolve(sys.conductance, sys.power);
        for (std::size_t i = 0; i < oracle.size(); ++i)
            CHECK(field.deltaT[i] == doctest::Approx(oracle[i]).epsilon(1e-8));
    }
}

TEST_CASE("dense and PCG paths agree") {
    Rng rng(7);
    Floorplan plan = gridPlan(24, 24);
    std::vector<double> powers(24 * 24);
    for (auto& p : powers) p = rng.uniform01() * 1e-4;
    ThermalSystem sys = assembleSystem(plan, powers, defaultMaterial());
    auto dense = solveDenseCholesky(sys.conductance, sys.power);
    auto pcg = solvePcgJacobi(sys.conductance, sys.power, 1e-10, 10 * sys.conductance.n);
    double scale = 0;
    for (double t : dense) scale = std::max(scale, std::abs(t));
    for (std::size_t i = 0; i < dense.size(); ++i)
        CHECK(std::abs(dense[i] - pcg[i]) <= 1e-8 * scale);
}

TEST_CASE("nonnegativity and monotonicity (M-matrix inverse)") {
    Rng rng(31);
    Floorplan plan = gridPlan(8, 8);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> powers(64);
        for (auto& p : powers) p = rng.uniform01() * 1e-3;
        ThermalSystem sys = assembleSystem(plan, powers, defaultMaterial());
        TemperatureField base = solveSteadyState(sys, plan);
        for (double t : base.deltaT) CHECK(t >= 0.0);

        // raise one register's power; no cell may cool
        std::size_t reg = rng.uniformInt(64);
        auto powers2 = powers;
        powers2[reg] += 1e-3;
        ThermalSystem sys2 = assembleSystem(plan, powers2, defaultMaterial());
        TemperatureField raised = solveSteadyState(sys2, plan);
        for (std::size_t i = 0; i < raised.deltaT.size(); ++i)
            CHECK(raised.deltaT[i] >= base.deltaT[i] - 1e-12);
    }
}

TEST_CASE("linearity in the power vector") {
    Rng rng(5);
    Floorplan plan = gridPlan(7, 5);
    std::vector<double> powers(35);
    for (auto& p : powers) p = rng.uniform01() * 1e-3;
    ThermalSystem sys = assembleSystem(plan, powers, defaultMaterial());
    TemperatureField base = solveSteadyState(sys, plan);

    double alpha = 3.25;
    auto scaled = powers;
    for (auto& p : scaled) p *= alpha;
    ThermalSystem sys2 = assembleSystem(plan, scaled, defaultMaterial());
    TemperatureField scaledField = solveSteadyState(sys2, plan);
    for (std::size_t i = 0; i < base.deltaT.size(); ++i)
        CHECK(scaledField.deltaT[i] ==
              doctest::Approx(alpha * base.deltaT[i]).epsilon(1e-9));
}

TEST_CASE("energy balance: ambient flux equals injected power") {
    Rng rng(17);
    Floorplan plan = gridPlan(9, 6);
    MaterialParams mat = defaultMaterial();
    std::vector<double> powers(54);
    for (auto& p : powers) p = rng.uniform01() * 1e-3;
    ThermalSystem sys = assembleSystem(plan, powers, mat);
    TemperatureField field = solveSteadyState(sys, plan);

    double flux = 0;
    for (int y = 0; y < 6; ++y) {
        for (int x = 0; x < 9; ++x) {
            int exposed = (x == 0) + (x == 8) + (y == 0) + (y == 5);
            flux += exposed * mat.boundaryConductanceWPerK * field.deltaT[plan.cellIndex(x, y)];
        }
    }
    double total = 0;
    for (double p : powers) total += p;
    CHECK(flux == doctest::Approx(total).epsilon(1e-9));
}

TEST_CASE("mirror symmetry") {
    MaterialParams mat = defaultMaterial();
    {
        Floorplan plan = gridPlan(6, 6);
        CHECK(mirrorSymmetryCheck(plan, std::vector<double>(36, 1e-3), mat));
    }
    {
        // corner hot spot on a square grid
        Floorplan plan = gridPlan(5, 5);
        std::vector<double> powers(25, 0.0);
        powers[plan.cellIndex(0, 0)] = 1e-3;
        CHECK(mirrorSymmetryCheck(plan, powers, mat));
    }
    {
        Rng rng(3);
        Floorplan plan = gridPlan(8, 5);
        std::vector<double> powers(40);
        for (auto& p : powers) p = rng.uniform01() * 1e-3;
        CHECK(mirrorSymmetryCheck(plan, powers, mat));
    }
}

TEST_CASE("per-register rises aggregate avg and max over register cells") {
    Floorplan plan = buildFloorplan(4, 2, 2, 3, 3, 3.0);
    std::vector<double> powers{1e-3, 0, 0, 0};
    ThermalSystem sys = assembleSystem(plan, powers, defaultMaterial());
    TemperatureField field = solveSteadyState(sys, plan);
    REQUIRE(field.perRegister.size() == 4);
    for (std::size_t r = 1; r < 4; ++r) {
        CHECK(field.perRegister[0].avg > field.perRegister[r].avg);
        CHECK(field.perRegister[0].max >= field.perRegister[r].max);
    }
    CHECK(field.perRegister[0].max >= field.perRegister[0].avg);
}

TEST_CASE("floating network is rejected") {
    Floorplan plan = gridPlan(3, 3);
    ThermalSystem sys = assembleSystem(plan, std::vector<double>(9, 1e-3), defaultMaterial());
    sys.totalBoundaryConductance = 0;  // simulate an unanchored assembly
    CHECK_THROWS_WITH_AS(solveSteadyState(sys, plan), doctest::Contains("floating"), DataError);
}

TEST_CASE("floorplan and field serialization round trip") {
    Floorplan plan = presetFloorplan("arm-c2");
    Floorplan back = floorplanFromJson(floorplanToJson(plan));
    CHECK(back.gridWidth == plan.gridWidth);
    CHECK(back.gridHeight == plan.gridHeight);
    CHECK(back.registers == plan.registers);

    std::vector<double> powers(plan.registers.size(), 1e-4);
    ThermalSystem sys = assembleSystem(plan, powers, defaultMaterial());
    TemperatureField field = solveSteadyState(sys, plan);
    std::string csv = fieldToCsv(field);
    std::size_t rows = 0;
    for (char c : csv)
        if (c == '\n') ++rows;
    CHECK(rows == static_cast<std::size_t>(plan.gridHeight));
    CHECK(fieldToJson(field).find("maxRise") != std::string::npos);
}

TEST_CASE("PCG path beyond the dense threshold: energy balance and linearity") {
    // 72x72 = 5184 cells: solveSteadyState dispatches to PCG
    Rng rng(41);
    Floorplan plan = gridPlan(72, 72);
    MaterialParams mat = defaultMaterial();
    std::vector<double> powers(72 * 72);
    for (auto& p : powers) p = rng.uniform01() * 1e-4;
    TemperatureField field = solveSteadyState(assembleSystem(plan, powers, mat), plan);

    double flux = 0;
    for (int y = 0; y < 72; ++y)
        for (int x = 0; x < 72; ++x) {
            int exposed = (x == 0) + (x == 71) + (y == 0) + (y == 71);
            flux += exposed * mat.boundaryConductanceWPerK * field.deltaT[plan.cellIndex(x, y)];
        }
    double total = 0;
    for (double p : powers) total += p;
    CHECK(flux == doctest::Approx(total).epsilon(1e-8));

    auto doubled = powers;
    for (auto& p : doubled) p *= 2.0;
    TemperatureField field2 = solveSteadyState(assembleSystem(plan, doubled, mat), plan);
    for (std::size_t i = 0; i < field.deltaT.size(); i += 97)
        CHECK(field2.deltaT[i] == doctest::Approx(2 * field.deltaT[i]).epsilon(1e-8));
}
