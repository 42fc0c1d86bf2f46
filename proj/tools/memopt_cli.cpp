// memopt: design-space exploration for the memory subsystem.
//
// Subcommands: trace gen-mem|gen-alloc, cache sim|model|opt, thermal solve,
// regfile opt, dmm replay|opt, report stats|pareto. Primary results go to
// stdout; --out <dir> additionally writes artifact files plus a manifest.
// Exit codes: 0 success, 1 usage error, 2 data error.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "memopt/cache.hpp"
#include "memopt/cacheopt.hpp"
#include "memopt/common.hpp"
#include "memopt/dmm.hpp"
#include "memopt/dmmopt.hpp"
#include "memopt/evolve.hpp"
#include "memopt/regfile.hpp"
#include "memopt/reports.hpp"
#include "memopt/stats.hpp"
#include "memopt/thermal.hpp"
#include "memopt/traces.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace memopt;

namespace {

constexpr const char* kVersion = "memopt 1.0.0";

struct GlobalOptions {
    std::uint64_t seed = 0;
    std::string configPath;
    std::string outDir;
    unsigned jobs = 1;

    std::vector<std::string> inputsUsed;  // recorded into the manifest
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
};

json loadJsonFile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    try {
        json j;
        in >> j;
        return j;
    } catch (const json::exception& e) {
        throw DataError("bad JSON in '" + path + "': " + e.what());
    }
}

std::string slurpFile(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void writeFile(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << content;
}

// Artifact sink: stdout always carries the primary result; --out mirrors
// artifacts into the run directory.
struct Artifacts {
    GlobalOptions& global;

    void emit(const std::string& name, const std::string& content, bool primary = false) {
        if (primary) std::cout << content;
        if (global.outDir.empty()) return;
        fs::create_directories(global.outDir);
        writeFile((fs::path(global.outDir) / name).string(), content);
    }

    void finish() {
        if (global.outDir.empty()) return;
        double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                    global.start)
                          .count();
        json manifest;
        manifest["version"] = kVersion;
        manifest["seed"] = global.seed;
        manifest["inputs"] = global.inputsUsed;
        manifest["wallTimeSeconds"] = wall;  // timing metadata; not a primary output
        writeFile((fs::path(global.outDir) / "manifest.json").string(), manifest.dump(2) + "\n");
    }
};

// Evolution defaults from the run config file plus per-command baselines;
// explicit CLI flags override both.
struct EvoCliFlags {
    CLI::Option* generations = nullptr;
    CLI::Option* population = nullptr;
    CLI::Option* crossover = nullptr;
    CLI::Option* mutation = nullptr;
    std::size_t generationsValue = 0;
    std::size_t populationValue = 0;
    double crossoverValue = 0;
    double mutationValue = 0;
};

std::shared_ptr<EvoCliFlags> addEvoFlags(CLI::App* cmd) {
    auto flags = std::make_shared<EvoCliFlags>();
    flags->generations = cmd->add_option("--generations", flags->generationsValue,
                                         "evolution generations");
    flags->population = cmd->add_option("--population", flags->populationValue, "population size");
    flags->crossover = cmd->add_option("--crossover", flags->crossoverValue, "crossover rate");
    flags->mutation = cmd->add_option("--mutation", flags->mutationValue, "mutation rate");
    return flags;
}

SdtPolicy sdtFromString(const std::string& s) {
    if (s == "off") return SdtPolicy::Off;
    if (s == "packing") return SdtPolicy::Packing;
    if (s == "judgment-day") return SdtPolicy::JudgmentDay;
    if (s == "both") return SdtPolicy::Both;
    throw DataError("unknown SDT policy '" + s + "'");
}

RogMode rogFromString(const std::string& s) {
    if (s == "off") return RogMode::Off;
    if (s == "1-RO") return RogMode::OneOffspring;
    if (s == "2-RO") return RogMode::BothOffspring;
    throw DataError("unknown ROG mode '" + s + "'");
}

EvolutionConfig evolutionConfig(const GlobalOptions& global, const json& runConfig,
                                const EvoCliFlags& flags, EvolutionConfig defaults) {
    EvolutionConfig config = defaults;
    config.seed = global.seed;
    config.jobs = global.jobs;
    if (runConfig.contains("generations")) config.generations = runConfig.at("generations");
    if (runConfig.contains("populationSize")) config.populationSize = runConfig.at("populationSize");
    if (runConfig.contains("crossoverRate")) config.crossoverRate = runConfig.at("crossoverRate");
    if (runConfig.contains("mutationRate")) config.mutationRate = runConfig.at("mutationRate");
    if (runConfig.contains("tournamentSize")) config.tournamentSize = runConfig.at("tournamentSize");
    if (runConfig.contains("maxWraps")) config.maxWraps = runConfig.at("maxWraps");
    if (runConfig.contains("sdt")) config.sdt = sdtFromString(runConfig.at("sdt"));
    if (runConfig.contains("rog")) config.rog = rogFromString(runConfig.at("rog"));
    if (flags.generations->count()) config.generations = flags.generationsValue;
    if (flags.population->count()) config.populationSize = flags.populationValue;
    if (flags.crossover->count()) config.crossoverRate = flags.crossoverValue;
    if (flags.mutation->count()) config.mutationRate = flags.mutationValue;
    return config;
}

MaterialParams materialFromConfig(const json& runConfig, const std::string& materialPath) {
    json j = runConfig.value("material", json::object());
    if (!materialPath.empty()) j = loadJsonFile(materialPath);
    MaterialParams m;
    if (j.contains("conductivityWPerMK")) m.conductivityWPerMK = j.at("conductivityWPerMK");
    if (j.contains("thicknessMicrons")) m.thicknessMicrons = j.at("thicknessMicrons");
    if (j.contains("boundaryConductanceWPerK"))
        m.boundaryConductanceWPerK = j.at("boundaryConductanceWPerK");
    if (j.contains("ambientCelsius")) m.ambientCelsius = j.at("ambientCelsius");
    m.validate();
    return m;
}

EnergyParams energyFromConfig(const json& runConfig) {
    json j = runConfig.value("energy", json::object());
    EnergyParams p;
    if (j.contains("eDynReadJ")) p.eDynReadJ = j.at("eDynReadJ");
    if (j.contains("eDynWriteJ")) p.eDynWriteJ = j.at("eDynWriteJ");
    p.validate();
    return p;
}

DramParams dramFromConfig(const json& runConfig, const std::string& dramPath) {
    if (!dramPath.empty()) return dramFromJson(slurpFile(dramPath));
    json j = runConfig.value("dram", json::object());
    DramParams d;
    if (j.contains("accessTimeSec")) d.accessTimeSec = j.at("accessTimeSec");
    if (j.contains("accessPowerW")) d.accessPowerW = j.at("accessPowerW");
    if (j.contains("bandwidthBytesPerSec")) d.bandwidthBytesPerSec = j.at("bandwidthBytesPerSec");
    d.validate();
    return d;
}

std::vector<std::pair<std::uint64_t, double>> parseSizeClasses(const std::string& text) {
    // "64:0.5,128:0.3,4096:0.2"
    std::vector<std::pair<std::uint64_t, double>> classes;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        auto colon = item.find(':');
        if (colon == std::string::npos)
            throw DataError("size classes must look like '64:0.5,128:0.5'");
        classes.emplace_back(std::stoull(item.substr(0, colon)),
                             std::stod(item.substr(colon + 1)));
    }
    if (classes.empty()) throw DataError("no size classes given");
    return classes;
}

std::vector<double> loadSampleColumn(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::vector<double> values;
    std::string token;
    while (in >> token) {
        if (token[0] == '#') {
            std::string rest;
            std::getline(in, rest);
            continue;
        }
        try {
            values.push_back(std::stod(token));
        } catch (const std::exception&) {
            throw DataError("bad number '" + token + "' in '" + path + "'");
        }
    }
    if (values.empty()) throw DataError("no samples in '" + path + "'");
    return values;
}

TechnologyTable techFromPath(const std::string& path, GlobalOptions& global) {
    if (path.empty()) return defaultTechnologyTable();
    global.inputsUsed.push_back(path);
    return loadTechnologyTable(path);
}

void requireFile(const std::string& path, GlobalOptions& global) {
    if (!fs::exists(path)) throw DataError("missing file '" + path + "'");
    global.inputsUsed.push_back(path);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"memopt: evolutionary design-space exploration for the memory subsystem"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions global;
    app.add_option("--seed", global.seed, "global RNG seed")->capture_default_str();
    app.add_option("--config", global.configPath, "run-config JSON with parameter defaults");
    app.add_option("--out", global.outDir, "artifact output directory");
    app.add_option("--jobs", global.jobs, "evaluation parallelism (never changes results)")
        ->capture_default_str();

    Artifacts artifacts{global};
    // deferred actions run after parse so global flags are all bound
    std::function<void()> action;

    // ---- trace ----
    auto* trace = app.add_subcommand("trace", "synthetic workload generators");
    trace->require_subcommand(1);
    {
        auto* genMem = trace->add_subcommand("gen-mem", "generate a memory-reference trace");
        auto length = std::make_shared<std::size_t>(10000);
        auto instr = std::make_shared<double>(0.5);
        auto ws = std::make_shared<std::uint64_t>(1 << 20);
        auto stride = std::make_shared<double>(0.5);
        genMem->add_option("--length", *length, "number of references")->capture_default_str();
        genMem->add_option("--instr-share", *instr, "instruction-fetch share")
            ->capture_default_str();
        genMem->add_option("--working-set", *ws, "working-set bytes")->capture_default_str();
        genMem->add_option("--stride-share", *stride, "sequential-stride share")
            ->capture_default_str();
        genMem->callback([&, length, instr, ws, stride] {
            action = [&, length, instr, ws, stride] {
                MemTraceSpec spec{*length, *instr, *ws, *stride, global.seed};
                auto t = genSyntheticMemTrace(spec);
                std::ostringstream out;
                serializeMemTrace(t, out);
                artifacts.emit("trace.din", out.str(), true);
            };
        });

        auto* genAlloc = trace->add_subcommand("gen-alloc", "generate an allocation trace");
        auto events = std::make_shared<std::size_t>(10000);
        auto classes = std::make_shared<std::string>("64:1.0");
        auto lifetime = std::make_shared<double>(16.0);
        genAlloc->add_option("--events", *events, "number of events")->capture_default_str();
        genAlloc->add_option("--size-classes", *classes, "size:weight list")
            ->capture_default_str();
        genAlloc->add_option("--mean-lifetime", *lifetime, "mean lifetime in events")
            ->capture_default_str();
        genAlloc->callback([&, events, classes, lifetime] {
            action = [&, events, classes, lifetime] {
                AllocTraceSpec spec;
                spec.events = *events;
                spec.sizeClasses = parseSizeClasses(*classes);
                spec.meanLifetime = *lifetime;
                spec.seed = global.seed;
                auto t = genSyntheticAllocTrace(spec);
                std::ostringstream out;
                serializeAllocTrace(t, out);
                artifacts.emit("trace.alloc", out.str(), true);
            };
        });
    }

    // ---- cache ----
    auto* cache = app.add_subcommand("cache", "cache simulation, models and optimization");
    cache->require_subcommand(1);
    {
        auto* sim = cache->add_subcommand("sim", "simulate a trace against a configuration");
        auto tracePath = std::make_shared<std::string>();
        auto configPath = std::make_shared<std::string>();
        sim->add_option("--trace", *tracePath, "memory trace (.din[.gz])")->required();
        sim->add_option("--config-file,--config", *configPath, "cache configuration JSON")
            ->required();
        sim->callback([&, tracePath, configPath] {
            action = [&, tracePath, configPath] {
                requireFile(*tracePath, global);
                requireFile(*configPath, global);
                auto t = loadMemTrace(*tracePath);
                CacheConfig config = cacheConfigFromJson(slurpFile(*configPath));
                CacheStats stats = simulate(t, config, global.seed);
                artifacts.emit("stats.json", statsToJson(stats) + "\n", true);
            };
        });

        auto* model = cache->add_subcommand("model", "simulate and apply the time/energy models");
        auto tracePath2 = std::make_shared<std::string>();
        auto configPath2 = std::make_shared<std::string>();
        auto techPath = std::make_shared<std::string>();
        auto dramPath = std::make_shared<std::string>();
        model->add_option("--trace", *tracePath2, "memory trace (.din[.gz])")->required();
        model->add_option("--config-file,--config", *configPath2, "cache configuration JSON")
            ->required();
        model->add_option("--tech", *techPath, "technology table CSV (default: built-in)");
        model->add_option("--dram", *dramPath, "DRAM parameter JSON");
        model->callback([&, tracePath2, configPath2, techPath, dramPath] {
            action = [&, tracePath2, configPath2, techPath, dramPath] {
                requireFile(*tracePath2, global);
                requireFile(*configPath2, global);
                auto t = loadMemTrace(*tracePath2);
                CacheConfig config = cacheConfigFromJson(slurpFile(*configPath2));
                TechnologyTable tech = techFromPath(*techPath, global);
                json runConfig =
                    global.configPath.empty() ? json::object() : loadJsonFile(global.configPath);
                DramParams dram = dramFromConfig(runConfig, *dramPath);
                CacheStats stats = simulate(t, config, global.seed);
                json out;
                out["stats"] = json::parse(statsToJson(stats));
                out["timeSeconds"] = execTime(stats, config, tech, dram);
                out["energyJoules"] = energy(stats, config, tech, dram);
                artifacts.emit("model.json", out.dump(2) + "\n", true);
            };
        });

        auto* opt = cache->add_subcommand("opt", "NSGA-II cache-configuration search");
        auto tracePath3 = std::make_shared<std::string>();
        auto spacePath = std::make_shared<std::string>();
        auto techPath2 = std::make_shared<std::string>();
        auto dramPath2 = std::make_shared<std::string>();
        auto baselinePath = std::make_shared<std::string>();
        auto flags = addEvoFlags(opt);
        opt->add_option("--trace", *tracePath3, "memory trace (.din[.gz])")->required();
        opt->add_option("--space", *spacePath, "design-space JSON (default: built-in)");
        opt->add_option("--tech", *techPath2, "technology table CSV (default: built-in)");
        opt->add_option("--dram", *dramPath2, "DRAM parameter JSON");
        opt->add_option("--baselines", *baselinePath,
                        "baseline config JSON array (default: built-in three)");
        opt->callback([&, tracePath3, spacePath, techPath2, dramPath2, baselinePath, flags] {
            action = [&, tracePath3, spacePath, techPath2, dramPath2, baselinePath, flags] {
                requireFile(*tracePath3, global);
                auto t = loadMemTrace(*tracePath3);
                DesignSpace space;
                if (!spacePath->empty()) {
                    requireFile(*spacePath, global);
                    space = designSpaceFromJson(slurpFile(*spacePath));
                }
                TechnologyTable tech = techFromPath(*techPath2, global);
                json runConfig =
                    global.configPath.empty() ? json::object() : loadJsonFile(global.configPath);
                DramParams dram = dramFromConfig(runConfig, *dramPath2);
                std::vector<CacheConfig> baselines = allBaselines();
                if (!baselinePath->empty()) {
                    requireFile(*baselinePath, global);
                    baselines = baselinesFromJson(slurpFile(*baselinePath));
                }

                EvolutionConfig defaults;  // paper-style cache defaults
                defaults.generations = 250;
                defaults.populationSize = 100;
                defaults.crossoverRate = 0.9;
                defaults.mutationRate = 1.0 / 11.0;
                EvolutionConfig config = evolutionConfig(global, runConfig, *flags, defaults);

                CacheOptResult result = optimizeCacheConfig(t, space, tech, dram, config);
                auto report =
                    improvementReport(result.front, baselines, t, tech, dram, config.seed);
                artifacts.emit("front.csv", frontToCsv(result.front), true);
                artifacts.emit("front.json", frontToJson(result.front) + "\n");
                artifacts.emit("improvement.csv", improvementReportToCsv(report));

                RunSnapshot snap;
                snap.generation = config.generations;
                snap.seed = config.seed;
                for (const auto& m : result.front) {
                    Individual ind;
                    ind.genome = IntegerVectorGenome{m.genes, space.cardinalities()};
                    ind.objectives = {m.timeSeconds, m.energyJoules};
                    snap.population.push_back(std::move(ind));
                }
                artifacts.emit("snapshot.json", snapshotToJson(snap) + "\n");
            };
        });
    }

    // ---- thermal ----
    auto* thermal = app.add_subcommand("thermal", "steady-state thermal analysis");
    thermal->require_subcommand(1);
    {
        auto* solve = thermal->add_subcommand("solve", "solve a floorplan temperature field");
        auto floorplanPath = std::make_shared<std::string>();
        auto topology = std::make_shared<std::string>();
        auto powersPath = std::make_shared<std::string>();
        auto profilePath = std::make_shared<std::string>();
        auto materialPath = std::make_shared<std::string>();
        solve->add_option("--floorplan", *floorplanPath, "floorplan JSON");
        solve->add_option("--topology", *topology, "preset name (arm-c1..c3, vliw-c1..c3)");
        solve->add_option("--powers", *powersPath, "per-register powers JSON array (W)");
        solve->add_option("--profile", *profilePath, "register profile (.regprof)");
        solve->add_option("--material", *materialPath, "material parameter JSON");
        solve->callback([&, floorplanPath, topology, powersPath, profilePath, materialPath] {
            action = [&, floorplanPath, topology, powersPath, profilePath, materialPath] {
                json runConfig =
                    global.configPath.empty() ? json::object() : loadJsonFile(global.configPath);
                Floorplan plan;
                if (!floorplanPath->empty()) {
                    requireFile(*floorplanPath, global);
                    plan = floorplanFromJson(slurpFile(*floorplanPath));
                } else if (!topology->empty()) {
                    plan = presetFloorplan(*topology);
                } else {
                    throw DataError("need --floorplan or --topology");
                }
                std::vector<double> powers;
                if (!powersPath->empty()) {
                    requireFile(*powersPath, global);
                    powers = loadJsonFile(*powersPath).get<std::vector<double>>();
                } else if (!profilePath->empty()) {
                    requireFile(*profilePath, global);
                    RegisterProfile profile = loadRegisterProfile(*profilePath);
                    EnergyParams energyParams = energyFromConfig(runConfig);
                    auto e = registerEnergy(profile, energyParams);
                    powers.resize(e.size());
                    for (std::size_t i = 0; i < e.size(); ++i)
                        powers[i] = e[i] / profile.windowSeconds;
                } else {
                    throw DataError("need --powers or --profile");
                }
                MaterialParams material = materialFromConfig(runConfig, *materialPath);
                ThermalSystem sys = assembleSystem(plan, powers, material);
                TemperatureField field = solveSteadyState(sys, plan);
                artifacts.emit("field.json", fieldToJson(field) + "\n", true);
                artifacts.emit("field.csv", fieldToCsv(field));
            };
        });
    }

    // ---- regfile ----
    auto* regfile = app.add_subcommand("regfile", "register-file placement optimization");
    regfile->require_subcommand(1);
    {
        auto* opt = regfile->add_subcommand("opt", "NSGA-II register placement");
        auto profilePath = std::make_shared<std::string>();
        auto topology = std::make_shared<std::string>("arm-c1");
        auto materialPath = std::make_shared<std::string>();
        auto flags = addEvoFlags(opt);
        opt->add_option("--profile", *profilePath, "register profile (.regprof)")->required();
        opt->add_option("--topology", *topology, "floorplan preset")->capture_default_str();
        opt->add_option("--material", *materialPath, "material parameter JSON");
        opt->callback([&, profilePath, topology, materialPath, flags] {
            action = [&, profilePath, topology, materialPath, flags] {
                requireFile(*profilePath, global);
                RegisterProfile profile = loadRegisterProfile(*profilePath);
                Floorplan plan = presetFloorplan(*topology);
                json runConfig =
                    global.configPath.empty() ? json::object() : loadJsonFile(global.configPath);
                EnergyParams energyParams = energyFromConfig(runConfig);
                MaterialParams material = materialFromConfig(runConfig, *materialPath);

                EvolutionConfig defaults;  // paper-style register defaults
                defaults.generations = 250;
                defaults.populationSize = 100;
                defaults.crossoverRate = 0.9;
                defaults.mutationRate = 1.0 / static_cast<double>(plan.registers.size());
                EvolutionConfig config = evolutionConfig(global, runConfig, *flags, defaults);

                auto front = optimizePlacement(profile, energyParams, plan, config);
                if (front.empty()) throw DataError("empty placement front");
                const auto& best = front.front();
                TemperatureReport report =
                    temperatureReport(best.placement, profile, energyParams, material);

                json out;
                out["placement"] = best.placement.assignment;
                out["thermalFitness"] = best.objectives.thermalFitness;
                out["areaViolation"] = best.objectives.areaViolation;
                out["baselineAvgRise"] = report.baselineAvgRise;
                out["baselineMaxRise"] = report.baselineMaxRise;
                out["optimizedAvgRise"] = report.optimizedAvgRise;
                out["optimizedMaxRise"] = report.optimizedMaxRise;
                out["avgImprovementPercent"] = report.avgImprovementPercent;
                out["maxImprovementPercent"] = report.maxImprovementPercent;
                out["frontSize"] = front.size();
                artifacts.emit("placement.json", out.dump(2) + "\n", true);
                artifacts.emit("baseline_heatmap.csv", fieldToCsv(report.baselineField));
                artifacts.emit("optimized_heatmap.csv", fieldToCsv(report.optimizedField));

                RunSnapshot snap;
                snap.generation = config.generations;
                snap.seed = config.seed;
                for (const auto& m : front) {
                    Individual ind;
                    ind.genome = PermutationGenome{m.placement.assignment};
                    ind.objectives = {m.objectives.thermalFitness, m.objectives.areaViolation};
                    snap.population.push_back(std::move(ind));
                }
                artifacts.emit("snapshot.json", snapshotToJson(snap) + "\n");
            };
        });
    }

    // ---- dmm ----
    auto* dmm = app.add_subcommand("dmm", "dynamic memory manager simulation and synthesis");
    dmm->require_subcommand(1);
    {
        auto* replayCmd = dmm->add_subcommand("replay", "replay a trace through a DMM spec");
        auto tracePath = std::make_shared<std::string>();
        auto specPath = std::make_shared<std::string>();
        auto reference = std::make_shared<std::string>();
        auto debug = std::make_shared<bool>(false);
        replayCmd->add_option("--trace", *tracePath, "allocation trace (.alloc[.gz])")
            ->required();
        replayCmd->add_option("--spec", *specPath, "DMM spec JSON");
        replayCmd->add_option("--reference", *reference, "reference DMM (KNG|LEA|FIB|S10|EXA)");
        replayCmd->add_flag("--debug", *debug, "verify heap invariants after every event");
        replayCmd->callback([&, tracePath, specPath, reference, debug] {
            action = [&, tracePath, specPath, reference, debug] {
                requireFile(*tracePath, global);
                auto t = loadAllocTrace(*tracePath);
                DmmSpec spec;
                if (!specPath->empty()) {
                    requireFile(*specPath, global);
                    spec = dmmSpecFromJson(slurpFile(*specPath));
                } else if (!reference->empty()) {
                    std::map<std::string, ReferenceDmm> names{
                        {"KNG", ReferenceDmm::KNG}, {"LEA", ReferenceDmm::LEA},
                        {"FIB", ReferenceDmm::FIB}, {"S10", ReferenceDmm::S10},
                        {"EXA", ReferenceDmm::EXA}};
                    auto it = names.find(*reference);
                    if (it == names.end())
                        throw DataError("unknown reference DMM '" + *reference + "'");
                    spec = buildReference(it->second);
                } else {
                    throw DataError("need --spec or --reference");
                }
                ReplayOptions options;
                options.debugChecks = *debug;
                std::ostringstream log;
                if (!global.outDir.empty()) options.eventLog = &log;
                DmmMetrics metrics = replay(spec, t, options);
                artifacts.emit("metrics.json", metricsToJson(metrics) + "\n", true);
                if (!global.outDir.empty()) artifacts.emit("heap_events.csv", log.str());
                FragmentationReport frag = fragmentationReport(spec, t);
                json fragJson;
                fragJson["internalBytes"] = frag.internalBytes;
                fragJson["externalBytes"] = frag.externalBytes;
                fragJson["peakMemory"] = frag.peakMemory;
                artifacts.emit("fragmentation.json", fragJson.dump(2) + "\n");
            };
        });

        auto* opt = dmm->add_subcommand("opt", "synthesize a custom DMM with GE");
        auto tracePath2 = std::make_shared<std::string>();
        auto maxRegions = std::make_shared<std::size_t>(5);
        auto flags = addEvoFlags(opt);
        opt->add_option("--trace", *tracePath2, "allocation trace (.alloc[.gz])")->required();
        opt->add_option("--max-regions", *maxRegions, "grammar region bound")
            ->capture_default_str();
        opt->callback([&, tracePath2, maxRegions, flags] {
            action = [&, tracePath2, maxRegions, flags] {
                requireFile(*tracePath2, global);
                auto t = loadAllocTrace(*tracePath2);
                json runConfig =
                    global.configPath.empty() ? json::object() : loadJsonFile(global.configPath);

                EvolutionConfig defaults;  // paper-style GE defaults
                defaults.generations = 250;
                defaults.populationSize = 100;
                defaults.crossoverRate = 0.8;
                defaults.mutationRate = 0.02;
                defaults.tournamentSize = 2;
                defaults.maxWraps = 3;
                defaults.sdt = SdtPolicy::Both;
                defaults.rog = RogMode::OneOffspring;
                EvolutionConfig config = evolutionConfig(global, runConfig, *flags, defaults);

                GrammarLimits limits;
                limits.maxRegions = *maxRegions;
                DmmOptResult result = optimizeDmm(t, config, limits);

                json out = json::parse(dmmSpecToJson(result.bestSpec));
                out["fitness"] = result.bestFitness.value;
                out["simTime"] = result.bestFitness.simTime;
                out["peakMemory"] = result.bestFitness.peakMemory;
                artifacts.emit("best_dmm.json", out.dump(2) + "\n", true);
                artifacts.emit("comparison.csv", comparisonsToCsv(result.comparisons));
                artifacts.emit("fitness_log.csv", fitnessLogToCsv(result.fitnessLog));

                AllocProfile profile = profileTrace(t);
                artifacts.emit("grammar.bnf", generateGrammar(profile, limits).toBnf());
            };
        });
    }

    // ---- report ----
    auto* report = app.add_subcommand("report", "statistics and front reports");
    report->require_subcommand(1);
    {
        auto* stats = report->add_subcommand("stats", "paired statistical tests");
        auto aPath = std::make_shared<std::string>();
        auto bPath = std::make_shared<std::string>();
        auto test = std::make_shared<std::string>("pairedT");
        stats->add_option("--a", *aPath, "first sample column")->required();
        stats->add_option("--b", *bPath, "second sample column")->required();
        stats->add_option("--test", *test, "pairedT or wilcoxon")->capture_default_str();
        stats->callback([&, aPath, bPath, test] {
            action = [&, aPath, bPath, test] {
                requireFile(*aPath, global);
                requireFile(*bPath, global);
                auto a = loadSampleColumn(*aPath);
                auto b = loadSampleColumn(*bPath);
                StatResult result;
                if (*test == "pairedT")
                    result = pairedTTest(a, b);
                else if (*test == "wilcoxon")
                    result = wilcoxonSignedRank(a, b);
                else
                    throw DataError("unknown test '" + *test + "'");
                artifacts.emit("stat.json", statResultToJson(result) + "\n", true);
            };
        });

        auto* pareto = report->add_subcommand("pareto", "emit a front as plot-ready CSV/JSON");
        auto frontPath = std::make_shared<std::string>();
        auto format = std::make_shared<std::string>("csv");
        pareto->add_option("--front", *frontPath, "snapshot JSON holding the population")
            ->required();
        pareto->add_option("--format", *format, "csv or json")->capture_default_str();
        pareto->callback([&, frontPath, format] {
            action = [&, frontPath, format] {
                requireFile(*frontPath, global);
                RunSnapshot snap = snapshotFromJson(slurpFile(*frontPath));
                ParetoFront front;
                front.members = snap.population;
                ReportFormat fmt;
                if (*format == "csv")
                    fmt = ReportFormat::Csv;
                else if (*format == "json")
                    fmt = ReportFormat::Json;
                else
                    throw DataError("unknown format '" + *format + "'");
                std::string body = emitParetoReport(front, fmt);
                artifacts.emit(*format == "csv" ? "front.csv" : "front.json", body, true);
            };
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);  // prints the usage message to stderr
        return 1;
    }

    try {
        if (!global.configPath.empty()) requireFile(global.configPath, global);
        action();
        artifacts.finish();
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
