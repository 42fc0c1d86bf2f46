#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "memopt/common.hpp"

namespace memopt {

// ---------------------------------------------------------------------------
// Genomes
// ---------------------------------------------------------------------------

struct IntegerVectorGenome {
    std::vector<int> values;
    std::vector<int> cardinality;  // values[i] in [0, cardinality[i])

    bool operator==(const IntegerVectorGenome&) const = default;
};

struct PermutationGenome {
    std::vector<int> order;  // bijection on {0..N-1}

    bool operator==(const PermutationGenome&) const = default;
};

struct CodonGenome {
    std::vector<int> codons;  // each in [0, codonMax)
    int codonMax = 256;

    bool operator==(const CodonGenome&) const = default;
};

using Genome = std::variant<IntegerVectorGenome, PermutationGenome, CodonGenome>;

std::size_t genomeLength(const Genome& g);

// Fresh random genome with the same shape (lengths, cardinalities) as the
// prototype. Permutations are drawn by Fisher-Yates.
Genome randomGenome(const Genome& prototype, Rng& rng);

// ---------------------------------------------------------------------------
// Individuals and configuration
// ---------------------------------------------------------------------------

constexpr double kWorstFitness = std::numeric_limits<double>::infinity();

struct Individual {
    Genome genome;
    std::vector<double> objectives;  // minimized
    std::size_t rank = 0;
    double crowding = 0.0;
    bool valid = true;

    double fitness() const { return objectives.empty() ? kWorstFitness : objectives[0]; }
};

enum class SdtPolicy { Off, Packing, JudgmentDay, Both };
enum class RogMode { Off, OneOffspring, BothOffspring };

struct EvolutionConfig {
    std::size_t generations = 250;
    std::size_t populationSize = 100;
    double crossoverRate = 0.9;
    double mutationRate = 0.1;
    std::size_t tournamentSize = 2;
    std::size_t maxWraps = 3;
    std::uint64_t seed = 0;
    SdtPolicy sdt = SdtPolicy::Off;
    RogMode rog = RogMode::OneOffspring;
    // Packing fires when >50% of the population shares one fitness value;
    // Judgment day after this many generations without improvement.
    std::size_t judgmentDayStagnation = 25;
    unsigned jobs = 1;  // evaluation parallelism; never affects results

    void validate() const;
};

// ---------------------------------------------------------------------------
// Variation operators
// ---------------------------------------------------------------------------

// Classical single-point crossover; cut index uniform in [1, len-1]. Children
// of length < 2 are parent copies. Permutation children are repaired: scanning
// left to right, every repeated gene slot is refilled with the genes missing
// from the child, taken in the order they appear in the suffix-donor parent.
std::pair<Genome, Genome> singlePointCrossover(const Genome& a, const Genome& b, Rng& rng);

// Per-gene mutation: integer genes resample uniformly, permutation positions
// swap with a uniformly chosen position, codons resample in [0, codonMax).
void mutate(Genome& g, double rate, Rng& rng);

// Random Offspring Generation: genotypically equal parents produce one
// (OneOffspring: first child random, second a parent copy) or two random
// children instead of crossing over. Unequal parents pass through to
// singlePointCrossover on the same rng stream. Off always passes through.
std::pair<Genome, Genome> applyROG(const Genome& a, const Genome& b, Rng& rng, RogMode mode);

// ---------------------------------------------------------------------------
// NSGA-II machinery
// ---------------------------------------------------------------------------

// Strict Pareto dominance on minimized objectives.
bool dominates(const std::vector<double>& a, const std::vector<double>& b);

// Deb's fast nondominated sort; returns fronts as ordered index sets.
std::vector<std::vector<std::size_t>> fastNonDominatedSort(const std::vector<Individual>& pop);

// Crowding distance per front member (aligned with `front`). Boundary members
// get +infinity; an objective with max == min contributes 0.
std::vector<double> crowdingDistance(const std::vector<std::size_t>& front,
                                     const std::vector<Individual>& pop);

struct ParetoFront {
    std::vector<Individual> members;  // mutually nondominated

    // Throws DataError if any member dominates another.
    void checkNonDominated() const;
};

struct MultiObjectiveProblem {
    std::function<Genome(Rng&)> makeGenome;
    // Pure function; must not touch the evolution rng. Throwing marks the
    // individual invalid (worst objectives) and the run continues.
    std::function<std::vector<double>(const Genome&)> evaluate;
    std::size_t numObjectives = 2;
};

using GenerationCallback =
    std::function<void(std::size_t generation, const std::vector<Individual>& population)>;

// NSGA-II with crowded binary tournament selection and (mu+lambda)
// replacement. Total evaluations = populationSize * (generations + 1).
// Deterministic given config.seed for any jobs >= 1.
ParetoFront nsga2Run(const MultiObjectiveProblem& problem, const EvolutionConfig& config,
                     const GenerationCallback& onGeneration = {});

// ---------------------------------------------------------------------------
// Grammars and Grammatical Evolution
// ---------------------------------------------------------------------------

struct GrammarSymbol {
    bool terminal = true;
    std::string text;  // terminal text, or nonterminal name without <>

    bool operator==(const GrammarSymbol&) const = default;
};

struct GrammarRule {
    std::string name;
    std::vector<std::vector<GrammarSymbol>> alternatives;
};

// Ordered BNF production rules. Text format: one rule per line,
//   <name> ::= tok tok <other> | tok
// Tokens are whitespace-separated; <...> marks a nonterminal, a lone `|`
// separates alternatives, everything else is a literal terminal. `#` lines
// and blank lines are skipped. The start symbol is the first rule.
class Grammar {
public:
    Grammar() = default;
    explicit Grammar(std::vector<GrammarRule> rules);

    static Grammar parseBnf(std::istream& in);
    static Grammar parseBnf(const std::string& text);
    std::string toBnf() const;

    const std::vector<GrammarRule>& rules() const { return rules_; }
    const GrammarRule& rule(const std::string& name) const;
    const std::string& startSymbol() const { return rules_.front().name; }
    bool empty() const { return rules_.empty(); }

private:
    void validate() const;

    std::vector<GrammarRule> rules_;
    std::unordered_map<std::string, std::size_t> index_;
};

struct GeDecodeResult {
    bool valid = false;
    std::string phenotype;     // concatenated terminal text
    std::size_t codonsUsed = 0;
    std::size_t wraps = 0;
};

// Leftmost GE derivation. A nonterminal with r > 1 alternatives consumes the
// next codon and picks alternative codon % r; single-alternative rules
// consume nothing. Reading wraps to codon 0 when exhausted, at most maxWraps
// times; an incomplete derivation is an invalid (not an error) result.
GeDecodeResult geDecode(const std::vector<int>& codons, const Grammar& grammar,
                        std::size_t maxWraps);

// ---------------------------------------------------------------------------
// Premature-convergence countermeasures (single-objective populations)
// ---------------------------------------------------------------------------

enum class SdtTrigger { Packing, JudgmentDay };

// Packing: within every group sharing one fitness value, all but the first
// member are re-randomized. Judgment day: everything except the single best
// is re-randomized. Invalid individuals are never protected. Returns the
// indices whose genomes were replaced (their objectives are stale).
std::vector<std::size_t> applySDT(std::vector<Individual>& pop, SdtTrigger trigger, Rng& rng);

// ---------------------------------------------------------------------------
// Single-objective GE engine
// ---------------------------------------------------------------------------

struct GeProblem {
    Grammar grammar;
    std::size_t codonLength = 200;
    int codonMax = 256;
    // Pure fitness of a decoded phenotype; lower is better. Throwing DataError
    // marks the individual invalid.
    std::function<double(const std::string& phenotype)> evaluate;
};

struct GeResult {
    Individual best;
    std::string bestPhenotype;
    std::vector<double> bestPerGeneration;  // population best after each generation
    std::size_t evaluations = 0;
};

// Generational GE with 1-elite replacement, binary tournament selection,
// ROG crossover guard, and SDT firing per EvolutionConfig. Best-so-far
// fitness is nonincreasing across generations.
GeResult geRun(const GeProblem& problem, const EvolutionConfig& config,
               const GenerationCallback& onGeneration = {});

// ---------------------------------------------------------------------------
// Run snapshots (JSON) for resumable runs
// ---------------------------------------------------------------------------

std::string genomeToJson(const Genome& g);
Genome genomeFromJson(const std::string& json);

struct RunSnapshot {
    std::size_t generation = 0;
    std::uint64_t seed = 0;
    std::vector<Individual> population;
};

std::string snapshotToJson(const RunSnapshot& snap);
RunSnapshot snapshotFromJson(const std::string& json);

}  // namespace memopt
