#include "memopt/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "json.hpp"

namespace memopt {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Genomes
// ---------------------------------------------------------------------------

std::size_t genomeLength(const Genome& g) {
    return std::visit(
        [](const auto& v) -> std::size_t {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, IntegerVectorGenome>) return v.values.size();
            if constexpr (std::is_same_v<T, PermutationGenome>) return v.order.size();
            if constexpr (std::is_same_v<T, CodonGenome>) return v.codons.size();
        },
        g);
}

Genome randomGenome(const Genome& prototype, Rng& rng) {
    if (const auto* iv = std::get_if<IntegerVectorGenome>(&prototype)) {
        IntegerVectorGenome out = *iv;
        for (std::size_t i = 0; i < out.values.size(); ++i)
            out.values[i] = static_cast<int>(rng.uniformInt(out.cardinality[i]));
        return out;
    }
    if (const auto* p = std::get_if<PermutationGenome>(&prototype)) {
        PermutationGenome out;
        out.order.resize(p->order.size());
        for (std::size_t i = 0; i < out.order.size(); ++i) out.order[i] = static_cast<int>(i);
        for (std::size_t i = out.order.size(); i > 1; --i)
            std::swap(out.order[i - 1], out.order[rng.uniformInt(i)]);
        return out;
    }
    const auto& c = std::get<CodonGenome>(prototype);
    CodonGenome out = c;
    for (auto& codon : out.codons) codon = static_cast<int>(rng.uniformInt(c.codonMax));
    return out;
}

void EvolutionConfig::validate() const {
    if (generations == 0 || populationSize == 0)
        throw DataError("generations and population size must be > 0");
    if (crossoverRate < 0 || crossoverRate > 1 || mutationRate < 0 || mutationRate > 1)
        throw DataError("rates must lie in [0,1]");
    if (tournamentSize == 0) throw DataError("tournament size must be > 0");
}

// ---------------------------------------------------------------------------
// Variation operators
// ---------------------------------------------------------------------------

namespace {

// PMX-style repair: duplicate slots (second and later occurrences, scanning
// left to right) are refilled with the missing genes in suffix-donor order.
void repairPermutation(std::vector<int>& child, const std::vector<int>& suffixDonor) {
    const std::size_t n = child.size();
    std::vector<bool> seen(n, false);
    std::vector<std::size_t> dupSlots;
    for (std::size_t i = 0; i < n; ++i) {
        int v = child[i];
        if (seen[v])
            dupSlots.push_back(i);
        else
            seen[v] = true;
    }
    std::size_t slot = 0;
    for (int v : suffixDonor) {
        if (!seen[v]) {
            child[dupSlots[slot++]] = v;
            seen[v] = true;
        }
    }
}

template <typename Vec>
void spliceSuffix(Vec& childA, Vec& childB, std::size_t k) {
    for (std::size_t i = k; i < childA.size(); ++i) std::swap(childA[i], childB[i]);
}

}  // namespace

std::pair<Genome, Genome> singlePointCrossover(const Genome& a, const Genome& b, Rng& rng) {
    if (a.index() != b.index() || genomeLength(a) != genomeLength(b))
        throw DataError("crossover parents must share variant and length");
    const std::size_t len = genomeLength(a);
    Genome childA = a;
    Genome childB = b;
    if (len < 2) return {childA, childB};
    const std::size_t k = 1 + rng.uniformInt(len - 1);

    if (auto* ca = std::get_if<IntegerVectorGenome>(&childA)) {
        auto* cb = std::get_if<IntegerVectorGenome>(&childB);
        spliceSuffix(ca->values, cb->values, k);
    } else if (auto* cp = std::get_if<PermutationGenome>(&childA)) {
        auto* cq = std::get_if<PermutationGenome>(&childB);
        spliceSuffix(cp->order, cq->order, k);
        repairPermutation(cp->order, std::get<PermutationGenome>(b).order);
        repairPermutation(cq->order, std::get<PermutationGenome>(a).order);
    } else {
        auto* cc = std::get_if<CodonGenome>(&childA);
        auto* cd = std::get_if<CodonGenome>(&childB);
        spliceSuffix(cc->codons, cd->codons, k);
    }
    return {childA, childB};
}

void mutate(Genome& g, double rate, Rng& rng) {
    if (rate < 0 || rate > 1) throw DataError("mutation rate must lie in [0,1]");
    if (auto* iv = std::get_if<IntegerVectorGenome>(&g)) {
        for (std::size_t i = 0; i < iv->values.size(); ++i)
            if (rng.bernoulli(rate))
                iv->values[i] = static_cast<int>(rng.uniformInt(iv->cardinality[i]));
    } else if (auto* p = std::get_if<PermutationGenome>(&g)) {
        const std::size_t n = p->order.size();
        for (std::size_t i = 0; i < n; ++i)
            if (rng.bernoulli(rate)) std::swap(p->order[i], p->order[rng.uniformInt(n)]);
    } else {
        auto& c = std::get<CodonGenome>(g);
        for (auto& codon : c.codons)
            if (rng.bernoulli(rate)) codon = static_cast<int>(rng.uniformInt(c.codonMax));
    }
}

std::pair<Genome, Genome> applyROG(const Genome& a, const Genome& b, Rng& rng, RogMode mode) {
    if (mode == RogMode::Off || !(a == b)) return singlePointCrossover(a, b, rng);
    if (mode == RogMode::OneOffspring) return {randomGenome(a, rng), b};
    return {randomGenome(a, rng), randomGenome(b, rng)};
}

// ---------------------------------------------------------------------------
// NSGA-II machinery
// ---------------------------------------------------------------------------

bool dominates(const std::vector<double>& a, const std::vector<double>& b) {
    bool strictlyBetter = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] > b[i]) return false;
        if (a[i] < b[i]) strictlyBetter = true;
    }
    return strictlyBetter;
}

std::vector<std::vector<std::size_t>> fastNonDominatedSort(const std::vector<Individual>& pop) {
    const std::size_t n = pop.size();
    std::vector<std::vector<std::size_t>> dominated(n);
    std::vector<std::size_t> dominationCount(n, 0);
    std::vector<std::vector<std::size_t>> fronts(1);

    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = p + 1; q < n; ++q) {
            if (dominates(pop[p].objectives, pop[q].objectives)) {
                dominated[p].push_back(q);
                ++dominationCount[q];
            } else if (dominates(pop[q].objectives, pop[p].objectives)) {
                dominated[q].push_back(p);
                ++dominationCount[p];
            }
        }
    }
    for (std::size_t p = 0; p < n; ++p)
        if (dominationCount[p] == 0) fronts[0].push_back(p);

    std::size_t assigned = fronts[0].size();
    while (assigned < n) {
        std::vector<std::size_t> next;
        for (std::size_t p : fronts.back()) {
            for (std::size_t q : dominated[p]) {
                if (--dominationCount[q] == 0) next.push_back(q);
            }
        }
        std::sort(next.begin(), next.end());
        assigned += next.size();
        fronts.push_back(std::move(next));
    }
    return fronts;
}

std::vector<double> crowdingDistance(const std::vector<std::size_t>& front,
                                     const std::vector<Individual>& pop) {
    const std::size_t m = front.size();
    if (m == 0) throw DataError("crowding distance of an empty front");
    std::vector<double> dist(m, 0.0);
    const std::size_t numObj = pop[front[0]].objectives.size();

    std::vector<std::size_t> idx(m);
    for (std::size_t obj = 0; obj < numObj; ++obj) {
        for (std::size_t i = 0; i < m; ++i) idx[i] = i;
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) {
            return pop[front[x]].objectives[obj] < pop[front[y]].objectives[obj];
        });
        const double lo = pop[front[idx.front()]].objectives[obj];
        const double hi = pop[front[idx.back()]].objectives[obj];
        dist[idx.front()] = kWorstFitness;
        dist[idx.back()] = kWorstFitness;
        if (hi == lo) continue;  // degenerate range contributes nothing
        for (std::size_t i = 1; i + 1 < m; ++i) {
            if (dist[idx[i]] == kWorstFitness) continue;
            dist[idx[i]] += (pop[front[idx[i + 1]]].objectives[obj] -
                             pop[front[idx[i - 1]]].objectives[obj]) /
                            (hi - lo);
        }
    }
    return dist;
}

void ParetoFront::checkNonDominated() const {
    for (std::size_t i = 0; i < members.size(); ++i)
        for (std::size_t j = 0; j < members.size(); ++j)
            if (i != j && dominates(members[i].objectives, members[j].objectives))
                throw DataError("Pareto front contains a dominated member");
}

namespace {

void assignRankAndCrowding(std::vector<Individual>& pop) {
    auto fronts = fastNonDominatedSort(pop);
    for (std::size_t r = 0; r < fronts.size(); ++r) {
        auto dist = crowdingDistance(fronts[r], pop);
        for (std::size_t i = 0; i < fronts[r].size(); ++i) {
            pop[fronts[r][i]].rank = r;
            pop[fronts[r][i]].crowding = dist[i];
        }
    }
}

// Crowded-comparison tournament; ties keep the earliest-drawn candidate.
std::size_t crowdedTournament(const std::vector<Individual>& pop, std::size_t tournamentSize,
                              Rng& rng) {
    std::size_t best = rng.uniformInt(pop.size());
    for (std::size_t t = 1; t < tournamentSize; ++t) {
        std::size_t c = rng.uniformInt(pop.size());
        if (pop[c].rank < pop[best].rank ||
            (pop[c].rank == pop[best].rank && pop[c].crowding > pop[best].crowding))
            best = c;
    }
    return best;
}

void evaluateInto(std::vector<Individual>& pop, const std::vector<std::size_t>& which,
                  const MultiObjectiveProblem& problem, unsigned jobs, std::size_t& evaluations) {
    parallelFor(
        which.size(), jobs,
        [&](std::size_t i) {
            Individual& ind = pop[which[i]];
            try {
                ind.objectives = problem.evaluate(ind.genome);
                ind.valid = true;
                if (ind.objectives.size() != problem.numObjectives)
                    throw DataError("objective arity mismatch");
            } catch (const std::exception&) {
                ind.objectives.assign(problem.numObjectives, kWorstFitness);
                ind.valid = false;
            }
        });
    evaluations += which.size();
}

std::vector<std::size_t> allIndices(std::size_t n) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    return idx;
}

}  // namespace

ParetoFront nsga2Run(const MultiObjectiveProblem& problem, const EvolutionConfig& config,
                     const GenerationCallback& onGeneration) {
    config.validate();
    Rng rng(config.seed);
    const std::size_t n = config.populationSize;
    std::size_t evaluations = 0;

    std::vector<Individual> pop(n);
    for (auto& ind : pop) ind.genome = problem.makeGenome(rng);
    evaluateInto(pop, allIndices(n), problem, config.jobs, evaluations);
    assignRankAndCrowding(pop);
    if (onGeneration) onGeneration(0, pop);

    for (std::size_t gen = 1; gen <= config.generations; ++gen) {
        std::vector<Individual> offspring;
        offspring.reserve(n);
        while (offspring.size() < n) {
            const auto& pa = pop[crowdedTournament(pop, config.tournamentSize, rng)];
            const auto& pb = pop[crowdedTournament(pop, config.tournamentSize, rng)];
            Genome ca = pa.genome, cb = pb.genome;
            if (rng.bernoulli(config.crossoverRate))
                std::tie(ca, cb) = applyROG(pa.genome, pb.genome, rng, config.rog);
            mutate(ca, config.mutationRate, rng);
            mutate(cb, config.mutationRate, rng);
            offspring.push_back({std::move(ca), {}, 0, 0.0, true});
            if (offspring.size() < n) offspring.push_back({std::move(cb), {}, 0, 0.0, true});
        }
        evaluateInto(offspring, allIndices(n), problem, config.jobs, evaluations);

        // (mu + lambda) environmental selection
        std::vector<Individual> combined;
        combined.reserve(2 * n);
        for (auto& ind : pop) combined.push_back(std::move(ind));
        for (auto& ind : offspring) combined.push_back(std::move(ind));
        auto fronts = fastNonDominatedSort(combined);

        std::vector<Individual> next;
        next.reserve(n);
        for (std::size_t r = 0; r < fronts.size() && next.size() < n; ++r) {
            auto dist = crowdingDistance(fronts[r], combined);
            std::vector<std::size_t> local = allIndices(fronts[r].size());
            if (next.size() + fronts[r].size() > n) {
                std::stable_sort(local.begin(), local.end(),
                                 [&](std::size_t x, std::size_t y) { return dist[x] > dist[y]; });
            }
            for (std::size_t i : local) {
                if (next.size() == n) break;
                Individual ind = std::move(combined[fronts[r][i]]);
                ind.rank = r;
                ind.crowding = dist[i];
                next.push_back(std::move(ind));
            }
        }
        pop = std::move(next);
        if (onGeneration) onGeneration(gen, pop);
    }

    ParetoFront front;
    for (auto& ind : pop)
        if (ind.rank == 0) {
            bool dup = false;
            for (const auto& m : front.members)
                if (m.genome == ind.genome) {
                    dup = true;
                    break;
                }
            if (!dup) front.members.push_back(ind);
        }
    return front;
}

// ---------------------------------------------------------------------------
// Grammar
// ---------------------------------------------------------------------------

Grammar::Grammar(std::vector<GrammarRule> rules) : rules_(std::move(rules)) {
    for (std::size_t i = 0; i < rules_.size(); ++i) {
        if (!index_.emplace(rules_[i].name, i).second)
            throw DataError("duplicate grammar rule <" + rules_[i].name + ">");
    }
    validate();
}

void Grammar::validate() const {
    if (rules_.empty()) throw DataError("empty grammar");
    for (const auto& rule : rules_) {
        if (rule.alternatives.empty())
            throw DataError("rule <" + rule.name + "> has no alternatives");
        for (const auto& alt : rule.alternatives)
            for (const auto& sym : alt)
                if (!sym.terminal && !index_.contains(sym.text))
                    throw DataError("undefined nonterminal <" + sym.text + ">");
    }
}

Grammar Grammar::parseBnf(std::istream& in) {
    std::vector<GrammarRule> rules;
    std::string line;
    std::size_t lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        std::istringstream ls(line);
        std::vector<std::string> tokens;
        std::string tok;
        while (ls >> tok) tokens.push_back(tok);
        if (tokens.empty() || tokens[0][0] == '#') continue;
        if (tokens.size() < 3 || tokens[1] != "::=")
            throw ParseError("expected '<name> ::= ...'", lineNo);
        const std::string& head = tokens[0];
        if (head.size() < 3 || head.front() != '<' || head.back() != '>')
            throw ParseError("rule head must be <name>", lineNo);
        GrammarRule rule;
        rule.name = head.substr(1, head.size() - 2);
        std::vector<GrammarSymbol> alt;
        for (std::size_t i = 2; i < tokens.size(); ++i) {
            if (tokens[i] == "|") {
                rule.alternatives.push_back(std::move(alt));
                alt.clear();
            } else if (tokens[i].size() >= 3 && tokens[i].front() == '<' &&
                       tokens[i].back() == '>') {
                alt.push_back({false, tokens[i].substr(1, tokens[i].size() - 2)});
            } else {
                alt.push_back({true, tokens[i]});
            }
        }
        rule.alternatives.push_back(std::move(alt));
        rules.push_back(std::move(rule));
    }
    return Grammar(std::move(rules));
}

Grammar Grammar::parseBnf(const std::string& text) {
    std::istringstream in(text);
    return parseBnf(in);
}

std::string Grammar::toBnf() const {
    std::string out;
    for (const auto& rule : rules_) {
        out += "<" + rule.name + "> ::=";
        for (std::size_t a = 0; a < rule.alternatives.size(); ++a) {
            if (a > 0) out += " |";
            for (const auto& sym : rule.alternatives[a])
                out += sym.terminal ? " " + sym.text : " <" + sym.text + ">";
        }
        out += "\n";
    }
    return out;
}

const GrammarRule& Grammar::rule(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw DataError("undefined nonterminal <" + name + ">");
    return rules_[it->second];
}

GeDecodeResult geDecode(const std::vector<int>& codons, const Grammar& grammar,
                        std::size_t maxWraps) {
    // Derivation-step cap against codon-free recursion (unit-rule cycles).
    constexpr std::size_t kStepLimit = 100000;

    GeDecodeResult result;
    std::vector<const GrammarSymbol*> stack;
    GrammarSymbol start{false, grammar.startSymbol()};
    stack.push_back(&start);

    std::string phenotype;
    std::size_t index = 0;
    std::size_t wraps = 0;
    std::size_t used = 0;
    std::size_t steps = 0;

    while (!stack.empty()) {
        if (++steps > kStepLimit) return result;  // invalid
        const GrammarSymbol* sym = stack.back();
        stack.pop_back();
        if (sym->terminal) {
            phenotype += sym->text;
            continue;
        }
        const GrammarRule& rule = grammar.rule(sym->text);
        std::size_t choice = 0;
        if (rule.alternatives.size() > 1) {
            if (codons.empty()) return result;  // a choice is needed but none available
            if (index == codons.size()) {
                if (++wraps > maxWraps) return result;  // invalid: wrap budget exhausted
                index = 0;
            }
            choice = static_cast<std::size_t>(codons[index]) % rule.alternatives.size();
            ++index;
            ++used;
        }
        const auto& alt = rule.alternatives[choice];
        for (auto it = alt.rbegin(); it != alt.rend(); ++it) stack.push_back(&*it);
    }

    result.valid = true;
    result.phenotype = std::move(phenotype);
    result.codonsUsed = used;
    result.wraps = wraps;
    return result;
}

// ---------------------------------------------------------------------------
// SDT
// ---------------------------------------------------------------------------

std::vector<std::size_t> applySDT(std::vector<Individual>& pop, SdtTrigger trigger, Rng& rng) {
    std::vector<std::size_t> randomized;
    if (pop.empty()) return randomized;

    if (trigger == SdtTrigger::JudgmentDay) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < pop.size(); ++i)
            if (pop[i].fitness() < pop[best].fitness()) best = i;
        for (std::size_t i = 0; i < pop.size(); ++i) {
            if (i == best) continue;
            pop[i].genome = randomGenome(pop[i].genome, rng);
            randomized.push_back(i);
        }
        return randomized;
    }

    // Packing: group by exact fitness value; the first valid member of each
    // group survives, the rest are randomized. Invalid members never survive.
    std::map<double, std::size_t> groupSize;
    for (const auto& ind : pop) ++groupSize[ind.fitness()];
    std::map<double, std::size_t> keeper;
    for (std::size_t i = 0; i < pop.size(); ++i)
        if (pop[i].valid) keeper.emplace(pop[i].fitness(), i);  // first valid occurrence

    for (std::size_t i = 0; i < pop.size(); ++i) {
        double f = pop[i].fitness();
        bool survives = pop[i].valid &&
                        (groupSize[f] == 1 || (keeper.contains(f) && keeper[f] == i));
        if (survives) continue;
        pop[i].genome = randomGenome(pop[i].genome, rng);
        randomized.push_back(i);
    }
    return randomized;
}

// ---------------------------------------------------------------------------
// GE engine
// ---------------------------------------------------------------------------

namespace {

std::size_t fitnessTournament(const std::vector<Individual>& pop, std::size_t tournamentSize,
                              Rng& rng) {
    std::size_t best = rng.uniformInt(pop.size());
    for (std::size_t t = 1; t < tournamentSize; ++t) {
        std::size_t c = rng.uniformInt(pop.size());
        if (pop[c].fitness() < pop[best].fitness()) best = c;
    }
    return best;
}

}  // namespace

GeResult geRun(const GeProblem& problem, const EvolutionConfig& config,
               const GenerationCallback& onGeneration) {
    config.validate();
    Rng rng(config.seed);
    const std::size_t n = config.populationSize;

    GeResult result;

    auto evaluateMany = [&](std::vector<Individual>& pop, const std::vector<std::size_t>& which) {
        parallelFor(which.size(), config.jobs, [&](std::size_t i) {
            Individual& ind = pop[which[i]];
            auto decoded = geDecode(std::get<CodonGenome>(ind.genome).codons, problem.grammar,
                                    config.maxWraps);
            if (!decoded.valid) {
                ind.objectives = {kWorstFitness};
                ind.valid = false;
                return;
            }
            try {
                ind.objectives = {problem.evaluate(decoded.phenotype)};
                ind.valid = true;
            } catch (const std::exception&) {
                ind.objectives = {kWorstFitness};
                ind.valid = false;
            }
        });
        result.evaluations += which.size();
    };

    CodonGenome prototype;
    prototype.codons.assign(problem.codonLength, 0);
    prototype.codonMax = problem.codonMax;

    std::vector<Individual> pop(n);
    for (auto& ind : pop) ind.genome = randomGenome(Genome{prototype}, rng);
    evaluateMany(pop, allIndices(n));

    auto bestIndex = [&](const std::vector<Individual>& p) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < p.size(); ++i)
            if (p[i].fitness() < p[best].fitness()) best = i;
        return best;
    };

    double bestSoFar = pop[bestIndex(pop)].fitness();
    result.bestPerGeneration.push_back(bestSoFar);
    std::size_t stagnation = 0;
    if (onGeneration) onGeneration(0, pop);

    const bool packingOn = config.sdt == SdtPolicy::Packing || config.sdt == SdtPolicy::Both;
    const bool judgmentOn = config.sdt == SdtPolicy::JudgmentDay || config.sdt == SdtPolicy::Both;

    for (std::size_t gen = 1; gen <= config.generations; ++gen) {
        // SDT firing against the current evaluated population
        if (packingOn) {
            std::map<double, std::size_t> counts;
            std::size_t modal = 0;
            for (const auto& ind : pop) modal = std::max(modal, ++counts[ind.fitness()]);
            if (modal * 2 > n) {
                auto touched = applySDT(pop, SdtTrigger::Packing, rng);
                evaluateMany(pop, touched);
            }
        }
        if (judgmentOn && stagnation >= config.judgmentDayStagnation) {
            auto touched = applySDT(pop, SdtTrigger::JudgmentDay, rng);
            evaluateMany(pop, touched);
            stagnation = 0;
        }

        // 1-elite generational replacement
        std::vector<Individual> next;
        next.reserve(n);
        next.push_back(pop[bestIndex(pop)]);
        while (next.size() < n) {
            const auto& pa = pop[fitnessTournament(pop, config.tournamentSize, rng)];
            const auto& pb = pop[fitnessTournament(pop, config.tournamentSize, rng)];
            Genome ca = pa.genome, cb = pb.genome;
            if (rng.bernoulli(config.crossoverRate))
                std::tie(ca, cb) = applyROG(pa.genome, pb.genome, rng, config.rog);
            mutate(ca, config.mutationRate, rng);
            mutate(cb, config.mutationRate, rng);
            next.push_back({std::move(ca), {}, 0, 0.0, true});
            if (next.size() < n) next.push_back({std::move(cb), {}, 0, 0.0, true});
        }
        std::vector<std::size_t> fresh;
        for (std::size_t i = 1; i < n; ++i) fresh.push_back(i);
        evaluateMany(next, fresh);
        pop = std::move(next);

        double genBest = pop[bestIndex(pop)].fitness();
        if (genBest < bestSoFar) {
            bestSoFar = genBest;
            stagnation = 0;
        } else {
            ++stagnation;
        }
        result.bestPerGeneration.push_back(genBest);
        if (onGeneration) onGeneration(gen, pop);
    }

    std::size_t best = bestIndex(pop);
    result.best = pop[best];
    auto decoded =
        geDecode(std::get<CodonGenome>(result.best.genome).codons, problem.grammar,
                 config.maxWraps);
    result.bestPhenotype = decoded.valid ? decoded.phenotype : std::string{};
    return result;
}

// ---------------------------------------------------------------------------
// Snapshots
// ---------------------------------------------------------------------------

namespace {

json genomeJson(const Genome& g) {
    json j;
    if (const auto* iv = std::get_if<IntegerVectorGenome>(&g)) {
        j["type"] = "int";
        j["values"] = iv->values;
        j["cardinality"] = iv->cardinality;
    } else if (const auto* p = std::get_if<PermutationGenome>(&g)) {
        j["type"] = "perm";
        j["order"] = p->order;
    } else {
        const auto& c = std::get<CodonGenome>(g);
        j["type"] = "codon";
        j["codons"] = c.codons;
        j["codonMax"] = c.codonMax;
    }
    return j;
}

Genome genomeFromJsonObj(const json& j) {
    const std::string type = j.at("type");
    if (type == "int") {
        IntegerVectorGenome g;
        g.values = j.at("values").get<std::vector<int>>();
        g.cardinality = j.at("cardinality").get<std::vector<int>>();
        return g;
    }
    if (type == "perm") {
        PermutationGenome g;
        g.order = j.at("order").get<std::vector<int>>();
        return g;
    }
    if (type == "codon") {
        CodonGenome g;
        g.codons = j.at("codons").get<std::vector<int>>();
        g.codonMax = j.at("codonMax");
        return g;
    }
    throw DataError("unknown genome type '" + type + "'");
}

}  // namespace

std::string genomeToJson(const Genome& g) { return genomeJson(g).dump(); }

Genome genomeFromJson(const std::string& text) {
    try {
        return genomeFromJsonObj(json::parse(text));
    } catch (const json::exception& e) {
        throw DataError(std::string("bad genome JSON: ") + e.what());
    }
}

std::string snapshotToJson(const RunSnapshot& snap) {
    json j;
    j["generation"] = snap.generation;
    j["seed"] = snap.seed;
    json members = json::array();
    for (const auto& ind : snap.population) {
        json m;
        m["genome"] = genomeJson(ind.genome);
        json obj = json::array();
        for (double v : ind.objectives)
            obj.push_back(std::isfinite(v) ? json(v) : json("inf"));
        m["objectives"] = obj;
        m["valid"] = ind.valid;
        members.push_back(std::move(m));
    }
    j["population"] = std::move(members);
    return j.dump(2);
}

RunSnapshot snapshotFromJson(const std::string& text) {
    try {
        json j = json::parse(text);
        RunSnapshot snap;
        snap.generation = j.at("generation");
        snap.seed = j.at("seed");
        for (const auto& m : j.at("population")) {
            Individual ind;
            ind.genome = genomeFromJsonObj(m.at("genome"));
            for (const auto& v : m.at("objectives"))
                ind.objectives.push_back(v.is_string() ? kWorstFitness : v.get<double>());
            ind.valid = m.at("valid");
            snap.population.push_back(std::move(ind));
        }
        return snap;
    } catch (const json::exception& e) {
        throw DataError(std::string("bad snapshot JSON: ") + e.what());
    }
}

}  // namespace memopt
