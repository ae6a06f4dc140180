#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "nlgen/baselines.hpp"
#include "nlgen/pipeline.hpp"

namespace nlgen {

/// Corpus-level BLEU-4: modified n-gram precisions (n = 1..4) clipped against
/// the per-reference maxima, geometric mean, brevity penalty with
/// closest-reference length. No smoothing; a zero precision zeroes the score.
double bleu4(std::span<const std::vector<std::string>> hypotheses,
             std::span<const std::vector<std::vector<std::string>>> references,
             int max_order = 4);

/// Multi-references for a set of test acts: all delexicalised templates in
/// the corpus sharing a test act's canonical key, deduplicated and
/// lexicalised with that act's values. Acts whose key is missing fall back to
/// their own paired utterance.
struct References {
    std::vector<std::vector<std::vector<std::string>>> per_act;  // aligned with test acts
    std::map<std::string, std::vector<std::vector<std::string>>> templates_by_key;
};

References build_references(std::span<const PreparedExample> corpus,
                            std::span<const PreparedExample> test_acts, const Ontology& ont);

struct SeedResult {
    std::uint64_t seed = 0;
    double bleu = 0.0;
    int err = 0;
    double hard_consistency = 0.0;  // exact-template-match rate on hard acts
    double hard_bleu = 0.0;         // BLEU restricted to hard acts
    int distinct_outputs = 0;
};

struct ActTypeStats {
    std::string act;
    int count = 0;
    double err_mean = 0.0;
};

struct EvalReport {
    std::string system;
    std::vector<std::uint64_t> seeds;
    std::vector<SeedResult> per_seed;
    double bleu_mean = 0.0;
    double err_mean = 0.0;
    double hard_consistency_mean = 0.0;
    std::vector<ActTypeStats> by_act_type;
    std::string config_echo;

    std::string to_tsv_row() const;
    std::string to_json_text() const;
};

/// A named system builder: given a seed, returns a ready generation function
/// (training happens inside for learned systems).
struct SystemFactory {
    std::string name;
    std::function<SystemFn(std::uint64_t seed)> make;
};

EvalReport evaluate_system(const SystemFactory& factory,
                           std::span<const PreparedExample> test_acts, const References& refs,
                           std::span<const std::uint64_t> seeds, const Ontology& ont,
                           const std::string& config_echo = {});

/// Staged component analysis over one corpus: feature-gate decay sweep
/// (forward model only), CNN on/off (all vs hard acts), backward reranker
/// on/off across top-n, and training-set fraction sweep. Scoring inside every
/// cell uses the unpenalised reranking score (slot_penalty = 0).
struct AblationConfig {
    std::vector<double> deltas = {1.0, 0.7, 0.0};
    bool cnn_stage = true;
    bool backward_stage = true;
    std::vector<double> fractions = {0.25, 0.5, 0.75, 1.0};
    std::vector<int> top_ns = {1, 5, 10};
    std::vector<std::uint64_t> seeds = {1, 2, 3};
    std::uint64_t split_seed = 1;
    int gate_beam = 20;
    int full_beam = 100;
    TrainConfig train;
};

struct AblationCell {
    std::string stage;    // "gate" | "cnn" | "backward" | "data"
    std::string setting;  // e.g. "delta=0", "cnn=on", "fraction=0.5"
    int top_n = 1;
    double bleu_mean = 0.0;
    double err_mean = 0.0;
    double hard_consistency_mean = 0.0;
    double hard_bleu_mean = 0.0;
    std::vector<SeedResult> per_seed;
};

struct AblationReport {
    std::vector<AblationCell> cells;

    std::string to_tsv() const;
    std::string to_csv_series() const;  // plot-ready: stage,setting,top_n,metric,value
    std::string to_json_text() const;
    const AblationCell* find(const std::string& stage, const std::string& setting,
                             int top_n) const;
};

AblationReport run_ablation(std::span<const CorpusExample> corpus, const Ontology& ont,
                            const AblationConfig& config);

}  // namespace nlgen
