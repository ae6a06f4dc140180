#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "nlgen/delex.hpp"
#include "nlgen/ontology.hpp"
#include "nlgen/rng.hpp"

namespace nlgen {

/// One corpus line: the dialogue-act string and its tokenized, lowercase
/// surface utterance.
struct CorpusExample {
    std::string da_string;
    std::string text;

    bool operator==(const CorpusExample&) const = default;
};

std::vector<CorpusExample> load_corpus(const std::string& path);
void save_corpus(std::span<const CorpusExample> corpus, const std::string& path);

/// A corpus example parsed, canonicalized, encoded and delexicalised.
struct PreparedExample {
    DialogueAct da;
    ControlVector control;
    DelexUtterance delex;
    std::vector<int> token_ids;  // filled once a vocabulary exists
    std::string key;
    bool hard = false;
};

PreparedExample prepare_example(const CorpusExample& ex, const Ontology& ont,
                                std::vector<std::string>* warnings = nullptr);

/// Synthetic corpus generator. A pack defines, per act type, weighted entries
/// made of opener paraphrases plus an optional-slot pool realised through
/// shared per-(slot, category) fragment paraphrases; sampling an entry, an
/// opener, a slot subset, fragment variants and slot values yields one
/// act/utterance pair.
class TemplatePack {
public:
    struct SlotSpec {
        int slot = -1;
        SlotCategory cat = SlotCategory::value;
        ValueKind kind = ValueKind::categorical;
    };

    struct Entry {
        double weight = 1.0;
        std::vector<std::vector<std::string>> openers;  // tokenized variants
        std::vector<SlotSpec> required;
        std::vector<SlotSpec> optional_pool;
        int min_optional = 0;
        int max_optional = 0;
        std::vector<std::string> closer;
    };

    struct ActTemplates {
        int act = -1;
        double weight = 1.0;
        std::vector<Entry> entries;
    };

    static TemplatePack load(const std::string& path, const Ontology& ont);
    static TemplatePack from_json_text(const std::string& text, const Ontology& ont);

    CorpusExample sample(Rng& rng) const;
    std::vector<CorpusExample> generate(std::size_t count, std::uint64_t seed) const;

    const Ontology& ontology() const { return *ont_; }

private:
    const std::vector<std::vector<std::string>>& fragment_variants(int act,
                                                                   const SlotSpec& spec) const;
    void validate() const;

    const Ontology* ont_ = nullptr;
    std::map<std::string, std::vector<std::string>> values_;  // slot name -> values
    std::vector<ActTemplates> acts_;
    // key: "slot:cat" or "act/slot:cat"; value: tokenized fragment variants
    std::map<std::string, std::vector<std::vector<std::string>>> fragments_;
};

/// Number of distinct canonical act keys in a corpus.
std::size_t count_distinct_keys(std::span<const CorpusExample> corpus, const Ontology& ont);

struct CorpusSplit {
    std::vector<CorpusExample> train;
    std::vector<CorpusExample> valid;
    std::vector<CorpusExample> test;
    std::vector<CorpusExample> train_upsampled;
};

/// Seeded shuffle and 3:1:1 partition; the training portion is additionally
/// up-sampled so every act type reaches the most frequent act type's count
/// (replication capped at 10x). Validation and test are never up-sampled.
CorpusSplit prepare_splits(std::span<const CorpusExample> corpus, std::uint64_t seed,
                           const Ontology& ont);

std::vector<CorpusExample> upsample_by_act(std::span<const CorpusExample> train,
                                           const Ontology& ont, int cap = 10);

}  // namespace nlgen
