#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "nlgen/corpus.hpp"
#include "nlgen/decoder.hpp"
#include "nlgen/ontology.hpp"

namespace nlgen {

/// Nearest-neighbour retrieval over control vectors: the query act is
/// compared by cosine similarity against every training act and the winner's
/// first stored template is lexicalised with the query's values.
class TemplateStore {
public:
    struct Entry {
        std::string key;
        Vector control;
        std::vector<std::string> tokens;
    };

    static TemplateStore build(std::span<const PreparedExample> train, const Ontology& ont);

    const std::vector<Entry>& entries() const { return entries_; }

private:
    std::vector<Entry> entries_;
};

GeneratedUtterance knn_generate(const TemplateStore& store, const DialogueAct& da,
                                const Ontology& ont);

/// Utterance-class n-gram language model: the corpus is partitioned by
/// (act type, first k slot names) and one count-based model of the given
/// order is trained per class. Scoring uses stupid backoff (alpha = 0.4)
/// normalised into a proper distribution, with a uniform floor below the
/// unigram level. Generation over-generates from the class model and reranks
/// by -(sequence NLL + slot_penalty * slot errors).
class NgramClassLm {
public:
    static NgramClassLm train(std::span<const PreparedExample> train, int class_slots, int order,
                              const Ontology& ont);

    GeneratedUtterance generate(const DialogueAct& da, const DecodeConfig& config,
                                const Ontology& ont) const;

    /// Normalised next-token distribution given a history, for the act's
    /// class (after key backoff).
    Vector next_distribution(const std::string& class_key,
                             std::span<const std::string> history) const;

    double sequence_nll(const DialogueAct& da, std::span<const std::string> tokens,
                        const Ontology& ont) const;

    /// Class key for an act at this model's granularity (before backoff).
    std::string class_key(const DialogueAct& da, const Ontology& ont) const;
    /// Existing key after backoff: drops trailing slots, then the act.
    std::string resolve_key(const DialogueAct& da, const Ontology& ont) const;

    /// Number of distinct full-granularity classes (backoff prefixes excluded).
    std::size_t class_count() const { return full_class_count_; }
    const std::vector<std::string>& vocab() const { return vocab_; }

    std::string to_json_text() const;
    static NgramClassLm from_json_text(const std::string& text);

    int order() const { return order_; }
    int class_slots() const { return class_slots_; }

private:
    struct ClassCounts {
        // context length -> (joined context -> (token -> count, total))
        struct Table {
            std::map<std::string, int> counts;
            int total = 0;
        };
        std::vector<std::map<std::string, Table>> by_length;
    };

    double backoff_score(const ClassCounts& counts, std::span<const std::string> history,
                         const std::string& token) const;

    int class_slots_ = 0;
    int order_ = 3;
    std::size_t full_class_count_ = 0;
    std::vector<std::string> vocab_;
    std::map<std::string, ClassCounts> classes_;
};

/// Rule-based comparison generator: one fixed opener per act type plus one
/// fixed phrase per (slot, category), appended in canonical slot order.
class HandcraftedGenerator {
public:
    static HandcraftedGenerator load(const std::string& path, const Ontology& ont);
    static HandcraftedGenerator from_json_text(const std::string& text, const Ontology& ont);

    GeneratedUtterance generate(const DialogueAct& da, const Ontology& ont) const;

private:
    std::map<int, std::vector<std::string>> openers_;             // act -> tokens
    std::map<std::string, std::vector<std::string>> fragments_;   // "slot:cat" -> tokens
    std::map<int, std::string> closers_;                          // act -> token
};

}  // namespace nlgen
