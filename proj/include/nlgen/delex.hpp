#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nlgen/ontology.hpp"

namespace nlgen {

/// One substituted placeholder: where it sits in the token stream and the
/// surface value it replaced.
struct LexEntry {
    std::size_t position = 0;
    int slot = -1;
    std::string value;

    bool operator==(const LexEntry&) const = default;
};

/// Delexicalised utterance: BOS ... EOS token strings plus the map back to
/// the original surface values.
struct DelexUtterance {
    std::vector<std::string> tokens;
    std::vector<LexEntry> lex_map;

    bool operator==(const DelexUtterance&) const = default;
};

/// Lowercases, pads punctuation with spaces, splits on whitespace.
std::vector<std::string> tokenize(std::string_view text);

std::string join_tokens(std::span<const std::string> tokens);

/// Replaces every occurrence of each categorical value (matched on whole
/// token windows, case-insensitively, longest value first) with its slot
/// placeholder and wraps the result in BOS/EOS. Values that never occur only
/// produce warnings, never errors.
DelexUtterance delexicalize(std::string_view text, const DialogueAct& da, const Ontology& ont,
                            std::vector<std::string>* warnings = nullptr);

struct RelexResult {
    std::vector<std::string> tokens;  // surface tokens, BOS/EOS removed
    int dangling = 0;                 // placeholders with no value in the act
};

/// Replaces each slot placeholder with that slot's categorical value from the
/// act; placeholders without a value stay in place and are counted.
RelexResult relexicalize_lenient(std::span<const std::string> tokens, const DialogueAct& da,
                                 const Ontology& ont);

/// Strict form: throws DanglingSlotError when any placeholder has no value.
std::string relexicalize(const DelexUtterance& delex, const DialogueAct& da,
                         const Ontology& ont);

/// Token <-> index mapping shared by all models. Reserved tokens (BOS, EOS,
/// UNK and one placeholder per delexicalisable slot) come first, then corpus
/// tokens in lexicographic order.
class Vocabulary {
public:
    static constexpr std::string_view kBos = "BOS";
    static constexpr std::string_view kEos = "EOS";
    static constexpr std::string_view kUnk = "UNK";

    Vocabulary() = default;

    static Vocabulary build(std::span<const DelexUtterance> corpus, const Ontology& ont);

    std::size_t size() const { return tokens_.size(); }
    const std::string& token(int id) const { return tokens_[id]; }
    const std::vector<std::string>& tokens() const { return tokens_; }

    int id(std::string_view token) const;  // -1 when absent
    int bos() const { return 0; }
    int eos() const { return 1; }
    int unk() const { return 2; }

    std::vector<int> encode(std::span<const std::string> tokens) const;  // UNK fallback
    std::vector<std::string> decode(std::span<const int> ids) const;

    /// vocab id -> slot index for placeholder tokens, -1 otherwise.
    std::vector<int> slot_token_map(const Ontology& ont) const;

    static Vocabulary from_tokens(std::vector<std::string> tokens);

    bool operator==(const Vocabulary& o) const { return tokens_ == o.tokens_; }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> index_;
};

}  // namespace nlgen
