#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nlgen/cnn.hpp"
#include "nlgen/delex.hpp"
#include "nlgen/generator.hpp"
#include "nlgen/ontology.hpp"

namespace nlgen {

/// One over-generated utterance with its reranking ingredients.
/// score      = -(cost_forward + cost_backward + cost_semantic)
/// penalized  = score - slot_penalty * slot_errors
struct Candidate {
    std::vector<int> token_ids;       // delex tokens incl. BOS/EOS
    std::vector<std::string> tokens;  // same, as strings
    double cost_forward = 0.0;
    double cost_backward = 0.0;
    double cost_semantic = 0.0;
    int slot_errors = 0;  // redundant + missing placeholders, plus dangling ones
    double score = 0.0;
    double penalized_score = 0.0;
    std::string surface;
};

struct DecodeConfig {
    int beam = 100;
    int top_n = 1;
    double gate_decay = 0.0;
    double slot_penalty = 100.0;
    int max_len = 60;
    std::uint64_t seed = 0;
};

/// Number of redundant plus missing slot placeholders relative to the act's
/// delexicalisable requirements (categorical pairs only; dontcare/yes/no
/// semantics are policed by the CNN cost instead).
int slot_error(std::span<const std::string> tokens, const DialogueAct& da, const Ontology& ont);

/// Samples `beam` utterances from the forward model (one derived rng stream
/// per candidate) and deduplicates identical token sequences. Each candidate
/// carries the forward cost accumulated while sampling.
std::vector<Candidate> overgenerate(const RnnParams& fwd, const GenContext& ctx,
                                    const DialogueAct& da, const DecodeConfig& config);

/// Fills in backward/CNN costs, slot errors and both scores, then sorts by
/// penalized score (descending, stable; ties by lower forward cost then by
/// token sequence). Null rerankers contribute zero cost.
void rerank(std::vector<Candidate>& candidates, const RnnParams* bwd, const CnnParams* cnn,
            const GenContext& ctx, const DialogueAct& da, const DecodeConfig& config);

struct DecodeResult {
    std::string surface;
    std::size_t chosen = 0;  // index into ranked
    std::vector<Candidate> ranked;
};

/// Draws uniformly among the top min(top_n, count) candidates and
/// relexicalises the winner with the act's values.
DecodeResult select_output(std::vector<Candidate> ranked, const DialogueAct& da,
                           const Ontology& ont, int top_n, Rng& rng);

/// overgenerate + rerank + select in one call.
DecodeResult generate_utterance(const RnnParams& fwd, const RnnParams* bwd,
                                const CnnParams* cnn, const GenContext& ctx,
                                const DialogueAct& da, const DecodeConfig& config);

/// Tab-separated ranked-candidate report:
/// rank, r_star, r, cost_fRNN, cost_bRNN, cost_CNN, err, surface.
std::string format_ranked_report(const DecodeResult& result);

/// A finished generation: the delexicalised token sequence and its surface
/// rendering. All comparison systems produce this shape.
struct GeneratedUtterance {
    std::vector<std::string> delex_tokens;
    std::vector<std::string> surface_tokens;
};

}  // namespace nlgen
