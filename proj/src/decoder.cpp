#include "nlgen/decoder.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

namespace nlgen {

int slot_error(std::span<const std::string> tokens, const DialogueAct& da, const Ontology& ont) {
    std::vector<int> occurrences(ont.slot_count(), 0);
    for (const std::string& t : tokens) {
        int slot = ont.slot_of_token(t);
        if (slot >= 0) ++occurrences[slot];
    }
    std::vector<int> required(ont.slot_count(), 0);
    for (const DaPair& p : da.pairs) {
        if (p.value.kind == ValueKind::categorical && ont.slot_delexicalisable(p.slot))
            ++required[p.slot];
    }
    int err = 0;
    for (std::size_t s = 0; s < ont.slot_count(); ++s) {
        if (occurrences[s] == 0)
            err += required[s];  // missing
        else
            err += std::max(0, occurrences[s] - required[s]);  // redundant
    }
    return err;
}

std::vector<Candidate> overgenerate(const RnnParams& fwd, const GenContext& ctx,
                                    const DialogueAct& da, const DecodeConfig& config) {
    ControlVector cv = encode_control(da, *ctx.ont);
    std::vector<Candidate> out;
    std::map<std::vector<int>, bool> seen;
    for (int i = 0; i < config.beam; ++i) {
        Rng rng(Rng::derive(config.seed, static_cast<std::uint64_t>(i)));
        SampleResult sample =
            sample_utterance(fwd, ctx, cv, config.gate_decay, config.max_len, rng);
        if (seen.emplace(sample.tokens, true).second) {
            Candidate c;
            c.token_ids = std::move(sample.tokens);
            c.tokens = ctx.vocab->decode(c.token_ids);
            c.cost_forward = sample.nll;
            out.push_back(std::move(c));
        }
    }
    return out;
}

void rerank(std::vector<Candidate>& candidates, const RnnParams* bwd, const CnnParams* cnn,
            const GenContext& ctx, const DialogueAct& da, const DecodeConfig& config) {
    ControlVector cv = encode_control(da, *ctx.ont);
    for (Candidate& c : candidates) {
        if (bwd) c.cost_backward = sequence_nll(*bwd, ctx, c.token_ids, cv, config.gate_decay);
        if (cnn) c.cost_semantic = cnn_cost(*cnn, c.token_ids, *ctx.embeddings, cv, *ctx.ont);
        c.slot_errors = slot_error(c.tokens, da, *ctx.ont);
        RelexResult relex = relexicalize_lenient(c.tokens, da, *ctx.ont);
        c.slot_errors += relex.dangling;  // unrenderable placeholders, kept but penalised
        c.surface = join_tokens(relex.tokens);
        c.score = -(c.cost_forward + c.cost_backward + c.cost_semantic);
        c.penalized_score = c.score - config.slot_penalty * c.slot_errors;
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) {
                         if (a.penalized_score != b.penalized_score)
                             return a.penalized_score > b.penalized_score;
                         if (a.cost_forward != b.cost_forward)
                             return a.cost_forward < b.cost_forward;
                         return a.tokens < b.tokens;
                     });
}

DecodeResult select_output(std::vector<Candidate> ranked, const DialogueAct& da,
                           const Ontology& ont, int top_n, Rng& rng) {
    (void)da;
    (void)ont;
    DecodeResult result;
    result.ranked = std::move(ranked);
    if (result.ranked.empty()) return result;
    std::size_t pool = std::min<std::size_t>(std::max(top_n, 1), result.ranked.size());
    result.chosen = pool == 1 ? 0 : static_cast<std::size_t>(rng.below(pool));
    result.surface = result.ranked[result.chosen].surface;
    return result;
}

DecodeResult generate_utterance(const RnnParams& fwd, const RnnParams* bwd,
                                const CnnParams* cnn, const GenContext& ctx,
                                const DialogueAct& da, const DecodeConfig& config) {
    std::vector<Candidate> candidates = overgenerate(fwd, ctx, da, config);
    rerank(candidates, bwd, cnn, ctx, da, config);
    Rng rng(Rng::derive(config.seed, 0x5e1ec7ull + config.top_n));
    return select_output(std::move(candidates), da, *ctx.ont, config.top_n, rng);
}

std::string format_ranked_report(const DecodeResult& result) {
    std::string out = "rank\tr_star\tr\tcost_fRNN\tcost_bRNN\tcost_CNN\terr\tsurface\n";
    char line[512];
    for (std::size_t i = 0; i < result.ranked.size(); ++i) {
        const Candidate& c = result.ranked[i];
        std::snprintf(line, sizeof(line), "%zu\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f\t%d\t", i + 1,
                      c.penalized_score, c.score, c.cost_forward, c.cost_backward,
                      c.cost_semantic, c.slot_errors);
        out += line;
        out += c.surface;
        out += '\n';
    }
    return out;
}

}  // namespace nlgen
