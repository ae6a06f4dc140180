#pragma once

#include <span>
#include <vector>

#include "nlgen/delex.hpp"
#include "nlgen/neural.hpp"
#include "nlgen/ontology.hpp"

namespace nlgen {

/// Recurrent generator weights. The hidden state is driven by the previous
/// hidden state, the current token embedding and the (gated) control
/// features; the output layer predicts the next token.
struct RnnParams {
    Matrix w_in;    // hidden x embed
    Matrix w_feat;  // hidden x feature_dim
    Matrix w_rec;   // hidden x hidden
    Matrix w_out;   // vocab x hidden
    bool backward = false;

    std::size_t hidden_dim() const { return w_rec.rows; }
    std::size_t vocab_size() const { return w_out.rows; }

    static RnnParams init(std::size_t hidden, std::size_t embed, std::size_t features,
                          std::size_t vocab, bool backward, Rng& rng);

    bool operator==(const RnnParams&) const = default;
};

/// Everything scoring and sampling need besides the weights. The embedding
/// table is shared across the forward RNN, backward RNN and CNN.
struct GenContext {
    const Matrix* embeddings = nullptr;
    const Ontology* ont = nullptr;
    const Vocabulary* vocab = nullptr;
    std::vector<int> token_slot;  // vocab id -> slot index, -1 for plain tokens

    static GenContext make(const Matrix& embeddings, const Vocabulary& vocab,
                           const Ontology& ont);
};

/// Decaying feature gate. Records the step at which each slot's placeholder
/// first appears and scales that slot's "value" bit by decay^(t - t_s) from
/// then on. The act block and the dontcare/yes/no bits are never scaled.
class FeatureGate {
public:
    FeatureGate(const ControlVector& base, const Ontology& ont, double decay);

    void reset();
    /// Record slot emission at step t (first sighting wins).
    void observe(int slot, int t);
    /// Gated features f_t for step t.
    Vector features(int t) const;

    double decay() const { return decay_; }

private:
    const Ontology* ont_;
    Vector base_;
    double decay_;
    std::vector<int> first_time_;  // -1 while unseen
};

struct StepResult {
    Vector hidden;
    Vector probs;
};

/// One recurrence step: h_t = sigmoid(W h_prev + W emb(token) + W f_t),
/// followed by a softmax over the next token.
StepResult rnn_step(const RnnParams& params, const GenContext& ctx, int token,
                    std::span<const double> features, std::span<const double> h_prev);

/// Total negative log-likelihood of a token sequence under the model, gated
/// features applied per step. Backward models score the sequence with its
/// interior reversed (BOS/EOS stay at the ends) and gate in reversed time.
double sequence_nll(const RnnParams& params, const GenContext& ctx, std::span<const int> tokens,
                    const ControlVector& control, double decay);

struct SampleResult {
    std::vector<int> tokens;  // BOS ... (EOS unless truncated)
    double nll = 0.0;         // accumulated -ln p of the drawn tokens
};

/// Draws tokens from the step distributions until EOS or max_len interior
/// tokens. Forward models only.
SampleResult sample_utterance(const RnnParams& params, const GenContext& ctx,
                              const ControlVector& control, double decay, int max_len,
                              Rng& rng);

struct RnnGradients {
    Matrix w_in, w_feat, w_rec, w_out, embeddings;

    static RnnGradients like(const RnnParams& params, const Matrix& embeddings);
    void zero();
};

/// Full-sequence backpropagation through time; fills `out` (overwritten) and
/// returns the sequence loss.
double rnn_sequence_gradients(const RnnParams& params, const GenContext& ctx,
                              std::span<const int> tokens, const ControlVector& control,
                              double decay, RnnGradients& out);

struct RnnExample {
    std::vector<int> tokens;
    ControlVector control;
};

/// SGD + BPTT training with per-epoch validation cross-entropy, learning-rate
/// halving on small relative improvements, early stopping, and best-epoch
/// checkpointing. Mutates params and the shared embedding table.
TrainLog train_rnn(RnnParams& params, Matrix& embeddings, const Vocabulary& vocab,
                   const Ontology& ont, std::span<const RnnExample> train,
                   std::span<const RnnExample> valid, const TrainConfig& config, Rng& rng);

}  // namespace nlgen
