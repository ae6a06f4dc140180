#include "nlgen/generator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nlgen/errors.hpp"

namespace nlgen {

RnnParams RnnParams::init(std::size_t hidden, std::size_t embed, std::size_t features,
                          std::size_t vocab, bool backward, Rng& rng) {
    RnnParams p;
    p.w_in = Matrix(hidden, embed);
    p.w_feat = Matrix(hidden, features);
    p.w_rec = Matrix(hidden, hidden);
    p.w_out = Matrix(vocab, hidden);
    p.backward = backward;
    init_uniform(p.w_in, 0.1, rng);
    init_uniform(p.w_feat, 0.1, rng);
    init_uniform(p.w_rec, 0.1, rng);
    init_uniform(p.w_out, 0.1, rng);
    return p;
}

GenContext GenContext::make(const Matrix& embeddings, const Vocabulary& vocab,
                            const Ontology& ont) {
    GenContext ctx;
    ctx.embeddings = &embeddings;
    ctx.ont = &ont;
    ctx.vocab = &vocab;
    ctx.token_slot = vocab.slot_token_map(ont);
    return ctx;
}

FeatureGate::FeatureGate(const ControlVector& base, const Ontology& ont, double decay)
    : ont_(&ont), base_(base.values), decay_(decay), first_time_(ont.slot_count(), -1) {}

void FeatureGate::reset() { std::fill(first_time_.begin(), first_time_.end(), -1); }

void FeatureGate::observe(int slot, int t) {
    if (slot >= 0 && first_time_[slot] < 0) first_time_[slot] = t;
}

Vector FeatureGate::features(int t) const {
    Vector f = base_;
    for (std::size_t s = 0; s < first_time_.size(); ++s) {
        if (first_time_[s] < 0) continue;
        std::size_t bit = ont_->slot_block_offset(static_cast<int>(s)) +
                          static_cast<int>(SlotCategory::value);
        f[bit] *= std::pow(decay_, t - first_time_[s]);
    }
    return f;
}

StepResult rnn_step(const RnnParams& params, const GenContext& ctx, int token,
                    std::span<const double> features, std::span<const double> h_prev) {
    StepResult r;
    r.hidden.assign(params.hidden_dim(), 0.0);
    matvec(params.w_rec, h_prev, r.hidden);
    matvec_add(params.w_in, ctx.embeddings->row(token), r.hidden);
    matvec_add(params.w_feat, features, r.hidden);
    for (double& v : r.hidden) v = sigmoid(v);
    r.probs.assign(params.vocab_size(), 0.0);
    matvec(params.w_out, r.hidden, r.probs);
    softmax_inplace(r.probs);
    return r;
}

namespace {

/// Backward models see the interior reversed; BOS/EOS keep their positions.
std::vector<int> oriented_tokens(const RnnParams& params, std::span<const int> tokens) {
    std::vector<int> seq(tokens.begin(), tokens.end());
    if (params.backward && seq.size() > 3)
        std::reverse(seq.begin() + 1, seq.end() - 1);
    return seq;
}

}  // namespace

double sequence_nll(const RnnParams& params, const GenContext& ctx, std::span<const int> tokens,
                    const ControlVector& control, double decay) {
    for (int t : tokens) {
        if (t < 0 || t >= static_cast<int>(ctx.vocab->size()))
            throw DataError("token id out of vocabulary range");
    }
    std::vector<int> seq = oriented_tokens(params, tokens);
    FeatureGate gate(control, *ctx.ont, decay);
    Vector h(params.hidden_dim(), 0.0);
    double nll = 0.0;
    for (int t = 0; t + 1 < static_cast<int>(seq.size()); ++t) {
        gate.observe(ctx.token_slot[seq[t]], t);
        Vector f = gate.features(t);
        StepResult step = rnn_step(params, ctx, seq[t], f, h);
        nll -= std::log(step.probs[seq[t + 1]]);
        h = std::move(step.hidden);
    }
    return nll;
}

SampleResult sample_utterance(const RnnParams& params, const GenContext& ctx,
                              const ControlVector& control, double decay, int max_len,
                              Rng& rng) {
    SampleResult out;
    out.tokens.push_back(ctx.vocab->bos());
    FeatureGate gate(control, *ctx.ont, decay);
    Vector h(params.hidden_dim(), 0.0);
    int interior = 0;
    int t = 0;
    while (true) {
        int current = out.tokens.back();
        gate.observe(ctx.token_slot[current], t);
        Vector f = gate.features(t);
        StepResult step = rnn_step(params, ctx, current, f, h);
        int drawn = rng.categorical(step.probs);
        out.nll -= std::log(step.probs[drawn]);
        out.tokens.push_back(drawn);
        h = std::move(step.hidden);
        ++t;
        if (drawn == ctx.vocab->eos()) break;
        if (++interior >= max_len) break;
    }
    return out;
}

RnnGradients RnnGradients::like(const RnnParams& params, const Matrix& embeddings) {
    RnnGradients g;
    g.w_in = Matrix(params.w_in.rows, params.w_in.cols);
    g.w_feat = Matrix(params.w_feat.rows, params.w_feat.cols);
    g.w_rec = Matrix(params.w_rec.rows, params.w_rec.cols);
    g.w_out = Matrix(params.w_out.rows, params.w_out.cols);
    g.embeddings = Matrix(embeddings.rows, embeddings.cols);
    return g;
}

void RnnGradients::zero() {
    w_in.zero();
    w_feat.zero();
    w_rec.zero();
    w_out.zero();
    embeddings.zero();
}

double rnn_sequence_gradients(const RnnParams& params, const GenContext& ctx,
                              std::span<const int> tokens, const ControlVector& control,
                              double decay, RnnGradients& out) {
    out.zero();
    std::vector<int> seq = oriented_tokens(params, tokens);
    int steps = static_cast<int>(seq.size()) - 1;
    if (steps <= 0) return 0.0;

    FeatureGate gate(control, *ctx.ont, decay);
    std::vector<Vector> hidden(steps), feats(steps), probs(steps);
    Vector h(params.hidden_dim(), 0.0);
    double loss = 0.0;
    for (int t = 0; t < steps; ++t) {
        gate.observe(ctx.token_slot[seq[t]], t);
        feats[t] = gate.features(t);
        StepResult step = rnn_step(params, ctx, seq[t], feats[t], h);
        loss -= std::log(step.probs[seq[t + 1]]);
        hidden[t] = std::move(step.hidden);
        probs[t] = std::move(step.probs);
        h = hidden[t];
    }

    Vector carry(params.hidden_dim(), 0.0);
    Vector dh(params.hidden_dim());
    Vector da(params.hidden_dim());
    Vector zero_h(params.hidden_dim(), 0.0);
    for (int t = steps - 1; t >= 0; --t) {
        Vector& dlogit = probs[t];  // consumed in place
        dlogit[seq[t + 1]] -= 1.0;
        add_outer(out.w_out, 1.0, dlogit, hidden[t]);
        dh = carry;
        matvec_transposed_add(params.w_out, dlogit, dh);
        for (std::size_t i = 0; i < dh.size(); ++i)
            da[i] = dh[i] * hidden[t][i] * (1.0 - hidden[t][i]);
        std::span<const double> h_prev = t > 0 ? std::span<const double>(hidden[t - 1])
                                               : std::span<const double>(zero_h);
        add_outer(out.w_rec, 1.0, da, h_prev);
        add_outer(out.w_in, 1.0, da, ctx.embeddings->row(seq[t]));
        add_outer(out.w_feat, 1.0, da, feats[t]);
        matvec_transposed_add(params.w_in, da, out.embeddings.row(seq[t]));
        std::fill(carry.begin(), carry.end(), 0.0);
        matvec_transposed_add(params.w_rec, da, carry);
    }
    return loss;
}

namespace {

double corpus_entropy(const RnnParams& params, const GenContext& ctx,
                      std::span<const RnnExample> examples, double decay) {
    double total_nll = 0.0;
    std::size_t total_tokens = 0;
    for (const RnnExample& ex : examples) {
        total_nll += sequence_nll(params, ctx, ex.tokens, ex.control, decay);
        total_tokens += ex.tokens.size() - 1;
    }
    return total_tokens ? total_nll / static_cast<double>(total_tokens) : 0.0;
}

std::vector<ParamView> views(RnnParams& p, Matrix& emb, const RnnGradients& g) {
    return {
        {p.w_in.data, g.w_in.data},   {p.w_feat.data, g.w_feat.data},
        {p.w_rec.data, g.w_rec.data}, {p.w_out.data, g.w_out.data},
        {emb.data, g.embeddings.data},
    };
}

}  // namespace

TrainLog train_rnn(RnnParams& params, Matrix& embeddings, const Vocabulary& vocab,
                   const Ontology& ont, std::span<const RnnExample> train,
                   std::span<const RnnExample> valid, const TrainConfig& config, Rng& rng) {
    if (train.empty() || valid.empty()) throw DataError("training needs train and valid sets");

    GenContext ctx = GenContext::make(embeddings, vocab, ont);
    RnnGradients grads = RnnGradients::like(params, embeddings);
    SgdState sgd{config.learning_rate, config.l2_coeff, 0};

    TrainLog log;
    RnnParams best_params = params;
    Matrix best_emb = embeddings;
    double best_valid = corpus_entropy(params, ctx, valid, config.gate_decay);
    double prev_valid = best_valid;
    int bad_epochs = 0;

    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
        rng.shuffle(order);
        double train_nll = 0.0;
        std::size_t train_tokens = 0;
        bool diverged = false;
        for (std::size_t idx : order) {
            const RnnExample& ex = train[idx];
            double loss =
                rnn_sequence_gradients(params, ctx, ex.tokens, ex.control, config.gate_decay, grads);
            if (!std::isfinite(loss)) {
                diverged = true;
                break;
            }
            train_nll += loss;
            train_tokens += ex.tokens.size() - 1;
            try {
                sgd_step(views(params, embeddings, grads), sgd);
            } catch (const DivergenceError&) {
                diverged = true;
                break;
            }
        }
        double valid_entropy =
            diverged ? std::numeric_limits<double>::quiet_NaN()
                     : corpus_entropy(params, ctx, valid, config.gate_decay);
        if (diverged || !std::isfinite(valid_entropy)) {
            log.diverged = true;
            break;
        }
        log.epochs.push_back({train_tokens ? train_nll / train_tokens : 0.0, valid_entropy,
                              sgd.learning_rate});

        if (valid_entropy < best_valid) {
            best_valid = valid_entropy;
            best_params = params;
            best_emb = embeddings;
            log.best_epoch = epoch;
            bad_epochs = 0;
        } else {
            ++bad_epochs;
        }
        if (bad_epochs >= config.patience) break;

        double rel_improvement = (prev_valid - valid_entropy) / std::max(prev_valid, 1e-12);
        if (rel_improvement < config.lr_halving_threshold) sgd.learning_rate *= 0.5;
        prev_valid = valid_entropy;
    }

    params = std::move(best_params);
    embeddings = std::move(best_emb);
    log.best_valid = best_valid;
    return log;
}

}  // namespace nlgen
