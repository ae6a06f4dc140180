#include "nlgen/cnn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nlgen/errors.hpp"

namespace nlgen {

std::size_t CnnParams::max_width() const {
    std::size_t w = 1;
    for (const Vector& f : filters) w = std::max(w, f.size());
    return w;
}

CnnParams CnnParams::init(const TrainConfig& config, std::size_t embed, std::size_t acts,
                          std::size_t slot_bits, Rng& rng) {
    CnnParams p;
    for (int width : config.cnn_filter_widths) {
        Vector f(static_cast<std::size_t>(width));
        for (double& v : f) v = rng.uniform(-0.1, 0.1);
        p.filters.push_back(std::move(f));
    }
    std::size_t k = p.filters.size();
    p.w_hidden = Matrix(config.cnn_hidden, k * embed);
    p.b_hidden.assign(config.cnn_hidden, 0.0);
    p.w_act = Matrix(acts, config.cnn_hidden);
    p.b_act.assign(acts, 0.0);
    p.w_slot = Matrix(slot_bits, config.cnn_hidden);
    p.b_slot.assign(slot_bits, 0.0);
    init_uniform(p.w_hidden, 0.1, rng);
    init_uniform(p.w_act, 0.1, rng);
    init_uniform(p.w_slot, 0.1, rng);
    for (double& v : p.b_hidden) v = rng.uniform(-0.1, 0.1);
    for (double& v : p.b_act) v = rng.uniform(-0.1, 0.1);
    for (double& v : p.b_slot) v = rng.uniform(-0.1, 0.1);
    return p;
}

Matrix build_utterance_matrix(std::span<const int> tokens, const Matrix& embeddings) {
    Matrix u(tokens.size(), embeddings.cols);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        int t = tokens[i];
        if (t < 0 || t >= static_cast<int>(embeddings.rows))
            throw DataError("token id out of vocabulary range");
        std::copy_n(embeddings.row(t).data(), embeddings.cols, u.row(i).data());
    }
    return u;
}

namespace {

Matrix pad_top(const Matrix& u, std::size_t min_rows) {
    if (u.rows >= min_rows) return u;
    Matrix padded(min_rows, u.cols);
    std::size_t shift = min_rows - u.rows;
    for (std::size_t r = 0; r < u.rows; ++r)
        std::copy_n(u.row(r).data(), u.cols, padded.row(r + shift).data());
    return padded;
}

}  // namespace

Vector convolve_pool(const Matrix& u_raw, std::span<const Vector> filters) {
    std::size_t max_width = 1;
    for (const Vector& f : filters) max_width = std::max(max_width, f.size());
    Matrix u = pad_top(u_raw, max_width);

    Vector out;
    out.reserve(filters.size() * u.cols);
    for (const Vector& filter : filters) {
        std::size_t m = filter.size();
        std::size_t windows = u.rows - m + 1;
        for (std::size_t j = 0; j < u.cols; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < windows; ++i) {
                for (std::size_t r = 0; r < m; ++r) acc += filter[r] * u(i + r, j);
            }
            out.push_back(acc / static_cast<double>(windows));
        }
    }
    for (double& v : out) v = std::tanh(v);
    return out;
}

namespace {

struct CnnForward {
    Matrix u;            // padded utterance matrix
    std::size_t pad = 0; // zero rows prepended
    Vector pooled;       // pre-tanh pooled features
    Vector feat;         // tanh(pooled)
    Vector hid;          // sigmoid hidden layer
    Vector act_probs;
    Vector slot_probs;
};

CnnForward cnn_forward(const CnnParams& params, std::span<const int> tokens,
                       const Matrix& embeddings) {
    CnnForward f;
    Matrix raw = build_utterance_matrix(tokens, embeddings);
    f.u = pad_top(raw, params.max_width());
    f.pad = f.u.rows - raw.rows;

    f.pooled.reserve(params.filters.size() * f.u.cols);
    for (const Vector& filter : params.filters) {
        std::size_t m = filter.size();
        std::size_t windows = f.u.rows - m + 1;
        for (std::size_t j = 0; j < f.u.cols; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < windows; ++i)
                for (std::size_t r = 0; r < m; ++r) acc += filter[r] * f.u(i + r, j);
            f.pooled.push_back(acc / static_cast<double>(windows));
        }
    }
    f.feat.resize(f.pooled.size());
    for (std::size_t i = 0; i < f.pooled.size(); ++i) f.feat[i] = std::tanh(f.pooled[i]);

    f.hid.assign(params.w_hidden.rows, 0.0);
    matvec(params.w_hidden, f.feat, f.hid);
    for (std::size_t i = 0; i < f.hid.size(); ++i) f.hid[i] = sigmoid(f.hid[i] + params.b_hidden[i]);

    f.act_probs.assign(params.w_act.rows, 0.0);
    matvec(params.w_act, f.hid, f.act_probs);
    for (std::size_t i = 0; i < f.act_probs.size(); ++i) f.act_probs[i] += params.b_act[i];
    softmax_inplace(f.act_probs);

    f.slot_probs.assign(params.w_slot.rows, 0.0);
    matvec(params.w_slot, f.hid, f.slot_probs);
    for (std::size_t i = 0; i < f.slot_probs.size(); ++i)
        f.slot_probs[i] = sigmoid(f.slot_probs[i] + params.b_slot[i]);
    return f;
}

int target_act(const ControlVector& target, const Ontology& ont) {
    for (std::size_t i = 0; i < ont.act_count(); ++i)
        if (target.values[i] > 0.5) return static_cast<int>(i);
    throw DataError("control vector has no act bit set");
}

}  // namespace

CnnPrediction cnn_predict(const CnnParams& params, std::span<const int> tokens,
                          const Matrix& embeddings) {
    CnnForward f = cnn_forward(params, tokens, embeddings);
    return {std::move(f.act_probs), std::move(f.slot_probs)};
}

double cnn_cost(const CnnParams& params, std::span<const int> tokens, const Matrix& embeddings,
                const ControlVector& target, const Ontology& ont) {
    CnnPrediction pred = cnn_predict(params, tokens, embeddings);
    double cost = 1.0 - pred.act_probs[target_act(target, ont)];
    std::size_t acts = ont.act_count();
    for (std::size_t i = 0; i < pred.slot_probs.size(); ++i)
        cost += std::abs(pred.slot_probs[i] - target.values[acts + i]);
    return cost;
}

CnnGradients CnnGradients::like(const CnnParams& params, const Matrix& embeddings) {
    CnnGradients g;
    for (const Vector& f : params.filters) g.filters.emplace_back(f.size(), 0.0);
    g.w_hidden = Matrix(params.w_hidden.rows, params.w_hidden.cols);
    g.b_hidden.assign(params.b_hidden.size(), 0.0);
    g.w_act = Matrix(params.w_act.rows, params.w_act.cols);
    g.b_act.assign(params.b_act.size(), 0.0);
    g.w_slot = Matrix(params.w_slot.rows, params.w_slot.cols);
    g.b_slot.assign(params.b_slot.size(), 0.0);
    g.embeddings = Matrix(embeddings.rows, embeddings.cols);
    return g;
}

void CnnGradients::zero() {
    for (Vector& f : filters) std::fill(f.begin(), f.end(), 0.0);
    w_hidden.zero();
    std::fill(b_hidden.begin(), b_hidden.end(), 0.0);
    w_act.zero();
    std::fill(b_act.begin(), b_act.end(), 0.0);
    w_slot.zero();
    std::fill(b_slot.begin(), b_slot.end(), 0.0);
    embeddings.zero();
}

double cnn_example_gradients(const CnnParams& params, std::span<const int> tokens,
                             const Matrix& embeddings, const ControlVector& target,
                             const Ontology& ont, CnnGradients& out) {
    out.zero();
    CnnForward f = cnn_forward(params, tokens, embeddings);
    int act = target_act(target, ont);
    std::size_t acts = ont.act_count();

    double loss = -std::log(f.act_probs[act]);
    for (std::size_t i = 0; i < f.slot_probs.size(); ++i) {
        double y = target.values[acts + i];
        double p = f.slot_probs[i];
        loss -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
    }

    Vector dact = f.act_probs;
    dact[act] -= 1.0;
    Vector dslot(f.slot_probs.size());
    for (std::size_t i = 0; i < dslot.size(); ++i) dslot[i] = f.slot_probs[i] - target.values[acts + i];

    add_outer(out.w_act, 1.0, dact, f.hid);
    axpy(1.0, dact, out.b_act);
    add_outer(out.w_slot, 1.0, dslot, f.hid);
    axpy(1.0, dslot, out.b_slot);

    Vector dhid(f.hid.size(), 0.0);
    matvec_transposed_add(params.w_act, dact, dhid);
    matvec_transposed_add(params.w_slot, dslot, dhid);
    for (std::size_t i = 0; i < dhid.size(); ++i) dhid[i] *= f.hid[i] * (1.0 - f.hid[i]);

    add_outer(out.w_hidden, 1.0, dhid, f.feat);
    axpy(1.0, dhid, out.b_hidden);

    Vector dfeat(f.feat.size(), 0.0);
    matvec_transposed_add(params.w_hidden, dhid, dfeat);
    for (std::size_t i = 0; i < dfeat.size(); ++i) dfeat[i] *= 1.0 - f.feat[i] * f.feat[i];

    // Back through pooling and convolution into filters and embeddings.
    Matrix du(f.u.rows, f.u.cols);
    std::size_t offset = 0;
    for (std::size_t k = 0; k < params.filters.size(); ++k) {
        const Vector& filter = params.filters[k];
        std::size_t m = filter.size();
        std::size_t windows = f.u.rows - m + 1;
        double inv = 1.0 / static_cast<double>(windows);
        for (std::size_t j = 0; j < f.u.cols; ++j) {
            double dz = dfeat[offset + j] * inv;
            if (dz == 0.0) continue;
            for (std::size_t i = 0; i < windows; ++i) {
                for (std::size_t r = 0; r < m; ++r) {
                    out.filters[k][r] += dz * f.u(i + r, j);
                    du(i + r, j) += dz * filter[r];
                }
            }
        }
        offset += f.u.cols;
    }
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        axpy(1.0, du.row(i + f.pad), out.embeddings.row(tokens[i]));
    }
    return loss;
}

namespace {

double corpus_loss(const CnnParams& params, const Matrix& embeddings, const Ontology& ont,
                   std::span<const CnnExample> examples) {
    // Same objective as training, reported per example.
    double total = 0.0;
    for (const CnnExample& ex : examples) {
        CnnPrediction pred = cnn_predict(params, ex.tokens, embeddings);
        int act = -1;
        for (std::size_t i = 0; i < ont.act_count(); ++i)
            if (ex.target.values[i] > 0.5) act = static_cast<int>(i);
        double loss = -std::log(pred.act_probs[act]);
        std::size_t acts = ont.act_count();
        for (std::size_t i = 0; i < pred.slot_probs.size(); ++i) {
            double y = ex.target.values[acts + i];
            double p = pred.slot_probs[i];
            loss -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
        }
        total += loss;
    }
    return examples.empty() ? 0.0 : total / static_cast<double>(examples.size());
}

std::vector<ParamView> views(CnnParams& p, Matrix& emb, const CnnGradients& g) {
    std::vector<ParamView> v;
    for (std::size_t k = 0; k < p.filters.size(); ++k)
        v.push_back({p.filters[k], g.filters[k]});
    v.push_back({p.w_hidden.data, g.w_hidden.data});
    v.push_back({p.b_hidden, g.b_hidden});
    v.push_back({p.w_act.data, g.w_act.data});
    v.push_back({p.b_act, g.b_act});
    v.push_back({p.w_slot.data, g.w_slot.data});
    v.push_back({p.b_slot, g.b_slot});
    v.push_back({emb.data, g.embeddings.data});
    return v;
}

}  // namespace

TrainLog train_cnn(CnnParams& params, Matrix& embeddings, const Ontology& ont,
                   std::span<const CnnExample> train, std::span<const CnnExample> valid,
                   const TrainConfig& config, Rng& rng) {
    if (train.empty() || valid.empty()) throw DataError("training needs train and valid sets");

    CnnGradients grads = CnnGradients::like(params, embeddings);
    SgdState sgd{config.learning_rate, config.l2_coeff, 0};

    TrainLog log;
    CnnParams best_params = params;
    Matrix best_emb = embeddings;
    double best_valid = corpus_loss(params, embeddings, ont, valid);
    double prev_valid = best_valid;
    int bad_epochs = 0;

    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
        rng.shuffle(order);
        double train_loss = 0.0;
        bool diverged = false;
        for (std::size_t idx : order) {
            const CnnExample& ex = train[idx];
            double loss = cnn_example_gradients(params, ex.tokens, embeddings, ex.target, ont, grads);
            if (!std::isfinite(loss)) {
                diverged = true;
                break;
            }
            train_loss += loss;
            try {
                sgd_step(views(params, embeddings, grads), sgd);
            } catch (const DivergenceError&) {
                diverged = true;
                break;
            }
        }
        double valid_loss = diverged ? std::numeric_limits<double>::quiet_NaN()
                                     : corpus_loss(params, embeddings, ont, valid);
        if (diverged || !std::isfinite(valid_loss)) {
            log.diverged = true;
            break;
        }
        log.epochs.push_back(
            {train_loss / static_cast<double>(train.size()), valid_loss, sgd.learning_rate});

        if (valid_loss < best_valid) {
            best_valid = valid_loss;
            best_params = params;
            best_emb = embeddings;
            log.best_epoch = epoch;
            bad_epochs = 0;
        } else {
            ++bad_epochs;
        }
        if (bad_epochs >= config.patience) break;

        double rel_improvement = (prev_valid - valid_loss) / std::max(prev_valid, 1e-12);
        if (rel_improvement < config.lr_halving_threshold) sgd.learning_rate *= 0.5;
        prev_valid = valid_loss;
    }

    params = std::move(best_params);
    embeddings = std::move(best_emb);
    log.best_valid = best_valid;
    return log;
}

}  // namespace nlgen
