#pragma once

#include <span>
#include <vector>

#include "nlgen/neural.hpp"
#include "nlgen/ontology.hpp"

namespace nlgen {

/// Convolutional sentence model: K one-dimensional filters convolved down
/// the token axis of the stacked-embedding utterance matrix, average-pooled
/// per embedding column, tanh-squashed, then classified by a single hidden
/// layer with an act-type softmax head and a per-slot-bit sigmoid head.
struct CnnParams {
    std::vector<Vector> filters;  // one weight vector per filter, width = size
    Matrix w_hidden;              // cnn_hidden x (K * embed)
    Vector b_hidden;
    Matrix w_act;  // acts x cnn_hidden
    Vector b_act;
    Matrix w_slot;  // slot bits (feature_dim - acts) x cnn_hidden
    Vector b_slot;

    std::size_t filter_count() const { return filters.size(); }
    std::size_t max_width() const;

    static CnnParams init(const TrainConfig& config, std::size_t embed, std::size_t acts,
                          std::size_t slot_bits, Rng& rng);

    bool operator==(const CnnParams&) const = default;
};

/// Stacks token embeddings into an n x embed matrix (BOS/EOS rows included).
Matrix build_utterance_matrix(std::span<const int> tokens, const Matrix& embeddings);

/// Valid convolution of every filter over the matrix, average pooling over
/// time per column, concatenation, then tanh. Matrices shorter than the
/// widest filter are zero-padded at the top.
Vector convolve_pool(const Matrix& u, std::span<const Vector> filters);

struct CnnPrediction {
    Vector act_probs;   // sums to one
    Vector slot_probs;  // independent sigmoids, aligned with control slot bits
};

CnnPrediction cnn_predict(const CnnParams& params, std::span<const int> tokens,
                          const Matrix& embeddings);

/// Continuous hamming distance between the prediction and the act's control
/// targets: (1 - p(required act)) plus the absolute per-bit differences.
double cnn_cost(const CnnParams& params, std::span<const int> tokens, const Matrix& embeddings,
                const ControlVector& target, const Ontology& ont);

struct CnnGradients {
    std::vector<Vector> filters;
    Matrix w_hidden;
    Vector b_hidden;
    Matrix w_act;
    Vector b_act;
    Matrix w_slot;
    Vector b_slot;
    Matrix embeddings;

    static CnnGradients like(const CnnParams& params, const Matrix& embeddings);
    void zero();
};

/// Training loss (act cross-entropy + summed per-bit binary cross-entropy)
/// and its gradients, embeddings included.
double cnn_example_gradients(const CnnParams& params, std::span<const int> tokens,
                             const Matrix& embeddings, const ControlVector& target,
                             const Ontology& ont, CnnGradients& out);

struct CnnExample {
    std::vector<int> tokens;
    ControlVector target;
};

TrainLog train_cnn(CnnParams& params, Matrix& embeddings, const Ontology& ont,
                   std::span<const CnnExample> train, std::span<const CnnExample> valid,
                   const TrainConfig& config, Rng& rng);

}  // namespace nlgen
