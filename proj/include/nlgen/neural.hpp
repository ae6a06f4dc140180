#pragma once

#include <functional>
#include <span>
#include <vector>

#include "nlgen/linalg.hpp"
#include "nlgen/rng.hpp"

namespace nlgen {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Numerically stable softmax (max-subtracted). Entries are positive and sum
/// to one.
void softmax_inplace(std::span<double> logits);
Vector softmax(std::span<const double> logits);

/// -sum_i p[i] ln q[i], natural log.
double cross_entropy(std::span<const double> p, std::span<const double> q);

void init_uniform(Matrix& m, double half_range, Rng& rng);

/// One flat view over a parameter buffer and its matching gradient buffer.
struct ParamView {
    std::span<double> value;
    std::span<const double> grad;
};

/// Plain SGD with a periodic weight-decay term: the decay multiplies every
/// parameter by (1 - lr * l2) once per ten processed examples.
struct SgdState {
    double learning_rate = 0.1;
    double l2_coeff = 1e-7;
    int example_counter = 0;  // examples since the last decay

    static constexpr int kDecayEvery = 10;
};

/// Applies one example's update to every parameter view. Throws
/// DivergenceError on a non-finite gradient without touching any parameter.
void sgd_step(std::span<const ParamView> params, SgdState& state);

/// Central finite differences around the current parameter values; returns
/// the max relative error against the supplied analytic gradient. `entries`
/// and `analytic` are aligned: entries[i] is perturbed in place and restored.
double grad_check(const std::function<double()>& loss, std::span<double* const> entries,
                  std::span<const double> analytic, double epsilon = 1e-5);

/// Shared training hyper-parameters for both network trainers.
struct TrainConfig {
    std::size_t embed_dim = 50;
    std::size_t hidden_dim = 80;
    std::size_t cnn_hidden = 100;
    std::vector<int> cnn_filter_widths = {1, 2, 3, 4};
    double learning_rate = 0.1;
    double l2_coeff = 1e-7;
    int max_epochs = 50;
    int patience = 2;                    // epochs without validation improvement
    double lr_halving_threshold = 0.005; // relative validation improvement
    double gate_decay = 0.0;
    int max_sample_len = 60;

    bool operator==(const TrainConfig&) const = default;
};

struct EpochStats {
    double train_entropy = 0.0;
    double valid_entropy = 0.0;
    double learning_rate = 0.0;
};

struct TrainLog {
    std::vector<EpochStats> epochs;
    int best_epoch = -1;
    double best_valid = 0.0;
    bool diverged = false;
};

}  // namespace nlgen
