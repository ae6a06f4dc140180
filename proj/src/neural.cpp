#include "nlgen/neural.hpp"

#include <algorithm>
#include <cmath>

#include "nlgen/errors.hpp"

namespace nlgen {

void softmax_inplace(std::span<double> logits) {
    double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double& v : logits) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (double& v : logits) v /= sum;
}

Vector softmax(std::span<const double> logits) {
    Vector out(logits.begin(), logits.end());
    softmax_inplace(out);
    return out;
}

double cross_entropy(std::span<const double> p, std::span<const double> q) {
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] > 0.0) acc -= p[i] * std::log(q[i]);
    }
    return acc;
}

void init_uniform(Matrix& m, double half_range, Rng& rng) {
    for (double& v : m.data) v = rng.uniform(-half_range, half_range);
}

void sgd_step(std::span<const ParamView> params, SgdState& state) {
    for (const ParamView& p : params) {
        for (double g : p.grad) {
            if (!std::isfinite(g)) throw DivergenceError("non-finite gradient");
        }
    }
    double lr = state.learning_rate;
    for (const ParamView& p : params) {
        for (std::size_t i = 0; i < p.value.size(); ++i) p.value[i] -= lr * p.grad[i];
    }
    if (++state.example_counter >= SgdState::kDecayEvery) {
        double keep = 1.0 - lr * state.l2_coeff;
        for (const ParamView& p : params) {
            for (double& v : p.value) v *= keep;
        }
        state.example_counter = 0;
    }
}

double grad_check(const std::function<double()>& loss, std::span<double* const> entries,
                  std::span<const double> analytic, double epsilon) {
    double worst = 0.0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        double* p = entries[i];
        double saved = *p;
        *p = saved + epsilon;
        double up = loss();
        *p = saved - epsilon;
        double down = loss();
        *p = saved;
        double numeric = (up - down) / (2.0 * epsilon);
        double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
        worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
    }
    return worst;
}

}  // namespace nlgen
