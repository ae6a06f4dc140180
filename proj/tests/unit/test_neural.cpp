#include <cmath>

#include "doctest.h"
#include "nlgen/errors.hpp"
#include "nlgen/neural.hpp"

using namespace nlgen;

TEST_SUITE("neural") {

TEST_CASE("softmax of equal logits is uniform") {
    Vector p = softmax(Vector{0.0, 0.0, 0.0});
    for (double v : p) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("softmax is stable for large logits") {
    Vector p = softmax(Vector{1000.0, 0.0});
    CHECK(std::isfinite(p[0]));
    CHECK(p[0] == doctest::Approx(1.0));
    CHECK(p[1] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("softmax of log-count logits recovers the counts") {
    Vector p = softmax(Vector{std::log(1.0), std::log(2.0), std::log(3.0)});
    CHECK(std::abs(p[0] - 1.0 / 6.0) < 1e-9);
    CHECK(std::abs(p[1] - 2.0 / 6.0) < 1e-9);
    CHECK(std::abs(p[2] - 3.0 / 6.0) < 1e-9);
}

TEST_CASE("softmax sums to one and ignores additive shifts") {
    Rng rng(7);
    for (int it = 0; it < 200; ++it) {
        std::size_t n = 1 + rng.below(8);
        Vector logits(n);
        for (double& v : logits) v = rng.uniform(-20.0, 20.0);
        Vector p = softmax(logits);
        double sum = 0.0;
        for (double v : p) sum += v;
        CHECK(std::abs(sum - 1.0) < 1e-9);

        double shift = rng.uniform(-50.0, 50.0);
        Vector shifted = logits;
        for (double& v : shifted) v += shift;
        Vector q = softmax(shifted);
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(p[i] - q[i]) < 1e-9);
    }
}

TEST_CASE("sigmoid halves split to one") {
    Rng rng(11);
    for (int it = 0; it < 500; ++it) {
        double x = rng.uniform(-30.0, 30.0);
        CHECK(std::abs(sigmoid(x) + sigmoid(-x) - 1.0) < 1e-12);
    }
}

TEST_CASE("cross entropy of a distribution with itself is its entropy") {
    Rng rng(13);
    for (int it = 0; it < 100; ++it) {
        std::size_t n = 2 + rng.below(6);
        Vector logits(n);
        for (double& v : logits) v = rng.uniform(-3.0, 3.0);
        Vector p = softmax(logits);
        double entropy = 0.0;
        for (double v : p) entropy -= v * std::log(v);
        CHECK(cross_entropy(p, p) == doctest::Approx(entropy).epsilon(1e-12));
    }
}

TEST_CASE("sgd applies the plain update") {
    Matrix p(1, 1), g(1, 1);
    p(0, 0) = 1.0;
    g(0, 0) = 1.0;
    SgdState state{0.1, 1e-7, 0};
    ParamView view{p.data, g.data};
    sgd_step({&view, 1}, state);
    CHECK(p(0, 0) == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(state.example_counter == 1);
}

TEST_CASE("the tenth example triggers weight decay and resets the counter") {
    Matrix p(1, 1), g(1, 1);
    p(0, 0) = 2.0;
    g(0, 0) = 0.0;
    SgdState state{0.1, 0.5, 9};  // large l2 so the decay is visible
    ParamView view{p.data, g.data};
    sgd_step({&view, 1}, state);
    CHECK(p(0, 0) == doctest::Approx(2.0 * (1.0 - 0.1 * 0.5)).epsilon(1e-15));
    CHECK(state.example_counter == 0);
}

TEST_CASE("zero gradient off the decay boundary is a fixed point") {
    Matrix p(2, 2), g(2, 2);
    p(0, 0) = 1.5;
    p(1, 1) = -2.5;
    SgdState state{0.1, 1e-7, 3};
    ParamView view{p.data, g.data};
    sgd_step({&view, 1}, state);
    CHECK(p(0, 0) == 1.5);
    CHECK(p(1, 1) == -2.5);
}

TEST_CASE("zero learning rate is the identity") {
    Rng rng(17);
    Matrix p(3, 4), g(3, 4);
    init_uniform(p, 1.0, rng);
    init_uniform(g, 1.0, rng);
    Matrix before = p;
    SgdState state{0.0, 1e-7, 0};
    ParamView view{p.data, g.data};
    for (int i = 0; i < 25; ++i) sgd_step({&view, 1}, state);
    CHECK(p == before);
}

TEST_CASE("non-finite gradients abort the update") {
    Matrix p(1, 2), g(1, 2);
    p(0, 0) = 1.0;
    g(0, 1) = std::numeric_limits<double>::quiet_NaN();
    SgdState state{0.1, 1e-7, 0};
    ParamView view{p.data, g.data};
    CHECK_THROWS_AS(sgd_step({&view, 1}, state), DivergenceError);
    CHECK(p(0, 0) == 1.0);  // untouched
    CHECK(state.example_counter == 0);
}

TEST_CASE("finite differences agree with a quadratic's analytic gradient") {
    double p = 3.0;
    auto loss = [&]() { return p * p; };
    double* entries[] = {&p};
    double analytic[] = {6.0};
    double err = grad_check(loss, entries, analytic, 1e-5);
    CHECK(err < 1e-8);
}

}  // TEST_SUITE
