#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "nlgen/cnn.hpp"
#include "nlgen/corpus.hpp"
#include "nlgen/delex.hpp"
#include "nlgen/pipeline.hpp"

using namespace nlgen;

namespace {

const Ontology& ont() {
    static Ontology o = Ontology::restaurant();
    return o;
}

ControlVector cv_of(const std::string& da_text) {
    return encode_control(canonicalize_da(parse_da(da_text, ont()), ont()), ont());
}

CnnParams zero_params(std::size_t embed, const TrainConfig& config) {
    Rng rng(1);
    CnnParams p = CnnParams::init(config, embed, ont().act_count(),
                                  ont().feature_dim() - ont().act_count(), rng);
    for (Vector& f : p.filters) std::fill(f.begin(), f.end(), 0.0);
    p.w_hidden.zero();
    p.w_act.zero();
    p.w_slot.zero();
    std::fill(p.b_hidden.begin(), p.b_hidden.end(), 0.0);
    std::fill(p.b_act.begin(), p.b_act.end(), 0.0);
    std::fill(p.b_slot.begin(), p.b_slot.end(), 0.0);
    return p;
}

}  // namespace

TEST_SUITE("cnn") {

TEST_CASE("the utterance matrix stacks embedding rows in token order") {
    Matrix emb(6, 3);
    Rng rng(3);
    init_uniform(emb, 0.5, rng);
    std::vector<int> tokens = {0, 1};
    Matrix u = build_utterance_matrix(tokens, emb);
    REQUIRE(u.rows == 2);
    REQUIRE(u.cols == 3);
    CHECK(std::equal(u.row(0).begin(), u.row(0).end(), emb.row(0).begin()));
    CHECK(std::equal(u.row(1).begin(), u.row(1).end(), emb.row(1).begin()));

    std::vector<int> repeated = {4, 4};
    Matrix r = build_utterance_matrix(repeated, emb);
    CHECK(std::equal(r.row(0).begin(), r.row(0).end(), r.row(1).begin()));

    std::vector<int> swapped = {1, 0};
    Matrix s = build_utterance_matrix(swapped, emb);
    CHECK(std::equal(s.row(0).begin(), s.row(0).end(), u.row(1).begin()));
    CHECK(std::equal(s.row(1).begin(), s.row(1).end(), u.row(0).begin()));

    std::vector<int> bad = {7};
    CHECK_THROWS_AS(build_utterance_matrix(bad, emb), DataError);
}

TEST_CASE("a width-one identity filter average-pools to tanh of column means") {
    Matrix u(3, 2);
    u(0, 0) = 0.3; u(0, 1) = -0.2;
    u(1, 0) = 0.1; u(1, 1) = 0.4;
    u(2, 0) = -0.6; u(2, 1) = 0.2;
    std::vector<Vector> filters = {Vector{1.0}};
    Vector f = convolve_pool(u, filters);
    REQUIRE(f.size() == 2);
    CHECK(f[0] == doctest::Approx(std::tanh((0.3 + 0.1 - 0.6) / 3.0)).epsilon(1e-12));
    CHECK(f[1] == doctest::Approx(std::tanh((-0.2 + 0.4 + 0.2) / 3.0)).epsilon(1e-12));
}

TEST_CASE("zero filters produce a zero feature map") {
    Matrix u(4, 3);
    Rng rng(7);
    init_uniform(u, 1.0, rng);
    std::vector<Vector> filters = {Vector{0.0, 0.0}, Vector{0.0}};
    for (double v : convolve_pool(u, filters)) CHECK(v == 0.0);
}

TEST_CASE("a width-two filter averages the valid window responses") {
    double a = 0.4, b = -0.3;
    Matrix u(3, 2);
    u(0, 0) = 0.1; u(0, 1) = 0.5;
    u(1, 0) = -0.2; u(1, 1) = 0.3;
    u(2, 0) = 0.6; u(2, 1) = -0.1;
    std::vector<Vector> filters = {Vector{a, b}};
    Vector f = convolve_pool(u, filters);
    // two valid windows per column: rows (0,1) and (1,2)
    double c0 = ((a * 0.1 + b * -0.2) + (a * -0.2 + b * 0.6)) / 2.0;
    double c1 = ((a * 0.5 + b * 0.3) + (a * 0.3 + b * -0.1)) / 2.0;
    CHECK(f[0] == doctest::Approx(std::tanh(c0)).epsilon(1e-12));
    CHECK(f[1] == doctest::Approx(std::tanh(c1)).epsilon(1e-12));
}

TEST_CASE("utterances shorter than the widest filter are zero padded on top") {
    Matrix u(1, 2);
    u(0, 0) = 0.8;
    u(0, 1) = -0.4;
    std::vector<Vector> filters = {Vector{1.0, 1.0, 1.0}};
    Vector f = convolve_pool(u, filters);  // one window over [0,0,row]
    CHECK(f[0] == doctest::Approx(std::tanh(0.8)).epsilon(1e-12));
    CHECK(f[1] == doctest::Approx(std::tanh(-0.4)).epsilon(1e-12));
}

TEST_CASE("an untrained zero-weight model predicts uniform acts and half slots") {
    TrainConfig config;
    config.cnn_hidden = 10;
    CnnParams p = zero_params(5, config);
    Matrix emb(14, 5);
    Rng rng(9);
    init_uniform(emb, 0.1, rng);
    std::vector<int> tokens = {0, 5, 1};
    CnnPrediction pred = cnn_predict(p, tokens, emb);
    for (double v : pred.act_probs) CHECK(v == doctest::Approx(1.0 / 8.0).epsilon(1e-12));
    for (double v : pred.slot_probs) CHECK(v == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("the zero-weight semantic cost has a closed form") {
    TrainConfig config;
    config.cnn_hidden = 10;
    CnnParams p = zero_params(5, config);
    Matrix emb(14, 5);
    Rng rng(11);
    init_uniform(emb, 0.1, rng);
    std::vector<int> tokens = {0, 1};
    double cost = cnn_cost(p, tokens, emb, cv_of("goodbye()"), ont());
    CHECK(cost == doctest::Approx((1.0 - 1.0 / 8.0) + 48 * 0.5).epsilon(1e-12));
}

TEST_CASE("the semantic cost stays within its bounds") {
    TrainConfig config;
    config.cnn_hidden = 12;
    Rng rng(13);
    Matrix emb(20, 6);
    init_uniform(emb, 0.5, rng);
    for (int it = 0; it < 50; ++it) {
        Rng prng(it + 1);
        CnnParams p = CnnParams::init(config, 6, ont().act_count(),
                                      ont().feature_dim() - ont().act_count(), prng);
        std::vector<int> tokens;
        std::size_t len = 2 + prng.below(8);
        for (std::size_t i = 0; i < len; ++i)
            tokens.push_back(static_cast<int>(prng.below(20)));
        double cost = cnn_cost(p, tokens, emb, cv_of("inform(food=\"thai\")"), ont());
        CHECK(cost >= 0.0);
        CHECK(cost <= 49.0);
    }
}

TEST_CASE("width-one filters make predictions order-invariant") {
    TrainConfig config;
    config.cnn_hidden = 9;
    config.cnn_filter_widths = {1, 1};
    Rng rng(17);
    CnnParams p = CnnParams::init(config, 5, ont().act_count(),
                                  ont().feature_dim() - ont().act_count(), rng);
    Matrix emb(14, 5);
    init_uniform(emb, 0.4, rng);
    std::vector<int> tokens = {0, 3, 9, 4, 1};
    std::vector<int> shuffled = {4, 0, 1, 9, 3};
    CnnPrediction a = cnn_predict(p, tokens, emb);
    CnnPrediction b = cnn_predict(p, shuffled, emb);
    for (std::size_t i = 0; i < a.act_probs.size(); ++i)
        CHECK(a.act_probs[i] == doctest::Approx(b.act_probs[i]).epsilon(1e-12));
    for (std::size_t i = 0; i < a.slot_probs.size(); ++i)
        CHECK(a.slot_probs[i] == doctest::Approx(b.slot_probs[i]).epsilon(1e-12));
}

TEST_CASE("swapping filters and their classifier columns changes nothing") {
    TrainConfig config;
    config.cnn_hidden = 8;
    config.cnn_filter_widths = {2, 3};
    Rng rng(19);
    std::size_t embed = 4;
    CnnParams p = CnnParams::init(config, embed, ont().act_count(),
                                  ont().feature_dim() - ont().act_count(), rng);
    Matrix emb(14, embed);
    init_uniform(emb, 0.4, rng);
    std::vector<int> tokens = {0, 3, 9, 4, 1};

    CnnParams swapped = p;
    std::swap(swapped.filters[0], swapped.filters[1]);
    for (std::size_t r = 0; r < swapped.w_hidden.rows; ++r) {
        for (std::size_t c = 0; c < embed; ++c)
            std::swap(swapped.w_hidden(r, c), swapped.w_hidden(r, embed + c));
    }
    CnnPrediction a = cnn_predict(p, tokens, emb);
    CnnPrediction b = cnn_predict(swapped, tokens, emb);
    for (std::size_t i = 0; i < a.act_probs.size(); ++i)
        CHECK(a.act_probs[i] == doctest::Approx(b.act_probs[i]).epsilon(1e-12));
    for (std::size_t i = 0; i < a.slot_probs.size(); ++i)
        CHECK(a.slot_probs[i] == doctest::Approx(b.slot_probs[i]).epsilon(1e-12));
}

TEST_CASE("classifier gradients match finite differences") {
    TrainConfig config;
    config.cnn_hidden = 7;
    config.cnn_filter_widths = {1, 2};
    Rng rng(23);
    std::size_t embed = 5;
    CnnParams p = CnnParams::init(config, embed, ont().act_count(),
                                  ont().feature_dim() - ont().act_count(), rng);
    Matrix emb(14, embed);
    init_uniform(emb, 0.2, rng);
    std::vector<int> tokens = {0, 5, 9, 7, 1};
    ControlVector target = cv_of("inform(name=\"x\",kidsallowed=yes)");

    CnnGradients grads = CnnGradients::like(p, emb);
    cnn_example_gradients(p, tokens, emb, target, ont(), grads);

    std::vector<double*> entries;
    std::vector<double> analytic;
    auto collect_vec = [&](Vector& v, const Vector& g) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            entries.push_back(&v[i]);
            analytic.push_back(g[i]);
        }
    };
    auto collect_mat = [&](Matrix& m, const Matrix& g) {
        for (std::size_t i = 0; i < m.data.size(); ++i) {
            entries.push_back(&m.data[i]);
            analytic.push_back(g.data[i]);
        }
    };
    for (std::size_t k = 0; k < p.filters.size(); ++k) collect_vec(p.filters[k], grads.filters[k]);
    collect_mat(p.w_hidden, grads.w_hidden);
    collect_vec(p.b_hidden, grads.b_hidden);
    collect_mat(p.w_act, grads.w_act);
    collect_vec(p.b_act, grads.b_act);
    collect_mat(p.w_slot, grads.w_slot);
    collect_vec(p.b_slot, grads.b_slot);
    collect_mat(emb, grads.embeddings);

    CnnGradients scratch = CnnGradients::like(p, emb);
    auto loss = [&]() { return cnn_example_gradients(p, tokens, emb, target, ont(), scratch); };
    CHECK(grad_check(loss, entries, analytic, 1e-5) < 1e-4);
}

TEST_CASE("training memorizes a single labelled pair") {
    TrainConfig config;
    config.cnn_hidden = 16;
    config.embed_dim = 8;
    config.max_epochs = 500;
    config.patience = 500;
    Rng rng(29);
    Matrix emb(14, 8);
    init_uniform(emb, 0.1, rng);
    CnnParams p = CnnParams::init(config, 8, ont().act_count(),
                                  ont().feature_dim() - ont().act_count(), rng);
    std::vector<CnnExample> pair = {{{0, 3, 5, 1}, cv_of("inform(name=\"x\",food=\"thai\")")}};
    Rng train_rng(31);
    TrainLog log = train_cnn(p, emb, ont(), pair, pair, config, train_rng);
    CHECK_FALSE(log.diverged);
    CHECK(log.best_valid < 0.05);

    CnnPrediction pred = cnn_predict(p, pair[0].tokens, emb);
    CHECK(pred.act_probs[ont().act_index("inform")] > 0.95);
    CHECK(log.best_valid <= log.epochs.back().valid_entropy + 1e-12);
}

TEST_CASE("a small corpus teaches act types and hard slot bits") {
    Ontology o = Ontology::restaurant();
    TemplatePack pack = TemplatePack::load(std::string(NLGEN_DATA_DIR) +
                                               "/restaurant_templates.json", o);
    std::vector<CorpusExample> corpus = pack.generate(260, 424242);
    Dataset data = prepare_dataset(corpus, o, 9);

    TrainConfig config;
    config.embed_dim = 20;
    config.cnn_hidden = 40;
    config.max_epochs = 18;
    config.patience = 3;

    Rng emb_rng(1);
    Matrix emb(data.vocab.size(), config.embed_dim);
    init_uniform(emb, 0.1, emb_rng);
    Rng init_rng(2);
    CnnParams p = CnnParams::init(config, config.embed_dim, o.act_count(),
                                  o.feature_dim() - o.act_count(), init_rng);
    std::vector<CnnExample> train = to_cnn_examples(data.train);
    std::vector<CnnExample> valid = to_cnn_examples(data.valid);
    Rng train_rng(3);
    TrainLog log = train_cnn(p, emb, o, train, valid, config, train_rng);
    CHECK_FALSE(log.diverged);

    int act_hits = 0, act_total = 0;
    int bit_hits = 0, bit_total = 0;
    for (const PreparedExample& ex : data.test) {
        if (!ex.hard) continue;
        CnnPrediction pred = cnn_predict(p, ex.token_ids, emb);
        int best = 0;
        for (std::size_t i = 1; i < pred.act_probs.size(); ++i)
            if (pred.act_probs[i] > pred.act_probs[best]) best = static_cast<int>(i);
        act_hits += best == ex.da.act_type;
        ++act_total;
        for (std::size_t i = 0; i < pred.slot_probs.size(); ++i) {
            bit_hits += (pred.slot_probs[i] > 0.5) ==
                        (ex.control.values[o.act_count() + i] > 0.5);
            ++bit_total;
        }
    }
    REQUIRE(act_total > 5);
    CHECK(static_cast<double>(act_hits) / act_total >= 0.95);
    CHECK(static_cast<double>(bit_hits) / bit_total >= 0.90);
}

}  // TEST_SUITE
