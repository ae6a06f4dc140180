#include <algorithm>

#include "doctest.h"
#include "nlgen/decoder.hpp"

using namespace nlgen;

namespace {

const Ontology& ont() {
    static Ontology o = Ontology::restaurant();
    return o;
}

std::vector<std::string> toks(std::initializer_list<const char*> list) {
    std::vector<std::string> out;
    for (const char* t : list) out.emplace_back(t);
    return out;
}

DialogueAct act(const std::string& text) {
    return canonicalize_da(parse_da(text, ont()), ont());
}

/// Independent recount, deliberately written from the definition: per slot,
/// |occurrences - required| where required counts categorical pairs.
int slot_error_oracle(const std::vector<std::string>& tokens, const DialogueAct& da) {
    int err = 0;
    for (std::size_t s = 0; s < ont().slot_count(); ++s) {
        if (!ont().slot_delexicalisable(static_cast<int>(s))) continue;
        int occ = 0;
        for (const std::string& t : tokens)
            if (t == ont().slot_token(static_cast<int>(s))) ++occ;
        int req = 0;
        for (const DaPair& p : da.pairs)
            if (p.slot == static_cast<int>(s) && p.value.kind == ValueKind::categorical) ++req;
        if (occ == 0)
            err += req;
        else
            err += std::max(0, occ - req);
    }
    return err;
}

struct DecodeFixture {
    Vocabulary vocab;
    Matrix embeddings;
    RnnParams params;

    DecodeFixture() {
        std::vector<DelexUtterance> corpus{{toks({"BOS", "nice", "EOS"}), {}}};
        vocab = Vocabulary::build(corpus, ont());
        Rng rng(5);
        embeddings = Matrix(vocab.size(), 4);
        init_uniform(embeddings, 0.1, rng);
        params = RnnParams::init(5, 4, ont().feature_dim(), vocab.size(), false, rng);
    }

    GenContext ctx() const { return GenContext::make(embeddings, vocab, ont()); }
};

}  // namespace

TEST_SUITE("decoder") {

TEST_CASE("slot error counts redundant plus missing placeholders") {
    DialogueAct da = act("inform(name=\"x\", pricerange=\"cheap\")");
    CHECK(slot_error(toks({"BOS", "SLOT_NAME", "and", "SLOT_NAME", "EOS"}), da, ont()) == 2);
    CHECK(slot_error(toks({"BOS", "SLOT_NAME", "is", "SLOT_PRICERANGE", "EOS"}), da, ont()) == 0);
    CHECK(slot_error(toks({"BOS", "SLOT_FOOD", "EOS"}), act("goodbye()"), ont()) == 1);
}

TEST_CASE("non-delexicalisable pairs do not count toward slot error") {
    DialogueAct da = act("confirm(goodformeal=dontcare,kidsallowed=yes)");
    CHECK(slot_error(toks({"BOS", "any", "meal", "EOS"}), da, ont()) == 0);
}

TEST_CASE("slot error matches an independent recount on randomized pairs") {
    Rng rng(41);
    std::vector<std::string> pool = {"BOS", "EOS",       "a",         "b",
                                     "SLOT_NAME",        "SLOT_FOOD", "SLOT_AREA",
                                     "SLOT_PRICERANGE"};
    for (int it = 0; it < 500; ++it) {
        std::vector<std::string> tokens;
        std::size_t len = rng.below(12);
        for (std::size_t i = 0; i < len; ++i) tokens.push_back(pool[rng.below(pool.size())]);
        DialogueAct da;
        da.act_type = static_cast<int>(rng.below(ont().act_count()));
        std::size_t pairs = rng.below(4);
        for (std::size_t i = 0; i < pairs; ++i) {
            int slot = static_cast<int>(rng.below(ont().slot_count()));
            SlotValue v = ont().slot_binary(slot)
                              ? SlotValue::yes()
                              : (rng.below(2) ? SlotValue::categorical("v")
                                              : SlotValue::dont_care());
            da.pairs.push_back({slot, v});
        }
        da = canonicalize_da(da, ont());
        CHECK(slot_error(tokens, da, ont()) == slot_error_oracle(tokens, da));
    }
}

TEST_CASE("overgeneration is reproducible and deduplicated") {
    DecodeFixture fx;
    DecodeConfig config;
    config.beam = 1;
    config.seed = 77;
    DialogueAct da = act("goodbye()");
    std::vector<Candidate> a = overgenerate(fx.params, fx.ctx(), da, config);
    std::vector<Candidate> b = overgenerate(fx.params, fx.ctx(), da, config);
    REQUIRE(a.size() == 1);
    CHECK(a[0].token_ids == b[0].token_ids);
    CHECK(a[0].cost_forward == b[0].cost_forward);

    // force every sample to be "BOS EOS": every draw goes to EOS
    RnnParams greedy = fx.params;
    greedy.w_out.zero();
    for (std::size_t c = 0; c < greedy.w_out.cols; ++c)
        greedy.w_out(fx.vocab.eos(), c) = 60.0;
    config.beam = 8;
    std::vector<Candidate> dedup = overgenerate(greedy, fx.ctx(), da, config);
    CHECK(dedup.size() == 1);
    CHECK(dedup[0].tokens == toks({"BOS", "EOS"}));
}

TEST_CASE("the slot penalty dominates cost differences") {
    DecodeFixture fx;
    DialogueAct da = act("inform(name=\"x\")");
    std::vector<Candidate> cands(2);
    cands[0].tokens = toks({"BOS", "nice", "EOS"});  // drops the name: one error
    cands[0].cost_forward = 2.0;
    cands[1].tokens = toks({"BOS", "SLOT_NAME", "EOS"});
    cands[1].cost_forward = 5.0;
    for (Candidate& c : cands) c.token_ids = fx.vocab.encode(c.tokens);

    DecodeConfig config;
    config.slot_penalty = 100.0;
    rerank(cands, nullptr, nullptr, fx.ctx(), da, config);
    CHECK(cands[0].tokens == toks({"BOS", "SLOT_NAME", "EOS"}));
    CHECK(cands[0].penalized_score == doctest::Approx(-5.0));
    CHECK(cands[1].penalized_score == doctest::Approx(-102.0));

    // with the penalty off, the cheaper candidate wins
    config.slot_penalty = 0.0;
    rerank(cands, nullptr, nullptr, fx.ctx(), da, config);
    CHECK(cands[0].tokens == toks({"BOS", "nice", "EOS"}));
    CHECK(cands[0].penalized_score == cands[0].score);
}

TEST_CASE("reranking fills every cost field and keeps single candidates") {
    DecodeFixture fx;
    DialogueAct da = act("inform(name=\"x\")");
    std::vector<Candidate> cands(1);
    cands[0].tokens = toks({"BOS", "SLOT_NAME", "EOS"});
    cands[0].token_ids = fx.vocab.encode(cands[0].tokens);
    cands[0].cost_forward = 1.5;

    RnnParams backward = fx.params;
    backward.backward = true;
    DecodeConfig config;
    rerank(cands, &backward, nullptr, fx.ctx(), da, config);
    REQUIRE(cands.size() == 1);
    CHECK(cands[0].cost_backward > 0.0);
    CHECK(cands[0].score ==
          doctest::Approx(-(cands[0].cost_forward + cands[0].cost_backward)));
    CHECK(cands[0].surface == "x");
}

TEST_CASE("penalized score never exceeds the raw score") {
    DecodeFixture fx;
    DialogueAct da = act("inform(name=\"x\",food=\"thai\")");
    DecodeConfig config;
    config.beam = 40;
    config.seed = 3;
    std::vector<Candidate> cands = overgenerate(fx.params, fx.ctx(), da, config);
    rerank(cands, nullptr, nullptr, fx.ctx(), da, config);
    for (const Candidate& c : cands) {
        CHECK(c.penalized_score <= c.score + 1e-12);
        if (c.slot_errors == 0) CHECK(c.penalized_score == c.score);
    }
}

TEST_CASE("reranking is invariant to candidate input order") {
    DecodeFixture fx;
    DialogueAct da = act("inform(name=\"x\")");
    DecodeConfig config;
    config.beam = 30;
    config.seed = 11;
    std::vector<Candidate> cands = overgenerate(fx.params, fx.ctx(), da, config);
    std::vector<Candidate> shuffled = cands;
    Rng rng(13);
    rng.shuffle(shuffled);
    rerank(cands, nullptr, nullptr, fx.ctx(), da, config);
    rerank(shuffled, nullptr, nullptr, fx.ctx(), da, config);
    REQUIRE(cands.size() == shuffled.size());
    for (std::size_t i = 0; i < cands.size(); ++i)
        CHECK(cands[i].tokens == shuffled[i].tokens);
}

TEST_CASE("dangling placeholders add to the candidate's error count") {
    DecodeFixture fx;
    DialogueAct da = act("goodbye()");
    std::vector<Candidate> cands(1);
    cands[0].tokens = toks({"BOS", "SLOT_FOOD", "EOS"});
    cands[0].token_ids = fx.vocab.encode(cands[0].tokens);
    DecodeConfig config;
    rerank(cands, nullptr, nullptr, fx.ctx(), da, config);
    CHECK(cands[0].slot_errors == 2);  // one redundant placeholder, also unrenderable
    CHECK(cands[0].surface == "SLOT_FOOD");
}

TEST_CASE("top-1 selection is the argmax and top-n selection is seeded") {
    DecodeFixture fx;
    DialogueAct da = act("inform(name=\"x\")");
    DecodeConfig config;
    config.beam = 25;
    config.seed = 17;
    std::vector<Candidate> cands = overgenerate(fx.params, fx.ctx(), da, config);
    rerank(cands, nullptr, nullptr, fx.ctx(), da, config);

    Rng r1(1);
    DecodeResult top1 = select_output(cands, da, ont(), 1, r1);
    CHECK(top1.chosen == 0);
    CHECK(top1.surface == cands[0].surface);

    Rng r2(2), r3(2);
    DecodeResult a = select_output(cands, da, ont(), 5, r2);
    DecodeResult b = select_output(cands, da, ont(), 5, r3);
    CHECK(a.chosen == b.chosen);
    CHECK(a.chosen < std::min<std::size_t>(5, cands.size()));
}

TEST_CASE("the ranked report is tab separated with a header") {
    DecodeFixture fx;
    DialogueAct da = act("goodbye()");
    DecodeConfig config;
    config.beam = 3;
    config.seed = 23;
    DecodeResult result =
        generate_utterance(fx.params, nullptr, nullptr, fx.ctx(), da, config);
    std::string report = format_ranked_report(result);
    CHECK(report.rfind("rank\tr_star\tr\tcost_fRNN\tcost_bRNN\tcost_CNN\terr\tsurface\n", 0) == 0);
    CHECK(std::count(report.begin(), report.end(), '\n') ==
          static_cast<long>(result.ranked.size()) + 1);
}

}  // TEST_SUITE
