#include <set>

#include "doctest.h"
#include "nlgen/ontology.hpp"
#include "nlgen/rng.hpp"

using namespace nlgen;

namespace {

const Ontology& ont() {
    static Ontology o = Ontology::restaurant();
    return o;
}

int nonzeros(const ControlVector& cv) {
    int n = 0;
    for (double v : cv.values) n += v != 0.0;
    return n;
}

/// Random canonical act for property tests.
DialogueAct random_act(Rng& rng) {
    DialogueAct da;
    da.act_type = static_cast<int>(rng.below(ont().act_count()));
    std::size_t n_pairs = rng.below(4);
    for (std::size_t i = 0; i < n_pairs; ++i) {
        int slot = static_cast<int>(rng.below(ont().slot_count()));
        SlotValue v;
        if (ont().slot_binary(slot)) {
            v = rng.below(2) ? SlotValue::yes() : SlotValue::no();
        } else {
            switch (rng.below(3)) {
                case 0: v = SlotValue::categorical("v" + std::to_string(rng.below(5))); break;
                case 1: v = SlotValue::dont_care(); break;
                default: v = SlotValue::unvalued(); break;
            }
        }
        da.pairs.push_back({slot, std::move(v)});
    }
    return canonicalize_da(std::move(da), ont());
}

}  // namespace

TEST_SUITE("ontology") {

TEST_CASE("the restaurant domain has the fixed shape") {
    CHECK(ont().act_count() == 8);
    CHECK(ont().slot_count() == 12);
    CHECK(ont().feature_dim() == 56);
    CHECK(ont().slot_binary(ont().slot_index("kidsallowed")));
    int delex = 0;
    for (std::size_t s = 0; s < ont().slot_count(); ++s)
        delex += ont().slot_delexicalisable(static_cast<int>(s));
    CHECK(delex == 11);
}

TEST_CASE("parses an act without pairs") {
    DialogueAct da = parse_da("goodbye()", ont());
    CHECK(da.act_type == ont().act_index("goodbye"));
    CHECK(da.pairs.empty());
}

TEST_CASE("parses quoted and bareword values") {
    DialogueAct da = parse_da(
        "inform(name=\"stroganoff restaurant\",pricerange=cheap,near=\"fishermans wharf\")",
        ont());
    CHECK(da.act_type == ont().act_index("inform"));
    REQUIRE(da.pairs.size() == 3);
    CHECK(da.pairs[0].slot == ont().slot_index("name"));
    CHECK(da.pairs[0].value == SlotValue::categorical("stroganoff restaurant"));
    CHECK(da.pairs[1].slot == ont().slot_index("pricerange"));
    CHECK(da.pairs[1].value == SlotValue::categorical("cheap"));
    CHECK(da.pairs[2].slot == ont().slot_index("near"));
    CHECK(da.pairs[2].value == SlotValue::categorical("fishermans wharf"));
}

TEST_CASE("parses binary slot values in written order") {
    DialogueAct da = parse_da("select(kidsallowed=yes, kidsallowed=no)", ont());
    REQUIRE(da.pairs.size() == 2);
    CHECK(da.pairs[0].value.kind == ValueKind::yes);
    CHECK(da.pairs[1].value.kind == ValueKind::no);
}

TEST_CASE("parses dontcare and unvalued pairs") {
    CHECK(parse_da("confirm(goodformeal=dontcare)", ont()).pairs[0].value.kind ==
          ValueKind::dont_care);
    CHECK(parse_da("request(near)", ont()).pairs[0].value.kind == ValueKind::unvalued);
    CHECK(parse_da("inform(kidsallowed=true)", ont()).pairs[0].value.kind == ValueKind::yes);
}

TEST_CASE("rejects malformed input with positions") {
    CHECK_THROWS_AS(parse_da("shout()", ont()), ParseError);
    CHECK_THROWS_AS(parse_da("inform(color=red)", ont()), ParseError);
    CHECK_THROWS_AS(parse_da("inform(name=\"x\"", ont()), ParseError);
    CHECK_THROWS_AS(parse_da("inform(name=\"x\") extra", ont()), ParseError);
    CHECK_THROWS_AS(parse_da("inform(name=)", ont()), ParseError);
    CHECK_THROWS_AS(parse_da("inform(kidsallowed=maybe)", ont()), ParseError);
    try {
        parse_da("inform(color=red)", ont());
    } catch (const ParseError& e) {
        CHECK(e.position() == 7);
    }
}

TEST_CASE("canonicalization collapses duplicate slot categories") {
    DialogueAct da = canonicalize_da(parse_da("inform(food=\"thai\",food=\"thai\")", ont()), ont());
    REQUIRE(da.pairs.size() == 1);
    CHECK(da.pairs[0].value == SlotValue::categorical("thai"));
}

TEST_CASE("canonicalization keeps distinct categories of one slot") {
    DialogueAct da =
        canonicalize_da(parse_da("select(kidsallowed=yes, kidsallowed=no)", ont()), ont());
    REQUIRE(da.pairs.size() == 2);
    CHECK(da.pairs[0].value.kind == ValueKind::yes);
    CHECK(da.pairs[1].value.kind == ValueKind::no);
}

TEST_CASE("canonicalization orders pairs by slot") {
    DialogueAct da =
        canonicalize_da(parse_da("inform(pricerange=cheap, name=\"x\")", ont()), ont());
    REQUIRE(da.pairs.size() == 2);
    CHECK(da.pairs[0].slot == ont().slot_index("name"));
    CHECK(da.pairs[1].slot == ont().slot_index("pricerange"));
}

TEST_CASE("encoding an act without pairs sets only the act bit") {
    ControlVector cv = encode_control(parse_da("goodbye()", ont()), ont());
    CHECK(nonzeros(cv) == 1);
    CHECK(cv.values[ont().act_index("goodbye")] == 1.0);
}

TEST_CASE("encoding sets one category bit per pair") {
    ControlVector cv = encode_control(parse_da("confirm(goodformeal=dontcare)", ont()), ont());
    CHECK(nonzeros(cv) == 2);
    int slot = ont().slot_index("goodformeal");
    CHECK(cv.values[ont().slot_block_offset(slot) +
                    static_cast<int>(SlotCategory::dont_care)] == 1.0);

    ControlVector sel = encode_control(
        canonicalize_da(parse_da("select(kidsallowed=yes,kidsallowed=no)", ont()), ont()), ont());
    CHECK(nonzeros(sel) == 3);
    int kids = ont().slot_index("kidsallowed");
    CHECK(sel.values[ont().act_index("select")] == 1.0);
    CHECK(sel.values[ont().slot_block_offset(kids) + static_cast<int>(SlotCategory::yes)] == 1.0);
    CHECK(sel.values[ont().slot_block_offset(kids) + static_cast<int>(SlotCategory::no)] == 1.0);
}

TEST_CASE("unvalued pairs share the value bit") {
    ControlVector cv = encode_control(parse_da("request(near)", ont()), ont());
    int slot = ont().slot_index("near");
    CHECK(cv.values[ont().slot_block_offset(slot) + static_cast<int>(SlotCategory::value)] == 1.0);
}

TEST_CASE("control vectors have L0 norm one plus distinct pairs") {
    Rng rng(23);
    for (int it = 0; it < 300; ++it) {
        DialogueAct da = random_act(rng);
        ControlVector cv = encode_control(da, ont());
        CHECK(nonzeros(cv) == 1 + static_cast<int>(da.pairs.size()));
    }
}

TEST_CASE("render and parse are inverse on canonical acts") {
    Rng rng(29);
    for (int it = 0; it < 300; ++it) {
        DialogueAct da = random_act(rng);
        DialogueAct back = canonicalize_da(parse_da(render_da(da, ont()), ont()), ont());
        CHECK(back == da);
    }
}

TEST_CASE("distinct canonical acts encode to distinct vectors") {
    Rng rng(31);
    std::set<std::string> keys;
    std::set<Vector> vectors;
    for (int it = 0; it < 400; ++it) {
        DialogueAct da = random_act(rng);
        keys.insert(da_key(da, ont()));
        vectors.insert(encode_control(da, ont()).values);
    }
    CHECK(keys.size() == vectors.size());
}

TEST_CASE("ontology configuration round trips through json") {
    Ontology loaded = Ontology::from_json_text(ont().to_json_text());
    CHECK(loaded == ont());
    CHECK_THROWS_AS(Ontology::from_json_text("{\"act_types\":[],\"slots\":[]}"), DataError);
}

TEST_CASE("hard acts are those with dontcare or binary pairs") {
    CHECK(is_hard_act(parse_da("confirm(goodformeal=dontcare)", ont())));
    CHECK(is_hard_act(parse_da("reject(kidsallowed=yes,food=\"basque\")", ont())));
    CHECK_FALSE(is_hard_act(parse_da("inform(name=\"x\",food=\"thai\")", ont())));
    CHECK_FALSE(is_hard_act(parse_da("request(near)", ont())));
}

}  // TEST_SUITE
