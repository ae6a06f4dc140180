#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "nlgen/corpus.hpp"
#include "nlgen/decoder.hpp"

using namespace nlgen;

namespace {

const Ontology& ont() {
    static Ontology o = Ontology::restaurant();
    return o;
}

const TemplatePack& pack() {
    static TemplatePack p =
        TemplatePack::load(std::string(NLGEN_DATA_DIR) + "/restaurant_templates.json", ont());
    return p;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("sampling one example is reproducible") {
    std::vector<CorpusExample> a = pack().generate(1, 11);
    std::vector<CorpusExample> b = pack().generate(1, 11);
    REQUIRE(a.size() == 1);
    CHECK(a[0] == b[0]);
    CHECK_NOTHROW(parse_da(a[0].da_string, ont()));
    CHECK_FALSE(a[0].text.empty());
}

TEST_CASE("a large sample covers every act type with many distinct keys") {
    std::vector<CorpusExample> corpus = pack().generate(2000, 7);
    std::set<int> acts;
    for (const CorpusExample& ex : corpus) acts.insert(parse_da(ex.da_string, ont()).act_type);
    CHECK(acts.size() == ont().act_count());
    std::size_t keys = count_distinct_keys(corpus, ont());
    CHECK(keys >= 100);
    CHECK(keys <= 800);
}

TEST_CASE("every emitted pair delexicalises cleanly against its own act") {
    std::vector<CorpusExample> corpus = pack().generate(300, 13);
    for (const CorpusExample& ex : corpus) {
        std::vector<std::string> warnings;
        PreparedExample p = prepare_example(ex, ont(), &warnings);
        CHECK(warnings.empty());
        CHECK(slot_error(p.delex.tokens, p.da, ont()) == 0);
        CHECK(relexicalize(p.delex, p.da, ont()) == ex.text);
    }
}

TEST_CASE("the pack rejects openers that use slots outside the signature") {
    std::string bad = R"({
      "values": {"food": ["thai"]},
      "acts": [{"act": "inform", "entries": [
        {"openers": ["SLOT_FOOD is here"], "required": [{"slot": "name", "cat": "value"}]}
      ]}],
      "fragments": {}
    })";
    CHECK_THROWS_AS(TemplatePack::from_json_text(bad, ont()), DataError);
}

TEST_CASE("the pack rejects optional slots without fragments") {
    std::string bad = R"({
      "values": {"food": ["thai"]},
      "acts": [{"act": "inform", "entries": [
        {"openers": ["hello"], "optional": {"min": 1, "max": 1,
         "pool": [{"slot": "food", "cat": "value"}]}}
      ]}],
      "fragments": {}
    })";
    CHECK_THROWS_AS(TemplatePack::from_json_text(bad, ont()), DataError);
}

TEST_CASE("five examples split three to one to one") {
    std::vector<CorpusExample> corpus = pack().generate(5, 3);
    CorpusSplit split = prepare_splits(corpus, 1, ont());
    CHECK(split.train.size() == 3);
    CHECK(split.valid.size() == 1);
    CHECK(split.test.size() == 1);
    CHECK_THROWS_AS(prepare_splits(std::vector<CorpusExample>(2), 1, ont()), DataError);
}

TEST_CASE("splits partition the corpus") {
    std::vector<CorpusExample> corpus = pack().generate(200, 17);
    CorpusSplit split = prepare_splits(corpus, 5, ont());
    CHECK(split.train.size() + split.valid.size() + split.test.size() == corpus.size());

    auto key = [](const CorpusExample& e) { return e.da_string + "\x1f" + e.text; };
    std::multiset<std::string> original, reassembled;
    for (const CorpusExample& e : corpus) original.insert(key(e));
    for (const CorpusExample& e : split.train) reassembled.insert(key(e));
    for (const CorpusExample& e : split.valid) reassembled.insert(key(e));
    for (const CorpusExample& e : split.test) reassembled.insert(key(e));
    CHECK(original == reassembled);
}

TEST_CASE("up-sampling balances act types with a replication cap") {
    std::vector<CorpusExample> train;
    for (int i = 0; i < 100; ++i)
        train.push_back({"inform(name=\"n" + std::to_string(i) + "\")", "x ."});
    for (int i = 0; i < 10; ++i) train.push_back({"goodbye()", "bye ."});
    std::vector<CorpusExample> up = upsample_by_act(train, ont());
    int inform = 0, goodbye = 0;
    for (const CorpusExample& e : up) {
        int act = parse_da(e.da_string, ont()).act_type;
        inform += act == ont().act_index("inform");
        goodbye += act == ont().act_index("goodbye");
    }
    CHECK(inform == 100);
    CHECK(goodbye == 100);  // 10 originals replicated to the cap

    std::vector<CorpusExample> skewed;
    for (int i = 0; i < 300; ++i)
        skewed.push_back({"inform(name=\"n" + std::to_string(i) + "\")", "x ."});
    skewed.push_back({"goodbye()", "bye ."});
    std::vector<CorpusExample> capped = upsample_by_act(skewed, ont());
    int caps = 0;
    for (const CorpusExample& e : capped)
        caps += parse_da(e.da_string, ont()).act_type == ont().act_index("goodbye");
    CHECK(caps == 10);  // cap of 10x kicks in before reaching 300
}

TEST_CASE("validation and test portions are never up-sampled") {
    std::vector<CorpusExample> corpus = pack().generate(100, 19);
    CorpusSplit split = prepare_splits(corpus, 7, ont());
    CHECK(split.valid.size() == 20);
    CHECK(split.test.size() == 20);
    CHECK(split.train_upsampled.size() >= split.train.size());
}

TEST_CASE("corpus files are stable and round trip") {
    std::vector<CorpusExample> corpus = pack().generate(50, 23);
    std::string path1 = "/tmp/nlgen_corpus_a.jsonl";
    std::string path2 = "/tmp/nlgen_corpus_b.jsonl";
    save_corpus(corpus, path1);
    save_corpus(corpus, path2);
    CHECK(slurp(path1) == slurp(path2));
    CHECK(load_corpus(path1) == corpus);

    std::vector<CorpusExample> again = pack().generate(50, 23);
    CHECK(again == corpus);
}

TEST_CASE("bad corpus lines carry their location") {
    std::string path = "/tmp/nlgen_corpus_bad.jsonl";
    std::ofstream(path) << "{\"da\": \"goodbye()\", \"text\": \"bye\"}\nnot json\n";
    CHECK_THROWS_AS(load_corpus(path), DataError);
}

}  // TEST_SUITE
