#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "nlgen/baselines.hpp"
#include "nlgen/evaluation.hpp"
#include "nlgen/model_io.hpp"
#include "nlgen/pipeline.hpp"

namespace {

using namespace nlgen;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitDivergence = 3;

std::uint64_t default_seed() {
    if (const char* env = std::getenv("NLGEN_SEED")) {
        return static_cast<std::uint64_t>(std::strtoull(env, nullptr, 10));
    }
    return 1;
}

Ontology load_ontology(const std::string& path) {
    return path.empty() ? Ontology::restaurant() : Ontology::from_json_file(path);
}

void print_train_log(const char* name, const TrainLog& log) {
    for (std::size_t e = 0; e < log.epochs.size(); ++e) {
        const EpochStats& s = log.epochs[e];
        std::printf("[%s] epoch %zu train %.6f valid %.6f lr %.6f\n", name, e + 1,
                    s.train_entropy, s.valid_entropy, s.learning_rate);
    }
    std::printf("[%s] best epoch %d valid %.6f%s\n", name, log.best_epoch + 1, log.best_valid,
                log.diverged ? " (diverged, best checkpoint kept)" : "");
}

int cmd_corpus(const std::string& templates_path, const std::string& ontology_path,
               std::size_t count, std::uint64_t seed, const std::string& out_path) {
    Ontology ont = load_ontology(ontology_path);
    TemplatePack pack = TemplatePack::load(templates_path, ont);
    std::vector<CorpusExample> corpus = pack.generate(count, seed);
    save_corpus(corpus, out_path);
    std::printf("wrote %zu examples to %s\n", corpus.size(), out_path.c_str());
    std::printf("distinct dialogue-act keys: %zu\n", count_distinct_keys(corpus, ont));
    return 0;
}

int cmd_train(const std::string& corpus_path, const std::string& config_path,
              const std::string& ontology_path, const std::string& embedding_path,
              std::uint64_t seed, const std::string& out_model) {
    Ontology ont = load_ontology(ontology_path);
    TrainConfig config = config_path.empty() ? TrainConfig{} : load_train_config(config_path);
    std::vector<CorpusExample> corpus = load_corpus(corpus_path);
    Dataset data = prepare_dataset(corpus, ont, seed);
    for (const std::string& w : data.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    std::printf("corpus %zu examples, vocabulary %zu tokens, train %zu (up-sampled), valid %zu, test %zu\n",
                corpus.size(), data.vocab.size(), data.train.size(), data.valid.size(),
                data.test.size());

    TrainedModel model = train_full(data, config, seed, true, true, embedding_path);
    print_train_log("forward", model.forward_log);
    print_train_log("backward", model.backward_log);
    print_train_log("cnn", model.cnn_log);
    save_model(model.bundle, out_model);
    std::printf("model written to %s\n", out_model.c_str());
    return model.diverged() ? kExitDivergence : 0;
}

int cmd_generate(const std::string& model_path, const std::string& da_text, int beam, int top_n,
                 double delta, bool delta_set, double lambda, std::uint64_t seed) {
    ModelBundle bundle = load_model(model_path);
    DialogueAct da = canonicalize_da(parse_da(da_text, bundle.ontology), bundle.ontology);
    GenContext ctx = GenContext::make(bundle.embeddings, bundle.vocab, bundle.ontology);
    DecodeConfig config;
    config.beam = beam;
    config.top_n = top_n;
    config.gate_decay = delta_set ? delta : bundle.config.gate_decay;
    config.slot_penalty = lambda;
    config.max_len = bundle.config.max_sample_len;
    config.seed = seed;
    DecodeResult result =
        generate_utterance(bundle.forward, &bundle.backward, &bundle.cnn, ctx, da, config);
    std::printf("%s\n", result.surface.c_str());
    std::fputs(format_ranked_report(result).c_str(), stdout);
    return 0;
}

struct SystemSpec {
    std::string name;
    int k = 3;
    int n = 5;
};

SystemSpec parse_system_spec(const std::string& spec) {
    SystemSpec out;
    std::size_t colon = spec.find(':');
    out.name = spec.substr(0, colon);
    std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
    while (!rest.empty()) {
        std::size_t next = rest.find(':');
        std::string part = rest.substr(0, next);
        if (part.rfind("k=", 0) == 0) out.k = std::atoi(part.c_str() + 2);
        else if (part.rfind("n=", 0) == 0) out.n = std::atoi(part.c_str() + 2);
        else throw DataError("bad system spec fragment '" + part + "'");
        rest = next == std::string::npos ? "" : rest.substr(next + 1);
    }
    return out;
}

int cmd_evaluate(const std::string& model_path, const std::string& corpus_path,
                 const std::string& config_path, const std::string& ontology_path,
                 const std::string& handcrafted_path, const std::string& systems_arg,
                 std::vector<std::uint64_t> seeds, std::uint64_t split_seed, int beam, int top_n,
                 double lambda, const std::string& out_json) {
    Ontology ont = load_ontology(ontology_path);
    std::vector<CorpusExample> corpus = load_corpus(corpus_path);
    Dataset data = prepare_dataset(corpus, ont, split_seed);
    References refs = build_references(data.all, data.test, ont);
    TrainConfig config = config_path.empty() ? TrainConfig{} : load_train_config(config_path);

    std::vector<PreparedExample> train_raw;  // un-up-sampled training portion
    train_raw.assign(data.all.begin(),
                     data.all.begin() + (data.all.size() - data.valid.size() - data.test.size()));

    std::shared_ptr<const ModelBundle> fixed_model;
    if (!model_path.empty())
        fixed_model = std::make_shared<const ModelBundle>(load_model(model_path));

    std::vector<std::string> specs;
    {
        std::string rest = systems_arg;
        while (!rest.empty()) {
            std::size_t comma = rest.find(',');
            specs.push_back(rest.substr(0, comma));
            rest = comma == std::string::npos ? "" : rest.substr(comma + 1);
        }
    }

    nlohmann::json summary = nlohmann::json::array();
    std::printf("system\tbleu\terr\thard_consistency\n");
    for (const std::string& raw_spec : specs) {
        SystemSpec spec = parse_system_spec(raw_spec);
        SystemFactory factory;
        std::string echo;
        if (spec.name == "rnn") {
            factory.name = "rnn";
            char buf[128];
            std::snprintf(buf, sizeof(buf), "beam=%d top_n=%d lambda=%g delta=%g", beam, top_n,
                          lambda, config.gate_decay);
            echo = buf;
            factory.make = [&, fixed_model](std::uint64_t seed) -> SystemFn {
                std::shared_ptr<const ModelBundle> bundle = fixed_model;
                if (!bundle) {
                    TrainedModel m = train_full(data, config, seed);
                    if (m.diverged()) throw DivergenceError("training diverged");
                    bundle = std::make_shared<const ModelBundle>(std::move(m.bundle));
                }
                DecodeConfig dc;
                dc.beam = beam;
                dc.top_n = top_n;
                dc.gate_decay = bundle->config.gate_decay;
                dc.slot_penalty = lambda;
                dc.max_len = bundle->config.max_sample_len;
                dc.seed = Rng::derive(seed, 0xdec0deull);
                return make_rnn_system(bundle, dc, true, true);
            };
        } else if (spec.name == "knn") {
            factory.name = "knn";
            auto store = std::make_shared<TemplateStore>(TemplateStore::build(train_raw, ont));
            factory.make = [store, &ont](std::uint64_t) -> SystemFn {
                return [store, &ont](const DialogueAct& da, std::size_t) {
                    return knn_generate(*store, da, ont);
                };
            };
        } else if (spec.name == "ngram") {
            char name[32];
            std::snprintf(name, sizeof(name), "ngram-%dslot-%dg", spec.k, spec.n);
            factory.name = name;
            auto lm = std::make_shared<NgramClassLm>(
                NgramClassLm::train(train_raw, spec.k, spec.n, ont));
            int b = beam, t = top_n;
            double l = lambda;
            factory.make = [lm, &ont, b, t, l](std::uint64_t seed) -> SystemFn {
                return [lm, &ont, b, t, l, seed](const DialogueAct& da, std::size_t index) {
                    DecodeConfig dc;
                    dc.beam = b;
                    dc.top_n = t;
                    dc.slot_penalty = l;
                    dc.seed = Rng::derive(Rng::derive(seed, 0x96a11ull), index);
                    return lm->generate(da, dc, ont);
                };
            };
        } else if (spec.name == "handcrafted") {
            factory.name = "handcrafted";
            auto gen = std::make_shared<HandcraftedGenerator>(
                HandcraftedGenerator::load(handcrafted_path, ont));
            factory.make = [gen, &ont](std::uint64_t) -> SystemFn {
                return [gen, &ont](const DialogueAct& da, std::size_t) {
                    return gen->generate(da, ont);
                };
            };
        } else {
            throw DataError("unknown system '" + spec.name + "'");
        }
        EvalReport report = evaluate_system(factory, data.test, refs, seeds, ont, echo);
        std::printf("%s\n", report.to_tsv_row().c_str());
        summary.push_back(nlohmann::json::parse(report.to_json_text()));
    }
    if (!out_json.empty()) {
        std::ofstream out(out_json);
        out << summary.dump(2) << '\n';
    }
    return 0;
}

int cmd_ablate(const std::string& grid_path, const std::string& ontology_path,
               const std::string& out_prefix) {
    std::ifstream in(grid_path);
    if (!in) throw DataError("cannot open grid file: " + grid_path);
    nlohmann::json grid;
    in >> grid;

    Ontology ont = load_ontology(ontology_path);
    std::vector<CorpusExample> corpus = load_corpus(grid.at("corpus").get<std::string>());

    AblationConfig config;
    if (grid.contains("deltas")) config.deltas = grid["deltas"].get<std::vector<double>>();
    if (grid.contains("fractions"))
        config.fractions = grid["fractions"].get<std::vector<double>>();
    if (grid.contains("top_ns")) config.top_ns = grid["top_ns"].get<std::vector<int>>();
    if (grid.contains("seeds"))
        config.seeds = grid["seeds"].get<std::vector<std::uint64_t>>();
    config.split_seed = grid.value("split_seed", config.split_seed);
    config.gate_beam = grid.value("gate_beam", config.gate_beam);
    config.full_beam = grid.value("full_beam", config.full_beam);
    config.cnn_stage = grid.value("cnn_stage", true);
    config.backward_stage = grid.value("backward_stage", true);
    if (grid.contains("train"))
        config.train = train_config_from_json_text(grid["train"].dump());

    AblationReport report = run_ablation(corpus, ont, config);
    std::fputs(report.to_tsv().c_str(), stdout);
    if (!out_prefix.empty()) {
        std::ofstream(out_prefix + ".tsv") << report.to_tsv();
        std::ofstream(out_prefix + ".csv") << report.to_csv_series();
        std::ofstream(out_prefix + ".json") << report.to_json_text() << '\n';
        std::printf("wrote %s.tsv / .csv / .json\n", out_prefix.c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dialogue-act to utterance generator"};
    app.require_subcommand(1);

    // corpus
    auto* corpus = app.add_subcommand("corpus", "generate a synthetic corpus");
    std::string c_templates, c_ont, c_out;
    std::size_t c_count = 2000;
    std::uint64_t c_seed = default_seed();
    corpus->add_option("--templates", c_templates, "template pack JSON")->required();
    corpus->add_option("--ontology", c_ont, "ontology JSON (defaults to restaurant domain)");
    corpus->add_option("--count", c_count, "number of examples");
    corpus->add_option("--seed", c_seed, "rng seed");
    corpus->add_option("--out", c_out, "output corpus (jsonl)")->required();

    // train
    auto* train = app.add_subcommand("train", "train the generator and rerankers");
    std::string t_corpus, t_config, t_ont, t_emb, t_out;
    std::uint64_t t_seed = default_seed();
    train->add_option("--corpus", t_corpus, "corpus jsonl")->required();
    train->add_option("--config", t_config, "training config JSON");
    train->add_option("--ontology", t_ont, "ontology JSON");
    train->add_option("--embeddings", t_emb, "optional embedding init file");
    train->add_option("--seed", t_seed, "rng seed (also drives the split)");
    train->add_option("--out-model", t_out, "output model file")->required();

    // generate
    auto* gen = app.add_subcommand("generate", "generate an utterance for a dialogue act");
    std::string g_model, g_da;
    int g_beam = 100, g_topn = 1;
    double g_delta = 0.0, g_lambda = 100.0;
    std::uint64_t g_seed = default_seed();
    bool g_delta_set = false;
    gen->add_option("--model", g_model, "trained model file")->required();
    gen->add_option("--da", g_da, "dialogue act, e.g. 'inform(name=\"x\",food=\"thai\")'")
        ->required();
    gen->add_option("--beam", g_beam, "over-generation beam");
    gen->add_option("--top-n", g_topn, "sample the output among the top n");
    gen->add_option("--delta", g_delta, "gate decay (defaults to the trained value)")
        ->each([&](const std::string&) { g_delta_set = true; });
    gen->add_option("--lambda", g_lambda, "slot error penalty");
    gen->add_option("--seed", g_seed, "rng seed");

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "compare systems on a corpus");
    std::string e_model, e_corpus, e_config, e_ont, e_handcrafted, e_systems = "rnn,knn";
    std::string e_out_json;
    std::vector<std::uint64_t> e_seeds = {1, 2, 3};
    std::uint64_t e_split_seed = 1;
    int e_beam = 100, e_topn = 1;
    double e_lambda = 100.0;
    eval->add_option("--model", e_model, "fixed model (otherwise trains per seed)");
    eval->add_option("--corpus", e_corpus, "corpus jsonl")->required();
    eval->add_option("--config", e_config, "training config JSON");
    eval->add_option("--ontology", e_ont, "ontology JSON");
    eval->add_option("--handcrafted", e_handcrafted, "handcrafted template JSON");
    eval->add_option("--systems", e_systems, "comma list: rnn,knn,ngram:k=3:n=5,handcrafted");
    eval->add_option("--seeds", e_seeds, "seed list");
    eval->add_option("--split-seed", e_split_seed, "corpus split seed");
    eval->add_option("--beam", e_beam, "over-generation beam");
    eval->add_option("--top-n", e_topn, "output selection pool");
    eval->add_option("--lambda", e_lambda, "slot error penalty");
    eval->add_option("--out-json", e_out_json, "write the JSON summary here");

    // ablate
    auto* ablate = app.add_subcommand("ablate", "run the staged component analysis");
    std::string a_grid, a_ont, a_prefix;
    ablate->add_option("--grid", a_grid, "grid JSON file")->required();
    ablate->add_option("--ontology", a_ont, "ontology JSON");
    ablate->add_option("--out-prefix", a_prefix, "write tsv/csv/json with this prefix");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (corpus->parsed())
            return cmd_corpus(c_templates, c_ont, c_count, c_seed, c_out);
        if (train->parsed()) return cmd_train(t_corpus, t_config, t_ont, t_emb, t_seed, t_out);
        if (gen->parsed())
            return cmd_generate(g_model, g_da, g_beam, g_topn, g_delta, g_delta_set, g_lambda,
                                g_seed);
        if (eval->parsed())
            return cmd_evaluate(e_model, e_corpus, e_config, e_ont, e_handcrafted, e_systems,
                                e_seeds, e_split_seed, e_beam, e_topn, e_lambda, e_out_json);
        if (ablate->parsed()) return cmd_ablate(a_grid, a_ont, a_prefix);
    } catch (const ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    } catch (const DivergenceError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitDivergence;
    } catch (const DataError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    }
    return kExitUsage;
}
