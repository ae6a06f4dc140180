#include "nlgen/pipeline.hpp"

#include <algorithm>

namespace nlgen {

namespace {

std::vector<PreparedExample> prepare_all(std::span<const CorpusExample> examples,
                                         const Ontology& ont,
                                         std::vector<std::string>* warnings) {
    std::vector<PreparedExample> out;
    out.reserve(examples.size());
    for (const CorpusExample& ex : examples) out.push_back(prepare_example(ex, ont, warnings));
    return out;
}

void encode_ids(std::vector<PreparedExample>& examples, const Vocabulary& vocab) {
    for (PreparedExample& ex : examples) ex.token_ids = vocab.encode(ex.delex.tokens);
}

}  // namespace

Dataset prepare_dataset_from_split(const CorpusSplit& split, const Ontology& ont) {
    Dataset data;
    data.ont = ont;
    data.train = prepare_all(split.train_upsampled, ont, &data.warnings);
    data.valid = prepare_all(split.valid, ont, &data.warnings);
    data.test = prepare_all(split.test, ont, &data.warnings);

    data.all = prepare_all(split.train, ont, nullptr);
    data.all.insert(data.all.end(), data.valid.begin(), data.valid.end());
    data.all.insert(data.all.end(), data.test.begin(), data.test.end());

    std::vector<DelexUtterance> delex;
    delex.reserve(data.all.size());
    for (const PreparedExample& ex : data.all) delex.push_back(ex.delex);
    data.vocab = Vocabulary::build(delex, data.ont);

    encode_ids(data.train, data.vocab);
    encode_ids(data.valid, data.vocab);
    encode_ids(data.test, data.vocab);
    encode_ids(data.all, data.vocab);
    return data;
}

Dataset prepare_dataset(std::span<const CorpusExample> corpus, const Ontology& ont,
                        std::uint64_t split_seed) {
    return prepare_dataset_from_split(prepare_splits(corpus, split_seed, ont), ont);
}

CorpusSplit subset_train(const CorpusSplit& split, double fraction, const Ontology& ont) {
    CorpusSplit out = split;
    std::size_t keep = static_cast<std::size_t>(fraction * static_cast<double>(split.train.size()));
    keep = std::clamp<std::size_t>(keep, 1, split.train.size());
    out.train.assign(split.train.begin(), split.train.begin() + keep);
    out.train_upsampled = upsample_by_act(out.train, ont);
    return out;
}

std::vector<RnnExample> to_rnn_examples(std::span<const PreparedExample> prepared) {
    std::vector<RnnExample> out;
    out.reserve(prepared.size());
    for (const PreparedExample& ex : prepared) out.push_back({ex.token_ids, ex.control});
    return out;
}

std::vector<CnnExample> to_cnn_examples(std::span<const PreparedExample> prepared) {
    std::vector<CnnExample> out;
    out.reserve(prepared.size());
    for (const PreparedExample& ex : prepared) out.push_back({ex.token_ids, ex.control});
    return out;
}

TrainedModel train_full(const Dataset& data, const TrainConfig& config, std::uint64_t seed,
                        bool with_backward, bool with_cnn,
                        const std::string& embedding_file) {
    TrainedModel model;
    ModelBundle& bundle = model.bundle;
    bundle.ontology = data.ont;
    bundle.vocab = data.vocab;
    bundle.config = config;

    std::size_t vocab = data.vocab.size();
    std::size_t features = data.ont.feature_dim();

    Rng emb_rng(Rng::derive(seed, 0));
    bundle.embeddings = Matrix(vocab, config.embed_dim);
    init_uniform(bundle.embeddings, 0.1, emb_rng);
    if (!embedding_file.empty()) load_embedding_file(embedding_file, data.vocab, bundle.embeddings);

    Rng fwd_rng(Rng::derive(seed, 1));
    bundle.forward =
        RnnParams::init(config.hidden_dim, config.embed_dim, features, vocab, false, fwd_rng);
    Rng bwd_rng(Rng::derive(seed, 2));
    bundle.backward =
        RnnParams::init(config.hidden_dim, config.embed_dim, features, vocab, true, bwd_rng);
    Rng cnn_rng(Rng::derive(seed, 3));
    bundle.cnn = CnnParams::init(config, config.embed_dim, data.ont.act_count(),
                                 features - data.ont.act_count(), cnn_rng);

    std::vector<RnnExample> train_rnn_set = to_rnn_examples(data.train);
    std::vector<RnnExample> valid_rnn_set = to_rnn_examples(data.valid);

    Rng fwd_train(Rng::derive(seed, 4));
    model.forward_log = train_rnn(bundle.forward, bundle.embeddings, bundle.vocab, bundle.ontology,
                                  train_rnn_set, valid_rnn_set, config, fwd_train);
    if (with_backward) {
        Rng bwd_train(Rng::derive(seed, 5));
        model.backward_log =
            train_rnn(bundle.backward, bundle.embeddings, bundle.vocab, bundle.ontology,
                      train_rnn_set, valid_rnn_set, config, bwd_train);
    }
    if (with_cnn) {
        std::vector<CnnExample> train_cnn_set = to_cnn_examples(data.train);
        std::vector<CnnExample> valid_cnn_set = to_cnn_examples(data.valid);
        Rng cnn_train(Rng::derive(seed, 6));
        model.cnn_log = train_cnn(bundle.cnn, bundle.embeddings, bundle.ontology, train_cnn_set,
                                  valid_cnn_set, config, cnn_train);
    }
    return model;
}

SystemFn make_rnn_system(std::shared_ptr<const ModelBundle> bundle, const DecodeConfig& config,
                         bool use_cnn, bool use_backward) {
    return [bundle, config, use_cnn, use_backward](const DialogueAct& da,
                                                   std::size_t index) -> GeneratedUtterance {
        const ModelBundle& b = *bundle;
        GenContext ctx = GenContext::make(b.embeddings, b.vocab, b.ontology);
        DecodeConfig per_act = config;
        per_act.seed = Rng::derive(config.seed, index);
        DialogueAct canon = canonicalize_da(da, b.ontology);
        DecodeResult result =
            generate_utterance(b.forward, use_backward ? &b.backward : nullptr,
                               use_cnn ? &b.cnn : nullptr, ctx, canon, per_act);
        GeneratedUtterance out;
        if (!result.ranked.empty()) {
            out.delex_tokens = result.ranked[result.chosen].tokens;
            out.surface_tokens = tokenize(result.surface);
        }
        return out;
    };
}

}  // namespace nlgen
