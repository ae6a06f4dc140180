#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "nlgen/corpus.hpp"
#include "nlgen/decoder.hpp"
#include "nlgen/model_io.hpp"

namespace nlgen {

/// A corpus split, prepared end to end: parsed acts, control vectors,
/// delexicalised token sequences and a vocabulary built over the whole
/// corpus so every split scores without unknown tokens.
struct Dataset {
    Ontology ont = Ontology::restaurant();
    std::vector<PreparedExample> all;    // un-up-sampled train + valid + test
    std::vector<PreparedExample> train;  // up-sampled
    std::vector<PreparedExample> valid;
    std::vector<PreparedExample> test;
    Vocabulary vocab;
    std::vector<std::string> warnings;
};

Dataset prepare_dataset(std::span<const CorpusExample> corpus, const Ontology& ont,
                        std::uint64_t split_seed);
Dataset prepare_dataset_from_split(const CorpusSplit& split, const Ontology& ont);

/// Keeps the leading `fraction` of the (already shuffled) training split and
/// re-up-samples it; validation and test stay unchanged.
CorpusSplit subset_train(const CorpusSplit& split, double fraction, const Ontology& ont);

struct TrainedModel {
    ModelBundle bundle;
    TrainLog forward_log;
    TrainLog backward_log;
    TrainLog cnn_log;

    bool diverged() const {
        return forward_log.diverged || backward_log.diverged || cnn_log.diverged;
    }
};

/// Trains the forward RNN, the backward RNN and the CNN in sequence on one
/// shared embedding table. `with_backward` / `with_cnn` skip the optional
/// rerankers (their randomly initialised weights stay in the bundle).
TrainedModel train_full(const Dataset& data, const TrainConfig& config, std::uint64_t seed,
                        bool with_backward = true, bool with_cnn = true,
                        const std::string& embedding_file = {});

/// A generation system under evaluation: maps a test act (with its position,
/// used to derive a per-act rng stream) to an utterance.
using SystemFn = std::function<GeneratedUtterance(const DialogueAct& da, std::size_t index)>;

SystemFn make_rnn_system(std::shared_ptr<const ModelBundle> bundle, const DecodeConfig& config,
                         bool use_cnn, bool use_backward);

std::vector<RnnExample> to_rnn_examples(std::span<const PreparedExample> prepared);
std::vector<CnnExample> to_cnn_examples(std::span<const PreparedExample> prepared);

}  // namespace nlgen
