#pragma once

#include <string>

#include "nlgen/cnn.hpp"
#include "nlgen/delex.hpp"
#include "nlgen/generator.hpp"
#include "nlgen/neural.hpp"
#include "nlgen/ontology.hpp"

namespace nlgen {

/// Everything needed to decode: the ontology, the vocabulary, the shared
/// embedding table, both RNNs, the CNN and the training configuration echo.
struct ModelBundle {
    static constexpr int kFormatVersion = 1;

    Ontology ontology = Ontology::restaurant();
    Vocabulary vocab;
    Matrix embeddings;
    RnnParams forward;
    RnnParams backward;
    CnnParams cnn;
    TrainConfig config;
};

/// Single JSON document with base64-encoded little-endian float64 arrays and
/// a checksum over the payload; refuses unknown versions and corrupt files.
/// Round trips are bit-exact. Writes go through a temp file + rename.
void save_model(const ModelBundle& bundle, const std::string& path);
ModelBundle load_model(const std::string& path);

std::string model_to_json_text(const ModelBundle& bundle);
ModelBundle model_from_json_text(const std::string& text);

std::string train_config_to_json_text(const TrainConfig& config);
TrainConfig train_config_from_json_text(const std::string& text);
TrainConfig load_train_config(const std::string& path);

/// Optional external word-vector initialisation: JSON {"dim": h,
/// "embeddings": {token: [h floats]}}. Tokens present in the vocabulary get
/// their rows overwritten; everything else keeps its random initialisation.
/// Returns the number of rows loaded.
std::size_t load_embedding_file(const std::string& path, const Vocabulary& vocab,
                                Matrix& embeddings);

}  // namespace nlgen
