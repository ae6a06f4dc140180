#include "nlgen/model_io.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace nlgen {

namespace {

using nlohmann::json;

constexpr char kB64Chars[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string b64_encode(const double* values, std::size_t count) {
    // Little-endian float64 bytes, standard base64.
    std::string bytes(count * sizeof(double), '\0');
    std::memcpy(bytes.data(), values, bytes.size());
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    while (i + 3 <= bytes.size()) {
        unsigned v = (static_cast<unsigned char>(bytes[i]) << 16) |
                     (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                     static_cast<unsigned char>(bytes[i + 2]);
        out += kB64Chars[(v >> 18) & 63];
        out += kB64Chars[(v >> 12) & 63];
        out += kB64Chars[(v >> 6) & 63];
        out += kB64Chars[v & 63];
        i += 3;
    }
    std::size_t rem = bytes.size() - i;
    if (rem == 1) {
        unsigned v = static_cast<unsigned char>(bytes[i]) << 16;
        out += kB64Chars[(v >> 18) & 63];
        out += kB64Chars[(v >> 12) & 63];
        out += "==";
    } else if (rem == 2) {
        unsigned v = (static_cast<unsigned char>(bytes[i]) << 16) |
                     (static_cast<unsigned char>(bytes[i + 1]) << 8);
        out += kB64Chars[(v >> 18) & 63];
        out += kB64Chars[(v >> 12) & 63];
        out += kB64Chars[(v >> 6) & 63];
        out += '=';
    }
    return out;
}

int b64_value(char c) {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
}

std::vector<double> b64_decode(const std::string& text) {
    std::string bytes;
    bytes.reserve(text.size() / 4 * 3);
    int acc = 0;
    int bits = 0;
    for (char c : text) {
        if (c == '=') break;
        int v = b64_value(c);
        if (v < 0) throw DataError("invalid base64 payload");
        acc = (acc << 6) | v;
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            bytes += static_cast<char>((acc >> bits) & 0xff);
        }
    }
    if (bytes.size() % sizeof(double) != 0) throw DataError("truncated float64 payload");
    std::vector<double> out(bytes.size() / sizeof(double));
    std::memcpy(out.data(), bytes.data(), bytes.size());
    return out;
}

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001b3ull;
    }
    return hash;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

json matrix_to_json(const Matrix& m) {
    return {{"rows", m.rows}, {"cols", m.cols}, {"data", b64_encode(m.data.data(), m.data.size())}};
}

Matrix matrix_from_json(const json& j) {
    Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    std::vector<double> data = b64_decode(j.at("data").get<std::string>());
    if (data.size() != m.rows * m.cols) throw DataError("matrix shape mismatch in model file");
    m.data = std::move(data);
    return m;
}

json vector_to_json(const Vector& v) {
    return {{"size", v.size()}, {"data", b64_encode(v.data(), v.size())}};
}

Vector vector_from_json(const json& j) {
    Vector v = b64_decode(j.at("data").get<std::string>());
    if (v.size() != j.at("size").get<std::size_t>())
        throw DataError("vector size mismatch in model file");
    return v;
}

json rnn_to_json(const RnnParams& p) {
    return {{"w_in", matrix_to_json(p.w_in)},
            {"w_feat", matrix_to_json(p.w_feat)},
            {"w_rec", matrix_to_json(p.w_rec)},
            {"w_out", matrix_to_json(p.w_out)},
            {"backward", p.backward}};
}

RnnParams rnn_from_json(const json& j) {
    RnnParams p;
    p.w_in = matrix_from_json(j.at("w_in"));
    p.w_feat = matrix_from_json(j.at("w_feat"));
    p.w_rec = matrix_from_json(j.at("w_rec"));
    p.w_out = matrix_from_json(j.at("w_out"));
    p.backward = j.at("backward").get<bool>();
    return p;
}

json cnn_to_json(const CnnParams& p) {
    json filters = json::array();
    for (const Vector& f : p.filters) filters.push_back(vector_to_json(f));
    return {{"filters", filters},
            {"w_hidden", matrix_to_json(p.w_hidden)},
            {"b_hidden", vector_to_json(p.b_hidden)},
            {"w_act", matrix_to_json(p.w_act)},
            {"b_act", vector_to_json(p.b_act)},
            {"w_slot", matrix_to_json(p.w_slot)},
            {"b_slot", vector_to_json(p.b_slot)}};
}

CnnParams cnn_from_json(const json& j) {
    CnnParams p;
    for (const json& jf : j.at("filters")) p.filters.push_back(vector_from_json(jf));
    p.w_hidden = matrix_from_json(j.at("w_hidden"));
    p.b_hidden = vector_from_json(j.at("b_hidden"));
    p.w_act = matrix_from_json(j.at("w_act"));
    p.b_act = vector_from_json(j.at("b_act"));
    p.w_slot = matrix_from_json(j.at("w_slot"));
    p.b_slot = vector_from_json(j.at("b_slot"));
    return p;
}

json config_to_json(const TrainConfig& c) {
    return {{"embed_dim", c.embed_dim},
            {"hidden_dim", c.hidden_dim},
            {"cnn_hidden", c.cnn_hidden},
            {"cnn_filter_widths", c.cnn_filter_widths},
            {"learning_rate", c.learning_rate},
            {"l2_coeff", c.l2_coeff},
            {"max_epochs", c.max_epochs},
            {"patience", c.patience},
            {"lr_halving_threshold", c.lr_halving_threshold},
            {"gate_decay", c.gate_decay},
            {"max_sample_len", c.max_sample_len}};
}

TrainConfig config_from_json(const json& j) {
    TrainConfig c;
    c.embed_dim = j.value("embed_dim", c.embed_dim);
    c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
    c.cnn_hidden = j.value("cnn_hidden", c.cnn_hidden);
    c.cnn_filter_widths = j.value("cnn_filter_widths", c.cnn_filter_widths);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.l2_coeff = j.value("l2_coeff", c.l2_coeff);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.patience = j.value("patience", c.patience);
    c.lr_halving_threshold = j.value("lr_halving_threshold", c.lr_halving_threshold);
    c.gate_decay = j.value("gate_decay", c.gate_decay);
    c.max_sample_len = j.value("max_sample_len", c.max_sample_len);
    return c;
}

}  // namespace

std::string model_to_json_text(const ModelBundle& bundle) {
    json payload;
    payload["ontology"] = json::parse(bundle.ontology.to_json_text());
    payload["vocab"] = bundle.vocab.tokens();
    payload["embeddings"] = matrix_to_json(bundle.embeddings);
    payload["forward"] = rnn_to_json(bundle.forward);
    payload["backward"] = rnn_to_json(bundle.backward);
    payload["cnn"] = cnn_to_json(bundle.cnn);
    payload["config"] = config_to_json(bundle.config);

    json doc;
    doc["format_version"] = ModelBundle::kFormatVersion;
    doc["checksum"] = hex64(fnv1a64(payload.dump()));
    doc["payload"] = std::move(payload);
    return doc.dump();
}

ModelBundle model_from_json_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("unreadable model file: ") + e.what());
    }
    int version = doc.value("format_version", -1);
    if (version != ModelBundle::kFormatVersion)
        throw DataError("unsupported model format version " + std::to_string(version) +
                        " (expected " + std::to_string(ModelBundle::kFormatVersion) + ")");
    if (!doc.contains("payload") || !doc.contains("checksum"))
        throw DataError("model file lacks payload or checksum");
    std::string expect = doc.at("checksum").get<std::string>();
    std::string actual = hex64(fnv1a64(doc.at("payload").dump()));
    if (expect != actual) throw DataError("model file checksum mismatch");

    const json& payload = doc.at("payload");
    ModelBundle bundle;
    bundle.ontology = Ontology::from_json_text(payload.at("ontology").dump());
    bundle.vocab = Vocabulary::from_tokens(payload.at("vocab").get<std::vector<std::string>>());
    bundle.embeddings = matrix_from_json(payload.at("embeddings"));
    bundle.forward = rnn_from_json(payload.at("forward"));
    bundle.backward = rnn_from_json(payload.at("backward"));
    bundle.cnn = cnn_from_json(payload.at("cnn"));
    bundle.config = config_from_json(payload.at("config"));

    if (bundle.embeddings.rows != bundle.vocab.size() ||
        bundle.forward.w_out.rows != bundle.vocab.size() ||
        bundle.backward.w_out.rows != bundle.vocab.size())
        throw DataError("model file is internally inconsistent with its vocabulary");
    return bundle;
}

void save_model(const ModelBundle& bundle, const std::string& path) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw DataError("cannot write model file: " + tmp);
        out << model_to_json_text(bundle) << '\n';
    }
    std::rename(tmp.c_str(), path.c_str());
}

ModelBundle load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    std::string text = ss.str();
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
    return model_from_json_text(text);
}

std::string train_config_to_json_text(const TrainConfig& config) {
    return config_to_json(config).dump(2);
}

TrainConfig train_config_from_json_text(const std::string& text) {
    return config_from_json(json::parse(text));
}

TrainConfig load_train_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return train_config_from_json_text(ss.str());
}

std::size_t load_embedding_file(const std::string& path, const Vocabulary& vocab,
                                Matrix& embeddings) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open embedding file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    json j = json::parse(ss.str());
    std::size_t dim = j.at("dim").get<std::size_t>();
    if (dim != embeddings.cols) throw DataError("embedding file dimension mismatch");
    std::size_t loaded = 0;
    for (auto it = j.at("embeddings").begin(); it != j.at("embeddings").end(); ++it) {
        int id = vocab.id(it.key());
        if (id < 0) continue;
        std::vector<double> row = it.value().get<std::vector<double>>();
        if (row.size() != dim) throw DataError("embedding row size mismatch for " + it.key());
        std::copy(row.begin(), row.end(), embeddings.row(id).begin());
        ++loaded;
    }
    return loaded;
}

}  // namespace nlgen
