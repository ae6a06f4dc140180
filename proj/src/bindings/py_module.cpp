#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

#include "nlgen/baselines.hpp"
#include "nlgen/evaluation.hpp"
#include "nlgen/model_io.hpp"
#include "nlgen/pipeline.hpp"

namespace py = pybind11;
using namespace nlgen;

namespace {

std::string value_kind_name(ValueKind kind) {
    switch (kind) {
        case ValueKind::categorical: return "value";
        case ValueKind::dont_care: return "dontcare";
        case ValueKind::yes: return "yes";
        case ValueKind::no: return "no";
        case ValueKind::unvalued: return "unvalued";
    }
    return "value";
}

py::list act_pairs(const DialogueAct& da, const Ontology& ont) {
    py::list out;
    for (const DaPair& p : da.pairs) {
        py::dict d;
        d["slot"] = ont.slots()[p.slot].name;
        d["kind"] = value_kind_name(p.value.kind);
        if (p.value.kind == ValueKind::categorical) d["value"] = p.value.text;
        out.append(std::move(d));
    }
    return out;
}

TrainConfig config_from_dict(const py::dict& d) {
    TrainConfig c;
    if (d.contains("embed_dim")) c.embed_dim = d["embed_dim"].cast<std::size_t>();
    if (d.contains("hidden_dim")) c.hidden_dim = d["hidden_dim"].cast<std::size_t>();
    if (d.contains("cnn_hidden")) c.cnn_hidden = d["cnn_hidden"].cast<std::size_t>();
    if (d.contains("cnn_filter_widths"))
        c.cnn_filter_widths = d["cnn_filter_widths"].cast<std::vector<int>>();
    if (d.contains("learning_rate")) c.learning_rate = d["learning_rate"].cast<double>();
    if (d.contains("l2_coeff")) c.l2_coeff = d["l2_coeff"].cast<double>();
    if (d.contains("max_epochs")) c.max_epochs = d["max_epochs"].cast<int>();
    if (d.contains("patience")) c.patience = d["patience"].cast<int>();
    if (d.contains("lr_halving_threshold"))
        c.lr_halving_threshold = d["lr_halving_threshold"].cast<double>();
    if (d.contains("gate_decay")) c.gate_decay = d["gate_decay"].cast<double>();
    if (d.contains("max_sample_len")) c.max_sample_len = d["max_sample_len"].cast<int>();
    return c;
}

/// Python-facing handle over a trained bundle.
class Model {
public:
    explicit Model(std::shared_ptr<const ModelBundle> bundle) : bundle_(std::move(bundle)) {}

    static Model train(const std::vector<std::pair<std::string, std::string>>& corpus,
                       const py::dict& config_dict, std::uint64_t seed) {
        std::vector<CorpusExample> examples;
        examples.reserve(corpus.size());
        for (const auto& [da, text] : corpus) examples.push_back({da, text});
        TrainConfig config = config_from_dict(config_dict);
        Dataset data = prepare_dataset(examples, Ontology::restaurant(), seed);
        TrainedModel trained = train_full(data, config, seed);
        if (trained.diverged()) throw DivergenceError("training diverged");
        return Model(std::make_shared<const ModelBundle>(std::move(trained.bundle)));
    }

    static Model load(const std::string& path) {
        return Model(std::make_shared<const ModelBundle>(load_model(path)));
    }

    void save(const std::string& path) const { save_model(*bundle_, path); }

    py::dict generate(const std::string& da_text, int beam, int top_n, double lambda,
                      std::uint64_t seed, py::object delta) const {
        const ModelBundle& b = *bundle_;
        DialogueAct da = canonicalize_da(parse_da(da_text, b.ontology), b.ontology);
        GenContext ctx = GenContext::make(b.embeddings, b.vocab, b.ontology);
        DecodeConfig config;
        config.beam = beam;
        config.top_n = top_n;
        config.gate_decay = delta.is_none() ? b.config.gate_decay : delta.cast<double>();
        config.slot_penalty = lambda;
        config.max_len = b.config.max_sample_len;
        config.seed = seed;
        DecodeResult result =
            generate_utterance(b.forward, &b.backward, &b.cnn, ctx, da, config);
        py::dict out;
        out["surface"] = result.surface;
        py::list candidates;
        for (const Candidate& c : result.ranked) {
            py::dict d;
            d["tokens"] = c.tokens;
            d["surface"] = c.surface;
            d["cost_fRNN"] = c.cost_forward;
            d["cost_bRNN"] = c.cost_backward;
            d["cost_CNN"] = c.cost_semantic;
            d["err"] = c.slot_errors;
            d["r"] = c.score;
            d["r_star"] = c.penalized_score;
            candidates.append(std::move(d));
        }
        out["candidates"] = std::move(candidates);
        return out;
    }

    std::size_t vocab_size() const { return bundle_->vocab.size(); }
    double gate_decay() const { return bundle_->config.gate_decay; }

private:
    std::shared_ptr<const ModelBundle> bundle_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "dialogue-act to utterance generation core";

    py::register_exception<ParseError>(m, "DaParseError");
    py::register_exception<DataError>(m, "DataError");
    py::register_exception<DivergenceError>(m, "DivergenceError");

    py::class_<Ontology>(m, "Ontology")
        .def_static("restaurant", &Ontology::restaurant)
        .def_static("from_json_file", &Ontology::from_json_file)
        .def_property_readonly("act_types", &Ontology::act_types)
        .def_property_readonly("slot_names",
                               [](const Ontology& o) {
                                   std::vector<std::string> names;
                                   for (const SlotDef& s : o.slots()) names.push_back(s.name);
                                   return names;
                               })
        .def("feature_dim", &Ontology::feature_dim);

    py::class_<DialogueAct>(m, "DialogueAct");

    m.def("parse_da", &parse_da, py::arg("text"), py::arg("ontology"));
    m.def("canonicalize_da", &canonicalize_da, py::arg("da"), py::arg("ontology"));
    m.def("render_da", &render_da, py::arg("da"), py::arg("ontology"));
    m.def("da_key", &da_key, py::arg("da"), py::arg("ontology"));
    m.def("act_type",
          [](const DialogueAct& da, const Ontology& ont) { return ont.act_types()[da.act_type]; });
    m.def("act_pairs", &act_pairs, py::arg("da"), py::arg("ontology"));
    m.def("encode_control",
          [](const DialogueAct& da, const Ontology& ont) { return encode_control(da, ont).values; });

    m.def("tokenize", &tokenize);
    m.def(
        "delexicalize",
        [](const std::string& text, const DialogueAct& da, const Ontology& ont) {
            return delexicalize(text, da, ont).tokens;
        },
        py::arg("text"), py::arg("da"), py::arg("ontology"));
    m.def(
        "relexicalize",
        [](const std::vector<std::string>& tokens, const DialogueAct& da, const Ontology& ont) {
            return join_tokens(relexicalize_lenient(tokens, da, ont).tokens);
        },
        py::arg("tokens"), py::arg("da"), py::arg("ontology"));
    m.def(
        "slot_error",
        [](const std::vector<std::string>& tokens, const DialogueAct& da, const Ontology& ont) {
            return slot_error(tokens, da, ont);
        },
        py::arg("tokens"), py::arg("da"), py::arg("ontology"));

    m.def(
        "bleu4",
        [](const std::vector<std::vector<std::string>>& hyps,
           const std::vector<std::vector<std::vector<std::string>>>& refs) {
            return bleu4(hyps, refs);
        },
        py::arg("hypotheses"), py::arg("references"));

    m.def(
        "generate_corpus",
        [](const std::string& templates_path, std::size_t count, std::uint64_t seed,
           const std::string& ontology_path) {
            Ontology ont = ontology_path.empty() ? Ontology::restaurant()
                                                 : Ontology::from_json_file(ontology_path);
            TemplatePack pack = TemplatePack::load(templates_path, ont);
            std::vector<std::pair<std::string, std::string>> out;
            for (CorpusExample& ex : pack.generate(count, seed))
                out.emplace_back(std::move(ex.da_string), std::move(ex.text));
            return out;
        },
        py::arg("templates_path"), py::arg("count"), py::arg("seed"),
        py::arg("ontology_path") = std::string());

    py::class_<Model>(m, "Model")
        .def_static("train", &Model::train, py::arg("corpus"), py::arg("config") = py::dict(),
                    py::arg("seed") = 1)
        .def_static("load", &Model::load, py::arg("path"))
        .def("save", &Model::save, py::arg("path"))
        .def("generate", &Model::generate, py::arg("da"), py::arg("beam") = 100,
             py::arg("top_n") = 1, py::arg("lam") = 100.0, py::arg("seed") = 1,
             py::arg("delta") = py::none())
        .def_property_readonly("vocab_size", &Model::vocab_size)
        .def_property_readonly("gate_decay", &Model::gate_decay);
}
