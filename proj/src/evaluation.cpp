#include "nlgen/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "json.hpp"

namespace nlgen {

namespace {

std::string ngram_key(std::span<const std::string> tokens, std::size_t start, int n) {
    std::string key;
    for (int i = 0; i < n; ++i) {
        if (i) key += '\x1f';
        key += tokens[start + i];
    }
    return key;
}

}  // namespace

double bleu4(std::span<const std::vector<std::string>> hypotheses,
             std::span<const std::vector<std::vector<std::string>>> references, int max_order) {
    if (hypotheses.empty()) throw DataError("BLEU needs at least one hypothesis");
    if (hypotheses.size() != references.size())
        throw DataError("BLEU hypothesis/reference lists are misaligned");

    std::vector<long long> matches(max_order, 0), totals(max_order, 0);
    long long hyp_len = 0, ref_len = 0;

    for (std::size_t s = 0; s < hypotheses.size(); ++s) {
        const std::vector<std::string>& hyp = hypotheses[s];
        const std::vector<std::vector<std::string>>& refs = references[s];
        if (refs.empty()) throw DataError("a hypothesis has no references");

        hyp_len += static_cast<long long>(hyp.size());
        long long closest = static_cast<long long>(refs[0].size());
        for (const auto& r : refs) {
            long long len = static_cast<long long>(r.size());
            long long hl = static_cast<long long>(hyp.size());
            if (std::llabs(len - hl) < std::llabs(closest - hl) ||
                (std::llabs(len - hl) == std::llabs(closest - hl) && len < closest))
                closest = len;
        }
        ref_len += closest;

        for (int n = 1; n <= max_order; ++n) {
            if (hyp.size() < static_cast<std::size_t>(n)) continue;
            std::map<std::string, long long> hyp_counts;
            for (std::size_t i = 0; i + n <= hyp.size(); ++i)
                ++hyp_counts[ngram_key(hyp, i, n)];
            std::map<std::string, long long> ref_max;
            for (const auto& r : refs) {
                if (r.size() < static_cast<std::size_t>(n)) continue;
                std::map<std::string, long long> counts;
                for (std::size_t i = 0; i + n <= r.size(); ++i)
                    ++counts[ngram_key(r, i, n)];
                for (const auto& [k, c] : counts) ref_max[k] = std::max(ref_max[k], c);
            }
            for (const auto& [k, c] : hyp_counts) {
                auto it = ref_max.find(k);
                if (it != ref_max.end()) matches[n - 1] += std::min(c, it->second);
            }
            totals[n - 1] += static_cast<long long>(hyp.size()) - n + 1;
        }
    }

    double log_precision = 0.0;
    for (int n = 0; n < max_order; ++n) {
        if (matches[n] == 0 || totals[n] == 0) return 0.0;
        log_precision += std::log(static_cast<double>(matches[n]) / totals[n]);
    }
    double bp = 1.0;
    if (hyp_len == 0) return 0.0;
    if (hyp_len < ref_len)
        bp = std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
    return bp * std::exp(log_precision / max_order);
}

References build_references(std::span<const PreparedExample> corpus,
                            std::span<const PreparedExample> test_acts, const Ontology& ont) {
    References refs;
    std::map<std::string, std::set<std::vector<std::string>>> seen;
    for (const PreparedExample& ex : corpus) {
        if (seen[ex.key].insert(ex.delex.tokens).second)
            refs.templates_by_key[ex.key].push_back(ex.delex.tokens);
    }
    refs.per_act.reserve(test_acts.size());
    for (const PreparedExample& test : test_acts) {
        std::vector<std::vector<std::string>> lexicalised;
        auto it = refs.templates_by_key.find(test.key);
        if (it != refs.templates_by_key.end()) {
            for (const auto& tpl : it->second)
                lexicalised.push_back(relexicalize_lenient(tpl, test.da, ont).tokens);
        } else {
            // Unseen key: fall back to the act's own paired utterance.
            lexicalised.push_back(relexicalize_lenient(test.delex.tokens, test.da, ont).tokens);
        }
        refs.per_act.push_back(std::move(lexicalised));
    }
    return refs;
}

namespace {

struct ScoredRun {
    double bleu = 0.0;
    int err = 0;
    double hard_consistency = 0.0;
    double hard_bleu = 0.0;
    int distinct_outputs = 0;
    std::vector<int> err_by_act_type;
};

ScoredRun score_outputs(const std::vector<GeneratedUtterance>& outputs,
                        std::span<const PreparedExample> test_acts, const References& refs,
                        const Ontology& ont) {
    ScoredRun run;
    run.err_by_act_type.assign(ont.act_count(), 0);
    std::vector<std::vector<std::string>> hyps;
    hyps.reserve(outputs.size());
    std::set<std::vector<std::string>> distinct;
    std::vector<std::size_t> hard_indices;
    int hard_match = 0;

    for (std::size_t i = 0; i < outputs.size(); ++i) {
        const GeneratedUtterance& out = outputs[i];
        hyps.push_back(out.surface_tokens);
        int err = slot_error(out.delex_tokens, test_acts[i].da, ont);
        run.err += err;
        run.err_by_act_type[test_acts[i].da.act_type] += err;
        distinct.insert(out.delex_tokens);
        if (test_acts[i].hard) {
            hard_indices.push_back(i);
            auto it = refs.templates_by_key.find(test_acts[i].key);
            if (it != refs.templates_by_key.end()) {
                for (const auto& tpl : it->second) {
                    if (tpl == out.delex_tokens) {
                        ++hard_match;
                        break;
                    }
                }
            }
        }
    }
    run.distinct_outputs = static_cast<int>(distinct.size());
    run.bleu = bleu4(hyps, refs.per_act);
    if (!hard_indices.empty()) {
        std::vector<std::vector<std::string>> hard_hyps;
        std::vector<std::vector<std::vector<std::string>>> hard_refs;
        for (std::size_t i : hard_indices) {
            hard_hyps.push_back(hyps[i]);
            hard_refs.push_back(refs.per_act[i]);
        }
        run.hard_bleu = bleu4(hard_hyps, hard_refs);
        run.hard_consistency =
            static_cast<double>(hard_match) / static_cast<double>(hard_indices.size());
    } else {
        run.hard_bleu = run.bleu;
        run.hard_consistency = 1.0;
    }
    return run;
}

std::vector<GeneratedUtterance> run_system(const SystemFn& system,
                                           std::span<const PreparedExample> test_acts) {
    std::vector<GeneratedUtterance> outputs;
    outputs.reserve(test_acts.size());
    for (std::size_t i = 0; i < test_acts.size(); ++i)
        outputs.push_back(system(test_acts[i].da, i));
    return outputs;
}

}  // namespace

EvalReport evaluate_system(const SystemFactory& factory,
                           std::span<const PreparedExample> test_acts, const References& refs,
                           std::span<const std::uint64_t> seeds, const Ontology& ont,
                           const std::string& config_echo) {
    EvalReport report;
    report.system = factory.name;
    report.seeds.assign(seeds.begin(), seeds.end());
    report.config_echo = config_echo;

    std::vector<double> err_by_type(ont.act_count(), 0.0);
    std::vector<int> count_by_type(ont.act_count(), 0);
    for (const PreparedExample& ex : test_acts) ++count_by_type[ex.da.act_type];

    for (std::uint64_t seed : seeds) {
        SystemFn system = factory.make(seed);
        ScoredRun run = score_outputs(run_system(system, test_acts), test_acts, refs, ont);
        report.per_seed.push_back({seed, run.bleu, run.err, run.hard_consistency, run.hard_bleu,
                                   run.distinct_outputs});
        for (std::size_t a = 0; a < err_by_type.size(); ++a)
            err_by_type[a] += run.err_by_act_type[a];
    }

    double n = static_cast<double>(report.per_seed.size());
    for (const SeedResult& r : report.per_seed) {
        report.bleu_mean += r.bleu / n;
        report.err_mean += r.err / n;
        report.hard_consistency_mean += r.hard_consistency / n;
    }
    for (std::size_t a = 0; a < err_by_type.size(); ++a) {
        if (count_by_type[a] == 0) continue;
        report.by_act_type.push_back({ont.act_types()[a], count_by_type[a], err_by_type[a] / n});
    }
    return report;
}

std::string EvalReport::to_tsv_row() const {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s\t%.6f\t%.3f\t%.6f", system.c_str(), bleu_mean, err_mean,
                  hard_consistency_mean);
    return buf;
}

std::string EvalReport::to_json_text() const {
    nlohmann::json j;
    j["system"] = system;
    j["seeds"] = seeds;
    j["bleu_mean"] = bleu_mean;
    j["err_mean"] = err_mean;
    j["hard_consistency_mean"] = hard_consistency_mean;
    j["config"] = config_echo;
    nlohmann::json per_seed = nlohmann::json::array();
    for (const SeedResult& r : this->per_seed) {
        per_seed.push_back({{"seed", r.seed},
                            {"bleu", r.bleu},
                            {"err", r.err},
                            {"hard_consistency", r.hard_consistency},
                            {"hard_bleu", r.hard_bleu},
                            {"distinct_outputs", r.distinct_outputs}});
    }
    j["per_seed"] = std::move(per_seed);
    nlohmann::json by_type = nlohmann::json::array();
    for (const ActTypeStats& s : by_act_type)
        by_type.push_back({{"act", s.act}, {"count", s.count}, {"err_mean", s.err_mean}});
    j["by_act_type"] = std::move(by_type);
    return j.dump();
}

namespace {

AblationCell& find_or_create(std::vector<AblationCell>& cells, const std::string& stage,
                             const std::string& setting, int top_n) {
    for (AblationCell& c : cells) {
        if (c.stage == stage && c.setting == setting && c.top_n == top_n) return c;
    }
    AblationCell cell;
    cell.stage = stage;
    cell.setting = setting;
    cell.top_n = top_n;
    cells.push_back(std::move(cell));
    return cells.back();
}

/// One decode pass per act, shared across the requested top-n values.
std::vector<std::vector<GeneratedUtterance>> decode_multi_topn(
    const ModelBundle& bundle, bool use_cnn, bool use_backward, const DecodeConfig& base,
    std::span<const int> top_ns, std::span<const PreparedExample> test_acts) {
    GenContext ctx = GenContext::make(bundle.embeddings, bundle.vocab, bundle.ontology);
    std::vector<std::vector<GeneratedUtterance>> outputs(top_ns.size());
    for (auto& v : outputs) v.reserve(test_acts.size());

    for (std::size_t i = 0; i < test_acts.size(); ++i) {
        DecodeConfig per_act = base;
        per_act.seed = Rng::derive(base.seed, i);
        const DialogueAct& da = test_acts[i].da;
        std::vector<Candidate> candidates = overgenerate(bundle.forward, ctx, da, per_act);
        rerank(candidates, use_backward ? &bundle.backward : nullptr,
               use_cnn ? &bundle.cnn : nullptr, ctx, da, per_act);
        for (std::size_t t = 0; t < top_ns.size(); ++t) {
            Rng rng(Rng::derive(per_act.seed, 0x5e1ec7ull + top_ns[t]));
            DecodeResult result =
                select_output(candidates, da, bundle.ontology, top_ns[t], rng);
            GeneratedUtterance out;
            if (!result.ranked.empty()) {
                out.delex_tokens = result.ranked[result.chosen].tokens;
                out.surface_tokens = tokenize(result.surface);
            }
            outputs[t].push_back(std::move(out));
        }
    }
    return outputs;
}

}  // namespace

AblationReport run_ablation(std::span<const CorpusExample> corpus, const Ontology& ont,
                            const AblationConfig& config) {
    AblationReport report;
    CorpusSplit split = prepare_splits(corpus, config.split_seed, ont);
    Dataset data = prepare_dataset_from_split(split, ont);
    References refs = build_references(data.all, data.test, ont);

    auto record = [&](const std::string& stage, const std::string& setting, int top_n,
                      std::uint64_t seed, const ScoredRun& run) {
        AblationCell& cell = find_or_create(report.cells, stage, setting, top_n);
        cell.per_seed.push_back(
            {seed, run.bleu, run.err, run.hard_consistency, run.hard_bleu, run.distinct_outputs});
    };

    for (std::uint64_t seed : config.seeds) {
        TrainConfig base_tc = config.train;
        TrainedModel full = train_full(data, base_tc, seed);

        // Gate stage: forward model only, scored by its own cost.
        for (double delta : config.deltas) {
            std::shared_ptr<const ModelBundle> bundle;
            if (delta == base_tc.gate_decay) {
                bundle = std::make_shared<const ModelBundle>(full.bundle);
            } else {
                TrainConfig tc = base_tc;
                tc.gate_decay = delta;
                TrainedModel m = train_full(data, tc, seed, false, false);
                bundle = std::make_shared<const ModelBundle>(std::move(m.bundle));
            }
            DecodeConfig dc;
            dc.beam = config.gate_beam;
            dc.top_n = 5;
            dc.gate_decay = delta;
            dc.slot_penalty = 0.0;
            dc.seed = Rng::derive(seed, 100);
            std::vector<int> top_ns = {5};
            auto outputs = decode_multi_topn(*bundle, false, false, dc, top_ns, data.test);
            char setting[32];
            std::snprintf(setting, sizeof(setting), "delta=%g", delta);
            record("gate", setting, 5, seed, score_outputs(outputs[0], data.test, refs, ont));
        }

        auto full_bundle = std::make_shared<const ModelBundle>(full.bundle);

        if (config.cnn_stage) {
            DecodeConfig dc;
            dc.beam = config.gate_beam;
            dc.top_n = 5;
            dc.gate_decay = base_tc.gate_decay;
            dc.slot_penalty = 0.0;
            dc.seed = Rng::derive(seed, 200);
            std::vector<int> top_ns = {5};
            auto off = decode_multi_topn(*full_bundle, false, false, dc, top_ns, data.test);
            auto on = decode_multi_topn(*full_bundle, true, false, dc, top_ns, data.test);
            record("cnn", "cnn=off", 5, seed, score_outputs(off[0], data.test, refs, ont));
            record("cnn", "cnn=on", 5, seed, score_outputs(on[0], data.test, refs, ont));
        }

        if (config.backward_stage) {
            DecodeConfig dc;
            dc.beam = config.full_beam;
            dc.gate_decay = base_tc.gate_decay;
            dc.slot_penalty = 0.0;
            dc.seed = Rng::derive(seed, 300);
            auto off = decode_multi_topn(*full_bundle, true, false, dc, config.top_ns, data.test);
            auto on = decode_multi_topn(*full_bundle, true, true, dc, config.top_ns, data.test);
            for (std::size_t t = 0; t < config.top_ns.size(); ++t) {
                record("backward", "backward=off", config.top_ns[t], seed,
                       score_outputs(off[t], data.test, refs, ont));
                record("backward", "backward=on", config.top_ns[t], seed,
                       score_outputs(on[t], data.test, refs, ont));
            }
        }

        for (double fraction : config.fractions) {
            std::shared_ptr<const ModelBundle> bundle;
            if (fraction >= 1.0) {
                bundle = full_bundle;
            } else {
                CorpusSplit sub = subset_train(split, fraction, ont);
                Dataset sub_data = prepare_dataset_from_split(sub, ont);
                TrainedModel m = train_full(sub_data, base_tc, seed);
                bundle = std::make_shared<const ModelBundle>(std::move(m.bundle));
            }
            DecodeConfig dc;
            dc.beam = config.full_beam;
            dc.gate_decay = base_tc.gate_decay;
            dc.slot_penalty = 0.0;
            dc.seed = Rng::derive(seed, 400);
            std::vector<int> top_ns = {1, 5};
            auto outputs = decode_multi_topn(*bundle, true, true, dc, top_ns, data.test);
            char setting[32];
            std::snprintf(setting, sizeof(setting), "fraction=%g", fraction);
            for (std::size_t t = 0; t < top_ns.size(); ++t)
                record("data", setting, top_ns[t], seed,
                       score_outputs(outputs[t], data.test, refs, ont));
        }
    }

    for (AblationCell& cell : report.cells) {
        double n = static_cast<double>(cell.per_seed.size());
        for (const SeedResult& r : cell.per_seed) {
            cell.bleu_mean += r.bleu / n;
            cell.err_mean += r.err / n;
            cell.hard_consistency_mean += r.hard_consistency / n;
            cell.hard_bleu_mean += r.hard_bleu / n;
        }
    }
    return report;
}

const AblationCell* AblationReport::find(const std::string& stage, const std::string& setting,
                                         int top_n) const {
    for (const AblationCell& c : cells) {
        if (c.stage == stage && c.setting == setting && c.top_n == top_n) return &c;
    }
    return nullptr;
}

std::string AblationReport::to_tsv() const {
    std::string out = "stage\tsetting\ttop_n\tbleu\terr\thard_consistency\thard_bleu\n";
    char buf[256];
    for (const AblationCell& c : cells) {
        std::snprintf(buf, sizeof(buf), "%s\t%s\t%d\t%.6f\t%.3f\t%.6f\t%.6f\n", c.stage.c_str(),
                      c.setting.c_str(), c.top_n, c.bleu_mean, c.err_mean,
                      c.hard_consistency_mean, c.hard_bleu_mean);
        out += buf;
    }
    return out;
}

std::string AblationReport::to_csv_series() const {
    std::string out = "stage,setting,top_n,metric,value\n";
    char buf[256];
    for (const AblationCell& c : cells) {
        const char* metrics[] = {"bleu", "err", "hard_consistency", "hard_bleu"};
        double values[] = {c.bleu_mean, c.err_mean, c.hard_consistency_mean, c.hard_bleu_mean};
        for (int m = 0; m < 4; ++m) {
            std::snprintf(buf, sizeof(buf), "%s,%s,%d,%s,%.6f\n", c.stage.c_str(),
                          c.setting.c_str(), c.top_n, metrics[m], values[m]);
            out += buf;
        }
    }
    return out;
}

std::string AblationReport::to_json_text() const {
    nlohmann::json cells_json = nlohmann::json::array();
    for (const AblationCell& c : cells) {
        nlohmann::json per_seed = nlohmann::json::array();
        for (const SeedResult& r : c.per_seed) {
            per_seed.push_back({{"seed", r.seed},
                                {"bleu", r.bleu},
                                {"err", r.err},
                                {"hard_consistency", r.hard_consistency},
                                {"hard_bleu", r.hard_bleu}});
        }
        cells_json.push_back({{"stage", c.stage},
                              {"setting", c.setting},
                              {"top_n", c.top_n},
                              {"bleu_mean", c.bleu_mean},
                              {"err_mean", c.err_mean},
                              {"hard_consistency_mean", c.hard_consistency_mean},
                              {"hard_bleu_mean", c.hard_bleu_mean},
                              {"per_seed", std::move(per_seed)}});
    }
    return nlohmann::json{{"cells", std::move(cells_json)}}.dump();
}

}  // namespace nlgen
