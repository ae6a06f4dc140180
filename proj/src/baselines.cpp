#include "nlgen/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace nlgen {

namespace {

constexpr double kBackoffAlpha = 0.4;

std::string cat_name(SlotCategory cat) {
    switch (cat) {
        case SlotCategory::value: return "value";
        case SlotCategory::dont_care: return "dontcare";
        case SlotCategory::yes: return "yes";
        case SlotCategory::no: return "no";
    }
    return "value";
}

std::string join(std::span<const std::string> parts, char sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

}  // namespace

TemplateStore TemplateStore::build(std::span<const PreparedExample> train, const Ontology& ont) {
    TemplateStore store;
    store.entries_.reserve(train.size());
    for (const PreparedExample& ex : train) {
        store.entries_.push_back({da_key(ex.da, ont), ex.control.values, ex.delex.tokens});
    }
    return store;
}

GeneratedUtterance knn_generate(const TemplateStore& store, const DialogueAct& da,
                                const Ontology& ont) {
    if (store.entries().empty()) throw DataError("empty template store");
    DialogueAct canon = canonicalize_da(da, ont);
    Vector query = encode_control(canon, ont).values;
    double qn = std::sqrt(dot(query, query));

    const TemplateStore::Entry* best = nullptr;
    double best_sim = -2.0;
    for (const TemplateStore::Entry& e : store.entries()) {
        double sim = dot(query, e.control) / (qn * std::sqrt(dot(e.control, e.control)));
        if (sim > best_sim) {  // ties keep the earliest training example
            best_sim = sim;
            best = &e;
        }
    }
    GeneratedUtterance out;
    out.delex_tokens = best->tokens;
    out.surface_tokens = relexicalize_lenient(out.delex_tokens, canon, ont).tokens;
    return out;
}

std::string NgramClassLm::class_key(const DialogueAct& da, const Ontology& ont) const {
    if (class_slots_ == 0) return "";
    DialogueAct canon = canonicalize_da(da, ont);
    std::vector<std::string> parts = {ont.act_types()[canon.act_type]};
    std::vector<int> seen;
    for (const DaPair& p : canon.pairs) {
        if (std::find(seen.begin(), seen.end(), p.slot) != seen.end()) continue;
        seen.push_back(p.slot);
        if (static_cast<int>(seen.size()) > class_slots_) break;
        parts.push_back(ont.slots()[p.slot].name);
    }
    return join(parts, '|');
}

std::string NgramClassLm::resolve_key(const DialogueAct& da, const Ontology& ont) const {
    std::string key = class_key(da, ont);
    while (!classes_.count(key)) {
        auto cut = key.rfind('|');
        if (cut == std::string::npos) {
            key.clear();
            break;
        }
        key.resize(cut);
    }
    if (!classes_.count(key)) throw DataError("n-gram model has no class for the act");
    return key;
}

NgramClassLm NgramClassLm::train(std::span<const PreparedExample> train, int class_slots,
                                 int order, const Ontology& ont) {
    if (class_slots < 0 || order < 1) throw DataError("bad n-gram configuration");
    NgramClassLm lm;
    lm.class_slots_ = class_slots;
    lm.order_ = order;

    std::set<std::string> vocab;
    for (const PreparedExample& ex : train)
        vocab.insert(ex.delex.tokens.begin(), ex.delex.tokens.end());
    lm.vocab_.assign(vocab.begin(), vocab.end());

    std::set<std::string> full_keys;
    for (const PreparedExample& ex : train) {
        // Populate the class itself plus every backoff prefix down to the
        // global class.
        std::vector<std::string> keys;
        std::string key = lm.class_key(ex.da, ont);
        full_keys.insert(key);
        keys.push_back(key);
        while (!key.empty()) {
            auto cut = key.rfind('|');
            key = cut == std::string::npos ? std::string() : key.substr(0, cut);
            keys.push_back(key);
        }
        for (const std::string& k : keys) {
            ClassCounts& cc = lm.classes_[k];
            cc.by_length.resize(order);
            const auto& toks = ex.delex.tokens;
            for (std::size_t i = 1; i < toks.size(); ++i) {
                for (int len = 0; len < order; ++len) {
                    if (static_cast<std::size_t>(len) > i) break;
                    std::string ctx =
                        join(std::span<const std::string>(&toks[i - len], len), ' ');
                    ClassCounts::Table& table = cc.by_length[len][ctx];
                    ++table.counts[toks[i]];
                    ++table.total;
                }
            }
        }
    }
    lm.full_class_count_ = full_keys.size();
    return lm;
}

double NgramClassLm::backoff_score(const ClassCounts& counts,
                                   std::span<const std::string> history,
                                   const std::string& token) const {
    int max_len = std::min<int>(order_ - 1, static_cast<int>(history.size()));
    double mult = 1.0;
    for (int len = max_len; len >= 0; --len) {
        std::string ctx = join(history.subspan(history.size() - len, len), ' ');
        auto it = counts.by_length[len].find(ctx);
        if (it != counts.by_length[len].end()) {
            auto tok = it->second.counts.find(token);
            if (tok != it->second.counts.end())
                return mult * tok->second / static_cast<double>(it->second.total);
        }
        mult *= kBackoffAlpha;
    }
    return mult * (1.0 / static_cast<double>(vocab_.size()));
}

Vector NgramClassLm::next_distribution(const std::string& class_key,
                                       std::span<const std::string> history) const {
    auto it = classes_.find(class_key);
    if (it == classes_.end()) throw DataError("unknown n-gram class key");
    Vector scores(vocab_.size());
    double total = 0.0;
    for (std::size_t i = 0; i < vocab_.size(); ++i) {
        scores[i] = backoff_score(it->second, history, vocab_[i]);
        total += scores[i];
    }
    for (double& s : scores) s /= total;
    return scores;
}

double NgramClassLm::sequence_nll(const DialogueAct& da, std::span<const std::string> tokens,
                                  const Ontology& ont) const {
    std::string key = resolve_key(da, ont);
    double nll = 0.0;
    for (std::size_t i = 1; i < tokens.size(); ++i) {
        std::size_t len = std::min<std::size_t>(order_ - 1, i);
        std::span<const std::string> history(&tokens[i - len], len);
        Vector dist = next_distribution(key, history);
        auto pos = std::lower_bound(vocab_.begin(), vocab_.end(), tokens[i]);
        if (pos == vocab_.end() || *pos != tokens[i])
            throw DataError("token outside the n-gram vocabulary: " + tokens[i]);
        nll -= std::log(dist[pos - vocab_.begin()]);
    }
    return nll;
}

GeneratedUtterance NgramClassLm::generate(const DialogueAct& da, const DecodeConfig& config,
                                          const Ontology& ont) const {
    DialogueAct canon = canonicalize_da(da, ont);
    std::string key = resolve_key(canon, ont);

    // Contexts repeat across the beam constantly; cache their distributions.
    std::map<std::string, Vector> cache;
    auto distribution = [&](std::span<const std::string> history) -> const Vector& {
        std::string ctx = join(history, ' ');
        auto it = cache.find(ctx);
        if (it == cache.end()) it = cache.emplace(ctx, next_distribution(key, history)).first;
        return it->second;
    };

    struct NgramCandidate {
        std::vector<std::string> tokens;
        double nll = 0.0;
        int err = 0;
        double penalized = 0.0;
    };
    std::vector<NgramCandidate> candidates;
    std::set<std::vector<std::string>> seen;
    std::string bos(Vocabulary::kBos), eos(Vocabulary::kEos);
    for (int b = 0; b < config.beam; ++b) {
        Rng rng(Rng::derive(config.seed, static_cast<std::uint64_t>(b)));
        NgramCandidate c;
        c.tokens.push_back(bos);
        int interior = 0;
        while (true) {
            std::size_t len = std::min<std::size_t>(order_ - 1, c.tokens.size());
            std::span<const std::string> history(&c.tokens[c.tokens.size() - len], len);
            const Vector& dist = distribution(history);
            int drawn = rng.categorical(dist);
            c.nll -= std::log(dist[drawn]);
            c.tokens.push_back(vocab_[drawn]);
            if (vocab_[drawn] == eos) break;
            if (++interior >= config.max_len) break;
        }
        if (seen.insert(c.tokens).second) candidates.push_back(std::move(c));
    }
    for (NgramCandidate& c : candidates) {
        c.err = slot_error(c.tokens, canon, ont) +
                relexicalize_lenient(c.tokens, canon, ont).dangling;
        c.penalized = -(c.nll + config.slot_penalty * c.err);
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const NgramCandidate& a, const NgramCandidate& b) {
                         if (a.penalized != b.penalized) return a.penalized > b.penalized;
                         if (a.nll != b.nll) return a.nll < b.nll;
                         return a.tokens < b.tokens;
                     });
    std::size_t pool = std::min<std::size_t>(std::max(config.top_n, 1), candidates.size());
    Rng pick(Rng::derive(config.seed, 0x5e1ec7ull));
    const NgramCandidate& chosen = candidates[pool == 1 ? 0 : pick.below(pool)];

    GeneratedUtterance out;
    out.delex_tokens = chosen.tokens;
    out.surface_tokens = relexicalize_lenient(chosen.tokens, canon, ont).tokens;
    return out;
}

std::string NgramClassLm::to_json_text() const {
    nlohmann::json j;
    j["class_slots"] = class_slots_;
    j["order"] = order_;
    j["full_classes"] = full_class_count_;
    j["vocab"] = vocab_;
    nlohmann::json classes = nlohmann::json::object();
    for (const auto& [key, cc] : classes_) {
        nlohmann::json lengths = nlohmann::json::array();
        for (const auto& table_map : cc.by_length) {
            nlohmann::json jt = nlohmann::json::object();
            for (const auto& [ctx, table] : table_map) {
                nlohmann::json counts = nlohmann::json::object();
                for (const auto& [tok, n] : table.counts) counts[tok] = n;
                jt[ctx] = std::move(counts);
            }
            lengths.push_back(std::move(jt));
        }
        classes[key] = std::move(lengths);
    }
    j["classes"] = std::move(classes);
    return j.dump();
}

NgramClassLm NgramClassLm::from_json_text(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    NgramClassLm lm;
    lm.class_slots_ = j.at("class_slots").get<int>();
    lm.order_ = j.at("order").get<int>();
    lm.full_class_count_ = j.value("full_classes", 0);
    lm.vocab_ = j.at("vocab").get<std::vector<std::string>>();
    for (auto it = j.at("classes").begin(); it != j.at("classes").end(); ++it) {
        ClassCounts cc;
        for (const auto& jt : it.value()) {
            std::map<std::string, ClassCounts::Table> table_map;
            for (auto ctx = jt.begin(); ctx != jt.end(); ++ctx) {
                ClassCounts::Table table;
                for (auto tok = ctx.value().begin(); tok != ctx.value().end(); ++tok) {
                    table.counts[tok.key()] = tok.value().get<int>();
                    table.total += tok.value().get<int>();
                }
                table_map[ctx.key()] = std::move(table);
            }
            cc.by_length.push_back(std::move(table_map));
        }
        lm.classes_[it.key()] = std::move(cc);
    }
    return lm;
}

HandcraftedGenerator HandcraftedGenerator::from_json_text(const std::string& text,
                                                          const Ontology& ont) {
    nlohmann::json j = nlohmann::json::parse(text);
    HandcraftedGenerator g;
    for (auto it = j.at("openers").begin(); it != j.at("openers").end(); ++it) {
        int act = ont.act_index(it.key());
        if (act < 0) throw DataError("handcrafted openers reference unknown act " + it.key());
        g.openers_[act] = tokenize(it.value().get<std::string>());
    }
    for (auto it = j.at("fragments").begin(); it != j.at("fragments").end(); ++it)
        g.fragments_[it.key()] = tokenize(it.value().get<std::string>());
    if (j.contains("closers")) {
        for (auto it = j.at("closers").begin(); it != j.at("closers").end(); ++it) {
            int act = ont.act_index(it.key());
            if (act < 0) throw DataError("handcrafted closers reference unknown act " + it.key());
            g.closers_[act] = it.value().get<std::string>();
        }
    }
    return g;
}

HandcraftedGenerator HandcraftedGenerator::load(const std::string& path, const Ontology& ont) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open handcrafted templates: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str(), ont);
}

GeneratedUtterance HandcraftedGenerator::generate(const DialogueAct& da,
                                                  const Ontology& ont) const {
    DialogueAct canon = canonicalize_da(da, ont);
    GeneratedUtterance out;
    out.delex_tokens.emplace_back(Vocabulary::kBos);
    auto op = openers_.find(canon.act_type);
    if (op == openers_.end())
        throw DataError("handcrafted generator has no opener for act " +
                        ont.act_types()[canon.act_type]);
    out.delex_tokens.insert(out.delex_tokens.end(), op->second.begin(), op->second.end());
    for (const DaPair& p : canon.pairs) {
        std::string key = ont.slots()[p.slot].name + ":";
        key += p.value.kind == ValueKind::unvalued ? "unvalued"
                                                   : cat_name(category_of(p.value.kind));
        auto frag = fragments_.find(key);
        if (frag == fragments_.end())
            throw DataError("handcrafted generator has no fragment for " + key);
        out.delex_tokens.insert(out.delex_tokens.end(), frag->second.begin(), frag->second.end());
    }
    auto cl = closers_.find(canon.act_type);
    if (cl != closers_.end()) out.delex_tokens.push_back(cl->second);
    out.delex_tokens.emplace_back(Vocabulary::kEos);
    out.surface_tokens = relexicalize_lenient(out.delex_tokens, canon, ont).tokens;
    return out;
}

}  // namespace nlgen
