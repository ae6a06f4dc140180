#include "nlgen/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace nlgen {

namespace {

using nlohmann::json;

std::string cat_name(SlotCategory cat) {
    switch (cat) {
        case SlotCategory::value: return "value";
        case SlotCategory::dont_care: return "dontcare";
        case SlotCategory::yes: return "yes";
        case SlotCategory::no: return "no";
    }
    return "value";
}

}  // namespace

std::vector<CorpusExample> load_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open corpus file: " + path);
    std::vector<CorpusExample> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        out.push_back({j.at("da").get<std::string>(), j.at("text").get<std::string>()});
    }
    return out;
}

void save_corpus(std::span<const CorpusExample> corpus, const std::string& path) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw DataError("cannot write corpus file: " + tmp);
        for (const CorpusExample& ex : corpus) {
            json j{{"da", ex.da_string}, {"text", ex.text}};
            out << j.dump() << '\n';
        }
    }
    std::rename(tmp.c_str(), path.c_str());
}

PreparedExample prepare_example(const CorpusExample& ex, const Ontology& ont,
                                std::vector<std::string>* warnings) {
    PreparedExample p;
    p.da = canonicalize_da(parse_da(ex.da_string, ont), ont);
    p.control = encode_control(p.da, ont);
    p.delex = delexicalize(ex.text, p.da, ont, warnings);
    p.key = da_key(p.da, ont);
    p.hard = is_hard_act(p.da);
    return p;
}

namespace {

ValueKind kind_from_cat_string(const std::string& s) {
    if (s == "value") return ValueKind::categorical;
    if (s == "dontcare") return ValueKind::dont_care;
    if (s == "yes") return ValueKind::yes;
    if (s == "no") return ValueKind::no;
    if (s == "unvalued") return ValueKind::unvalued;
    throw DataError("unknown slot category '" + s + "' in template pack");
}

TemplatePack::SlotSpec parse_spec(const json& j, const Ontology& ont) {
    TemplatePack::SlotSpec spec;
    std::string slot = j.at("slot").get<std::string>();
    spec.slot = ont.slot_index(slot);
    if (spec.slot < 0) throw DataError("template pack references unknown slot '" + slot + "'");
    spec.kind = kind_from_cat_string(j.value("cat", "value"));
    spec.cat = category_of(spec.kind);
    return spec;
}

}  // namespace

TemplatePack TemplatePack::from_json_text(const std::string& text, const Ontology& ont) {
    json j = json::parse(text);
    TemplatePack pack;
    pack.ont_ = &ont;

    for (auto it = j.at("values").begin(); it != j.at("values").end(); ++it) {
        if (ont.slot_index(it.key()) < 0)
            throw DataError("value list for unknown slot '" + it.key() + "'");
        pack.values_[it.key()] = it.value().get<std::vector<std::string>>();
    }
    for (const json& ja : j.at("acts")) {
        ActTemplates at;
        std::string act = ja.at("act").get<std::string>();
        at.act = ont.act_index(act);
        if (at.act < 0) throw DataError("template pack references unknown act '" + act + "'");
        at.weight = ja.value("weight", 1.0);
        for (const json& je : ja.at("entries")) {
            Entry e;
            e.weight = je.value("weight", 1.0);
            for (const json& jo : je.at("openers"))
                e.openers.push_back(tokenize(jo.get<std::string>()));
            if (je.contains("required"))
                for (const json& jr : je.at("required")) e.required.push_back(parse_spec(jr, ont));
            if (je.contains("optional")) {
                const json& opt = je.at("optional");
                e.min_optional = opt.value("min", 0);
                e.max_optional = opt.value("max", 0);
                for (const json& jp : opt.at("pool")) e.optional_pool.push_back(parse_spec(jp, ont));
            }
            if (je.contains("closer")) e.closer = tokenize(je.at("closer").get<std::string>());
            at.entries.push_back(std::move(e));
        }
        pack.acts_.push_back(std::move(at));
    }
    if (j.contains("fragments")) {
        for (auto it = j.at("fragments").begin(); it != j.at("fragments").end(); ++it) {
            std::vector<std::vector<std::string>> variants;
            for (const json& jv : it.value()) variants.push_back(tokenize(jv.get<std::string>()));
            pack.fragments_[it.key()] = std::move(variants);
        }
    }
    pack.validate();
    return pack;
}

TemplatePack TemplatePack::load(const std::string& path, const Ontology& ont) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open template pack: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str(), ont);
}

const std::vector<std::vector<std::string>>& TemplatePack::fragment_variants(
    int act, const SlotSpec& spec) const {
    std::string base = ont_->slots()[spec.slot].name + ":" + cat_name(spec.cat);
    auto it = fragments_.find(ont_->act_types()[act] + "/" + base);
    if (it == fragments_.end()) it = fragments_.find(base);
    if (it == fragments_.end() || it->second.empty())
        throw DataError("template pack lacks fragment '" + base + "'");
    return it->second;
}

void TemplatePack::validate() const {
    for (const ActTemplates& at : acts_) {
        if (at.entries.empty())
            throw DataError("act '" + ont_->act_types()[at.act] + "' has no template entries");
        for (const Entry& e : at.entries) {
            if (e.openers.empty()) throw DataError("template entry without openers");
            std::set<int> required_slots;
            for (const SlotSpec& s : e.required) {
                required_slots.insert(s.slot);
                if (s.kind == ValueKind::categorical &&
                    !values_.count(ont_->slots()[s.slot].name))
                    throw DataError("no value list for slot '" + ont_->slots()[s.slot].name + "'");
            }
            for (const std::vector<std::string>& opener : e.openers) {
                for (const std::string& tok : opener) {
                    int slot = ont_->slot_of_token(tok);
                    if (slot >= 0 && !required_slots.count(slot))
                        throw DataError("opener references slot '" + ont_->slots()[slot].name +
                                        "' outside the entry's required slots");
                }
            }
            if (e.max_optional < e.min_optional)
                throw DataError("optional max below min in template entry");
            for (const SlotSpec& s : e.optional_pool) {
                std::string base = ont_->slots()[s.slot].name + ":" + cat_name(s.cat);
                bool found = fragments_.count(base);
                for (const ActTemplates& a2 : acts_) {
                    if (fragments_.count(ont_->act_types()[a2.act] + "/" + base)) found = true;
                }
                if (!found) throw DataError("no fragment for optional spec '" + base + "'");
                if (s.kind == ValueKind::categorical &&
                    !values_.count(ont_->slots()[s.slot].name))
                    throw DataError("no value list for slot '" + ont_->slots()[s.slot].name + "'");
            }
        }
    }
}

CorpusExample TemplatePack::sample(Rng& rng) const {
    Vector act_weights;
    for (const ActTemplates& at : acts_) act_weights.push_back(at.weight);
    const ActTemplates& act = acts_[rng.categorical(act_weights)];

    Vector entry_weights;
    for (const Entry& e : act.entries) entry_weights.push_back(e.weight);
    const Entry& entry = act.entries[rng.categorical(entry_weights)];

    const std::vector<std::string>& opener =
        entry.openers[rng.below(entry.openers.size())];

    // Subset of the optional pool, kept in pool order.
    std::vector<std::size_t> pool_indices(entry.optional_pool.size());
    for (std::size_t i = 0; i < pool_indices.size(); ++i) pool_indices[i] = i;
    int want = entry.min_optional;
    if (entry.max_optional > entry.min_optional)
        want += static_cast<int>(rng.below(entry.max_optional - entry.min_optional + 1));
    want = std::min<int>(want, static_cast<int>(pool_indices.size()));
    rng.shuffle(pool_indices);
    std::vector<std::size_t> chosen(pool_indices.begin(), pool_indices.begin() + want);
    std::sort(chosen.begin(), chosen.end());
    // Drop duplicate (slot, category) picks; pools never repeat specs, so this
    // only guards hand-edited packs.
    std::vector<SlotSpec> optional;
    for (std::size_t idx : chosen) optional.push_back(entry.optional_pool[idx]);

    DialogueAct da;
    da.act_type = act.act;
    std::vector<std::string> text;

    auto pick_value = [&](const SlotSpec& spec) -> std::string {
        const auto& list = values_.at(ont_->slots()[spec.slot].name);
        return list[rng.below(list.size())];
    };
    auto add_pair = [&](const SlotSpec& spec, const std::string& value) {
        SlotValue v;
        switch (spec.kind) {
            case ValueKind::categorical: v = SlotValue::categorical(value); break;
            case ValueKind::dont_care: v = SlotValue::dont_care(); break;
            case ValueKind::yes: v = SlotValue::yes(); break;
            case ValueKind::no: v = SlotValue::no(); break;
            case ValueKind::unvalued: v = SlotValue::unvalued(); break;
        }
        da.pairs.push_back({spec.slot, std::move(v)});
    };
    auto append_tokens = [&](std::span<const std::string> tokens,
                             const std::map<int, std::string>& slot_values) {
        for (const std::string& tok : tokens) {
            int slot = ont_->slot_of_token(tok);
            if (slot >= 0) {
                for (const std::string& vt : tokenize(slot_values.at(slot)))
                    text.push_back(vt);
            } else {
                text.push_back(tok);
            }
        }
    };

    std::map<int, std::string> required_values;
    for (const SlotSpec& spec : entry.required) {
        std::string value;
        if (spec.kind == ValueKind::categorical) {
            value = pick_value(spec);
            required_values[spec.slot] = value;
        }
        add_pair(spec, value);
    }
    append_tokens(opener, required_values);

    for (const SlotSpec& spec : optional) {
        std::string value;
        if (spec.kind == ValueKind::categorical) value = pick_value(spec);
        add_pair(spec, value);

        const auto& variants = fragment_variants(act.act, spec);
        const std::vector<std::string>& fragment = variants[rng.below(variants.size())];
        std::map<int, std::string> local{{spec.slot, value}};
        append_tokens(fragment, local);
    }
    if (!entry.closer.empty()) text.insert(text.end(), entry.closer.begin(), entry.closer.end());

    return {render_da(da, *ont_), join_tokens(text)};
}

std::vector<CorpusExample> TemplatePack::generate(std::size_t count, std::uint64_t seed) const {
    Rng rng(seed);
    std::vector<CorpusExample> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(sample(rng));
    return out;
}

std::size_t count_distinct_keys(std::span<const CorpusExample> corpus, const Ontology& ont) {
    std::set<std::string> keys;
    for (const CorpusExample& ex : corpus) keys.insert(da_key(parse_da(ex.da_string, ont), ont));
    return keys.size();
}

CorpusSplit prepare_splits(std::span<const CorpusExample> corpus, std::uint64_t seed,
                           const Ontology& ont) {
    if (corpus.size() < 5) throw DataError("corpus too small to split 3:1:1");
    std::vector<CorpusExample> shuffled(corpus.begin(), corpus.end());
    Rng rng(seed);
    rng.shuffle(shuffled);

    std::size_t n = shuffled.size();
    std::size_t n_train = (3 * n) / 5;
    std::size_t n_valid = n / 5;

    CorpusSplit split;
    split.train.assign(shuffled.begin(), shuffled.begin() + n_train);
    split.valid.assign(shuffled.begin() + n_train, shuffled.begin() + n_train + n_valid);
    split.test.assign(shuffled.begin() + n_train + n_valid, shuffled.end());
    split.train_upsampled = upsample_by_act(split.train, ont);
    return split;
}

std::vector<CorpusExample> upsample_by_act(std::span<const CorpusExample> train,
                                           const Ontology& ont, int cap) {
    std::vector<std::vector<std::size_t>> by_act(ont.act_count());
    for (std::size_t i = 0; i < train.size(); ++i) {
        DialogueAct da = parse_da(train[i].da_string, ont);
        by_act[da.act_type].push_back(i);
    }
    std::size_t max_count = 0;
    for (const auto& v : by_act) max_count = std::max(max_count, v.size());

    std::vector<CorpusExample> out(train.begin(), train.end());
    for (std::size_t a = 0; a < by_act.size(); ++a) {
        const auto& members = by_act[a];
        if (members.empty()) continue;
        std::size_t target = std::min(max_count, members.size() * static_cast<std::size_t>(cap));
        std::size_t have = members.size();
        std::size_t next = 0;
        while (have < target) {
            out.push_back(train[members[next]]);
            next = (next + 1) % members.size();
            ++have;
        }
    }
    return out;
}

}  // namespace nlgen
