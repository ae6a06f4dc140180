#include "nlgen/delex.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace nlgen {

namespace {

bool is_punct(char c) {
    return c == '.' || c == ',' || c == '?' || c == '!' || c == ';' || c == ':';
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::string padded;
    padded.reserve(text.size() + 8);
    for (char c : text) {
        if (is_punct(c)) {
            padded += ' ';
            padded += c;
            padded += ' ';
        } else {
            padded += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
    }
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < padded.size()) {
        while (i < padded.size() && std::isspace(static_cast<unsigned char>(padded[i]))) ++i;
        std::size_t start = i;
        while (i < padded.size() && !std::isspace(static_cast<unsigned char>(padded[i]))) ++i;
        if (i > start) tokens.emplace_back(padded.substr(start, i - start));
    }
    return tokens;
}

std::string join_tokens(std::span<const std::string> tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out += ' ';
        out += tokens[i];
    }
    return out;
}

DelexUtterance delexicalize(std::string_view text, const DialogueAct& da, const Ontology& ont,
                            std::vector<std::string>* warnings) {
    std::vector<std::string> tokens = tokenize(text);

    struct ValueTarget {
        int slot;
        std::vector<std::string> value_tokens;
        std::string value;
        bool replaced = false;
    };
    std::vector<ValueTarget> targets;
    for (const DaPair& p : da.pairs) {
        if (p.value.kind != ValueKind::categorical) continue;
        if (!ont.slot_delexicalisable(p.slot)) continue;
        targets.push_back({p.slot, tokenize(p.value.text), p.value.text, false});
    }
    // Longest value first so that "san francisco deli" wins over "san
    // francisco"; ties keep act order.
    std::stable_sort(targets.begin(), targets.end(), [](const auto& a, const auto& b) {
        if (a.value_tokens.size() != b.value_tokens.size())
            return a.value_tokens.size() > b.value_tokens.size();
        return a.value.size() > b.value.size();
    });

    struct Replacement {
        std::size_t start;
        std::size_t len;
        int slot;
        std::string value;
    };
    std::vector<Replacement> reps;
    std::vector<bool> taken(tokens.size(), false);

    for (ValueTarget& t : targets) {
        if (t.value_tokens.empty()) continue;
        std::size_t n = t.value_tokens.size();
        for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
            bool free = true;
            for (std::size_t k = 0; k < n && free; ++k) free = !taken[i + k];
            if (!free) continue;
            bool match = true;
            for (std::size_t k = 0; k < n && match; ++k) match = tokens[i + k] == t.value_tokens[k];
            if (!match) continue;
            for (std::size_t k = 0; k < n; ++k) taken[i + k] = true;
            reps.push_back({i, n, t.slot, t.value});
            t.replaced = true;
        }
        if (!t.replaced && warnings) {
            warnings->push_back("value \"" + t.value + "\" for slot " +
                                ont.slots()[t.slot].name + " not found in utterance");
        }
    }
    std::sort(reps.begin(), reps.end(),
              [](const Replacement& a, const Replacement& b) { return a.start < b.start; });

    DelexUtterance out;
    out.tokens.emplace_back(Vocabulary::kBos);
    std::size_t i = 0;
    std::size_t rep_idx = 0;
    while (i < tokens.size()) {
        if (rep_idx < reps.size() && reps[rep_idx].start == i) {
            const Replacement& r = reps[rep_idx];
            out.lex_map.push_back({out.tokens.size(), r.slot, r.value});
            out.tokens.push_back(ont.slot_token(r.slot));
            i += r.len;
            ++rep_idx;
        } else {
            out.tokens.push_back(tokens[i]);
            ++i;
        }
    }
    out.tokens.emplace_back(Vocabulary::kEos);
    return out;
}

RelexResult relexicalize_lenient(std::span<const std::string> tokens, const DialogueAct& da,
                                 const Ontology& ont) {
    RelexResult out;
    for (const std::string& tok : tokens) {
        if (tok == Vocabulary::kBos || tok == Vocabulary::kEos) continue;
        int slot = ont.slot_of_token(tok);
        if (slot < 0) {
            out.tokens.push_back(tok);
            continue;
        }
        const std::string* value = nullptr;
        for (const DaPair& p : da.pairs) {
            if (p.slot == slot && p.value.kind == ValueKind::categorical) {
                value = &p.value.text;
                break;
            }
        }
        if (value) {
            for (std::string& vt : tokenize(*value)) out.tokens.push_back(std::move(vt));
        } else {
            out.tokens.push_back(tok);
            ++out.dangling;
        }
    }
    return out;
}

std::string relexicalize(const DelexUtterance& delex, const DialogueAct& da,
                         const Ontology& ont) {
    RelexResult r = relexicalize_lenient(delex.tokens, da, ont);
    if (r.dangling > 0)
        throw DanglingSlotError("utterance has " + std::to_string(r.dangling) +
                                    " slot token(s) without a value in the act",
                                r.dangling);
    return join_tokens(r.tokens);
}

Vocabulary Vocabulary::build(std::span<const DelexUtterance> corpus, const Ontology& ont) {
    std::vector<std::string> tokens = {std::string(kBos), std::string(kEos), std::string(kUnk)};
    for (std::size_t s = 0; s < ont.slot_count(); ++s) {
        if (ont.slot_delexicalisable(static_cast<int>(s)))
            tokens.push_back(ont.slot_token(static_cast<int>(s)));
    }
    std::set<std::string> reserved(tokens.begin(), tokens.end());
    std::set<std::string> rest;
    for (const DelexUtterance& u : corpus) {
        for (const std::string& t : u.tokens) {
            if (!reserved.count(t)) rest.insert(t);
        }
    }
    tokens.insert(tokens.end(), rest.begin(), rest.end());
    return from_tokens(std::move(tokens));
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
    Vocabulary v;
    v.tokens_ = std::move(tokens);
    for (std::size_t i = 0; i < v.tokens_.size(); ++i)
        v.index_.emplace(v.tokens_[i], static_cast<int>(i));
    return v;
}

int Vocabulary::id(std::string_view token) const {
    auto it = index_.find(std::string(token));
    return it == index_.end() ? -1 : it->second;
}

std::vector<int> Vocabulary::encode(std::span<const std::string> tokens) const {
    std::vector<int> ids;
    ids.reserve(tokens.size());
    for (const std::string& t : tokens) {
        int i = id(t);
        ids.push_back(i < 0 ? unk() : i);
    }
    return ids;
}

std::vector<std::string> Vocabulary::decode(std::span<const int> ids) const {
    std::vector<std::string> out;
    out.reserve(ids.size());
    for (int i : ids) out.push_back(tokens_[i]);
    return out;
}

std::vector<int> Vocabulary::slot_token_map(const Ontology& ont) const {
    std::vector<int> map(tokens_.size(), -1);
    for (std::size_t i = 0; i < tokens_.size(); ++i) map[i] = ont.slot_of_token(tokens_[i]);
    return map;
}

}  // namespace nlgen
