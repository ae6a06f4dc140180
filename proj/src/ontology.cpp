#include "nlgen/ontology.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace nlgen {

namespace {

std::string upper(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return out;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

}  // namespace

SlotCategory category_of(ValueKind kind) {
    switch (kind) {
        case ValueKind::categorical:
        case ValueKind::unvalued:
            return SlotCategory::value;
        case ValueKind::dont_care:
            return SlotCategory::dont_care;
        case ValueKind::yes:
            return SlotCategory::yes;
        case ValueKind::no:
            return SlotCategory::no;
    }
    return SlotCategory::value;
}

Ontology::Ontology(std::vector<std::string> act_types, std::vector<SlotDef> slots)
    : act_types_(std::move(act_types)), slots_(std::move(slots)) {
    slot_tokens_.reserve(slots_.size());
    for (const SlotDef& s : slots_) slot_tokens_.push_back("SLOT_" + upper(s.name));
}

Ontology Ontology::restaurant() {
    return Ontology(
        {"inform", "reject", "informonly", "confirm", "request", "reqmore", "select",
         "goodbye"},
        {{"name", false},
         {"count", false},
         {"food", false},
         {"near", false},
         {"price", false},
         {"pricerange", false},
         {"postcode", false},
         {"phone", false},
         {"address", false},
         {"area", false},
         {"goodformeal", false},
         {"kidsallowed", true}});
}

Ontology Ontology::from_json_text(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    std::vector<std::string> acts = j.at("act_types").get<std::vector<std::string>>();
    std::vector<SlotDef> slots;
    for (const auto& s : j.at("slots")) {
        slots.push_back({s.at("name").get<std::string>(), s.value("binary", false)});
    }
    if (acts.empty() || slots.empty()) throw DataError("ontology needs act types and slots");
    return Ontology(std::move(acts), std::move(slots));
}

Ontology Ontology::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open ontology file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

std::string Ontology::to_json_text() const {
    nlohmann::json j;
    j["act_types"] = act_types_;
    j["slots"] = nlohmann::json::array();
    for (const SlotDef& s : slots_) j["slots"].push_back({{"name", s.name}, {"binary", s.binary}});
    return j.dump();
}

int Ontology::act_index(std::string_view name) const {
    for (std::size_t i = 0; i < act_types_.size(); ++i)
        if (act_types_[i] == name) return static_cast<int>(i);
    return -1;
}

int Ontology::slot_index(std::string_view name) const {
    for (std::size_t i = 0; i < slots_.size(); ++i)
        if (slots_[i].name == name) return static_cast<int>(i);
    return -1;
}

int Ontology::slot_of_token(std::string_view token) const {
    for (std::size_t i = 0; i < slot_tokens_.size(); ++i)
        if (slot_tokens_[i] == token && slot_delexicalisable(static_cast<int>(i)))
            return static_cast<int>(i);
    return -1;
}

bool Ontology::slots_equal(const Ontology& o) const {
    if (slots_.size() != o.slots_.size()) return false;
    for (std::size_t i = 0; i < slots_.size(); ++i)
        if (slots_[i].name != o.slots_[i].name || slots_[i].binary != o.slots_[i].binary)
            return false;
    return true;
}

namespace {

struct DaLexer {
    std::string_view text;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }

    bool at_end() {
        skip_ws();
        return pos >= text.size();
    }

    char peek() {
        skip_ws();
        return pos < text.size() ? text[pos] : '\0';
    }

    void expect(char c) {
        skip_ws();
        if (pos >= text.size() || text[pos] != c)
            throw ParseError(std::string("expected '") + c + "'", pos);
        ++pos;
    }

    static bool word_char(char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
    }

    std::string word() {
        skip_ws();
        std::size_t start = pos;
        while (pos < text.size() && word_char(text[pos])) ++pos;
        if (pos == start) throw ParseError("expected identifier", start);
        return std::string(text.substr(start, pos - start));
    }

    std::string quoted() {
        // caller saw the opening quote
        ++pos;
        std::size_t start = pos;
        while (pos < text.size() && text[pos] != '"') ++pos;
        if (pos >= text.size()) throw ParseError("unterminated quoted value", start - 1);
        std::string out(text.substr(start, pos - start));
        ++pos;
        return out;
    }
};

SlotValue bareword_value(const std::string& raw, int slot, const Ontology& ont,
                         std::size_t pos) {
    std::string v = lower(raw);
    if (v == "dontcare" || v == "dont_care") return SlotValue::dont_care();
    if (ont.slot_binary(slot)) {
        if (v == "yes" || v == "true") return SlotValue::yes();
        if (v == "no" || v == "false") return SlotValue::no();
        throw ParseError("binary slot takes yes/no, got '" + raw + "'", pos);
    }
    return SlotValue::categorical(v);
}

}  // namespace

DialogueAct parse_da(std::string_view text, const Ontology& ont) {
    DaLexer lex{text};
    std::size_t act_pos = lex.pos;
    std::string act = lex.word();
    int act_idx = ont.act_index(act);
    if (act_idx < 0) throw ParseError("unknown act type '" + act + "'", act_pos);

    DialogueAct da;
    da.act_type = act_idx;
    lex.expect('(');
    if (lex.peek() != ')') {
        while (true) {
            lex.skip_ws();
            std::size_t slot_pos = lex.pos;
            std::string slot_name = lex.word();
            int slot = ont.slot_index(lower(slot_name));
            if (slot < 0) throw ParseError("unknown slot '" + slot_name + "'", slot_pos);

            SlotValue value = SlotValue::unvalued();
            if (lex.peek() == '=') {
                lex.expect('=');
                lex.skip_ws();
                std::size_t val_pos = lex.pos;
                if (lex.peek() == '"') {
                    value = SlotValue::categorical(lower(lex.quoted()));
                    if (value.text.empty())
                        throw ParseError("empty categorical value", val_pos);
                    if (ont.slot_binary(slot)) {
                        value = bareword_value(value.text, slot, ont, val_pos);
                    }
                } else {
                    value = bareword_value(lex.word(), slot, ont, val_pos);
                }
            }
            da.pairs.push_back({slot, std::move(value)});
            if (lex.peek() == ',') {
                lex.expect(',');
                continue;
            }
            break;
        }
    }
    lex.expect(')');
    if (!lex.at_end()) throw ParseError("trailing characters after ')'", lex.pos);
    return da;
}

std::string render_da(const DialogueAct& da, const Ontology& ont) {
    std::string out = ont.act_types()[da.act_type];
    out += '(';
    for (std::size_t i = 0; i < da.pairs.size(); ++i) {
        if (i) out += ',';
        const DaPair& p = da.pairs[i];
        out += ont.slots()[p.slot].name;
        switch (p.value.kind) {
            case ValueKind::categorical:
                out += "=\"" + p.value.text + "\"";
                break;
            case ValueKind::dont_care:
                out += "=dontcare";
                break;
            case ValueKind::yes:
                out += "=yes";
                break;
            case ValueKind::no:
                out += "=no";
                break;
            case ValueKind::unvalued:
                break;
        }
    }
    out += ')';
    return out;
}

DialogueAct canonicalize_da(DialogueAct da, const Ontology& ont) {
    (void)ont;
    std::vector<DaPair> kept;
    for (DaPair& p : da.pairs) {
        bool dup = false;
        for (const DaPair& q : kept) {
            if (q.slot == p.slot && category_of(q.value.kind) == category_of(p.value.kind)) {
                dup = true;
                break;
            }
        }
        if (!dup) kept.push_back(std::move(p));
    }
    std::stable_sort(kept.begin(), kept.end(), [](const DaPair& a, const DaPair& b) {
        if (a.slot != b.slot) return a.slot < b.slot;
        return static_cast<int>(category_of(a.value.kind)) <
               static_cast<int>(category_of(b.value.kind));
    });
    da.pairs = std::move(kept);
    return da;
}

ControlVector encode_control(const DialogueAct& da, const Ontology& ont) {
    ControlVector cv;
    cv.values.assign(ont.feature_dim(), 0.0);
    cv.values[da.act_type] = 1.0;
    for (const DaPair& p : da.pairs) {
        std::size_t offset = ont.slot_block_offset(p.slot);
        cv.values[offset + static_cast<int>(category_of(p.value.kind))] = 1.0;
    }
    return cv;
}

std::string da_key(const DialogueAct& da, const Ontology& ont) {
    DialogueAct canon = canonicalize_da(da, ont);
    std::string key = ont.act_types()[canon.act_type];
    static const char* kCatNames[] = {"v", "dc", "y", "n"};
    for (const DaPair& p : canon.pairs) {
        key += '|';
        key += ont.slots()[p.slot].name;
        key += ':';
        key += kCatNames[static_cast<int>(category_of(p.value.kind))];
    }
    return key;
}

bool is_hard_act(const DialogueAct& da) {
    for (const DaPair& p : da.pairs) {
        if (p.value.kind == ValueKind::dont_care || p.value.kind == ValueKind::yes ||
            p.value.kind == ValueKind::no)
            return true;
    }
    return false;
}

}  // namespace nlgen
