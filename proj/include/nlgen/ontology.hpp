#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "nlgen/errors.hpp"
#include "nlgen/linalg.hpp"

namespace nlgen {

enum class ValueKind { categorical, dont_care, yes, no, unvalued };

/// Column of a slot's 4-wide feature block. Categorical and unvalued slots
/// share the leading "value" column since values themselves are
/// delexicalised away.
enum class SlotCategory : int { value = 0, dont_care = 1, yes = 2, no = 3 };

SlotCategory category_of(ValueKind kind);

struct SlotValue {
    ValueKind kind = ValueKind::unvalued;
    std::string text;  // categorical values only, lowercase

    bool operator==(const SlotValue&) const = default;

    static SlotValue categorical(std::string t) { return {ValueKind::categorical, std::move(t)}; }
    static SlotValue dont_care() { return {ValueKind::dont_care, {}}; }
    static SlotValue yes() { return {ValueKind::yes, {}}; }
    static SlotValue no() { return {ValueKind::no, {}}; }
    static SlotValue unvalued() { return {ValueKind::unvalued, {}}; }
};

struct SlotDef {
    std::string name;
    bool binary = false;  // yes/no only; never delexicalised
};

struct DaPair {
    int slot = -1;
    SlotValue value;

    bool operator==(const DaPair&) const = default;
};

struct DialogueAct {
    int act_type = -1;
    std::vector<DaPair> pairs;

    bool operator==(const DialogueAct&) const = default;
};

/// Domain definition: act types and slots with fixed orderings that drive
/// every 1-hot encoding in the system. Immutable after construction.
class Ontology {
public:
    Ontology(std::vector<std::string> act_types, std::vector<SlotDef> slots);

    /// The built-in restaurant-information domain: 8 act types, 12 slots of
    /// which only `kidsallowed` is binary.
    static Ontology restaurant();

    static Ontology from_json_text(const std::string& text);
    static Ontology from_json_file(const std::string& path);
    std::string to_json_text() const;

    const std::vector<std::string>& act_types() const { return act_types_; }
    const std::vector<SlotDef>& slots() const { return slots_; }

    int act_index(std::string_view name) const;   // -1 when unknown
    int slot_index(std::string_view name) const;  // -1 when unknown

    bool slot_binary(int slot) const { return slots_[slot].binary; }
    bool slot_delexicalisable(int slot) const { return !slots_[slot].binary; }

    /// Placeholder token for a delexicalisable slot, e.g. "SLOT_PRICERANGE".
    const std::string& slot_token(int slot) const { return slot_tokens_[slot]; }
    /// Slot index of a placeholder token, -1 for ordinary tokens.
    int slot_of_token(std::string_view token) const;

    std::size_t act_count() const { return act_types_.size(); }
    std::size_t slot_count() const { return slots_.size(); }
    /// act block + one 4-wide category block per slot.
    std::size_t feature_dim() const { return act_types_.size() + 4 * slots_.size(); }
    std::size_t slot_block_offset(int slot) const { return act_types_.size() + 4 * slot; }

    bool operator==(const Ontology& o) const {
        return act_types_ == o.act_types_ && slots_equal(o);
    }

private:
    bool slots_equal(const Ontology& o) const;

    std::vector<std::string> act_types_;
    std::vector<SlotDef> slots_;
    std::vector<std::string> slot_tokens_;
};

/// Fixed-width control features for a dialogue act: 1-hot act block followed
/// by per-slot blocks of [value, dontcare, yes, no] bits.
struct ControlVector {
    Vector values;

    bool operator==(const ControlVector&) const = default;
};

/// Parses the canonical dialogue-act string form, e.g.
///   inform(name="stroganoff restaurant",pricerange=cheap)
/// Grammar: ACT '(' [pair (',' pair)*] ')', pair = slot ['=' value],
/// value = quoted string | bareword. Throws ParseError with a position.
DialogueAct parse_da(std::string_view text, const Ontology& ont);

/// Prints an act in the same grammar parse_da accepts; categorical values are
/// always quoted.
std::string render_da(const DialogueAct& da, const Ontology& ont);

/// Collapses duplicate (slot, category) pairs (first occurrence wins) and
/// orders pairs by slot, then by category. Distinct categories of the same
/// slot are all retained.
DialogueAct canonicalize_da(DialogueAct da, const Ontology& ont);

/// 1-hot encoding of a canonical act. The act block has exactly one bit set;
/// each pair sets one category bit in its slot's block.
ControlVector encode_control(const DialogueAct& da, const Ontology& ont);

/// Canonical identity of an act at delexicalised granularity: the act type
/// plus the multiset of (slot, category) pairs. Value text is excluded.
std::string da_key(const DialogueAct& da, const Ontology& ont);

/// Acts carrying at least one dontcare/yes/no pair; these have no explicit
/// value in the text to delexicalise.
bool is_hard_act(const DialogueAct& da);

}  // namespace nlgen
