#pragma once

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "permem/backend/backend.hpp"
#include "permem/backend/json_extract.hpp"
#include "permem/memory_bank.hpp"
#include "permem/model.hpp"
#include "permem/prompts.hpp"
#include "permem/text.hpp"

namespace permem {

struct InsertOp {
    std::string text;
    bool operator==(const InsertOp&) const = default;
};

struct UpdateOp {
    EntryId entry_id = 0;
    std::string text;
    bool operator==(const UpdateOp&) const = default;
};

struct DeleteOp {
    EntryId entry_id = 0;
    bool operator==(const DeleteOp&) const = default;
};

using MemoryOp = std::variant<InsertOp, UpdateOp, DeleteOp>;

struct MemoryOpPlan {
    std::vector<MemoryOp> ops;
    bool operator==(const MemoryOpPlan&) const = default;
};

enum class Granularity { session_level, turn_level };

inline std::string_view to_string(Granularity g) { return g == Granularity::session_level ? "session" : "turn"; }

inline std::optional<Granularity> parse_granularity(std::string_view s) {
    if (s == "session" || s == "session_level") return Granularity::session_level;
    if (s == "turn" || s == "turn_level") return Granularity::turn_level;
    return std::nullopt;
}

struct ExtractionResult {
    MemoryOpPlan plan;
    std::vector<std::string> warnings;
    std::optional<std::string> error;  // extraction failed; plan is empty
};

class Extractor {
public:
    virtual ~Extractor() = default;
    virtual ExtractionResult extract(std::span<const Turn> dialogue, std::span<const ScoredEntry> bank_view) = 0;
};

// Test extractor: one Insert per user line that starts with "FACT:".
class MarkerExtractor final : public Extractor {
public:
    static constexpr std::string_view kMarker = "FACT:";

    ExtractionResult extract(std::span<const Turn> dialogue, std::span<const ScoredEntry>) override {
        if (dialogue.empty()) throw ValidationError("extract_ops: empty dialogue");
        ExtractionResult r;
        for (const auto& t : dialogue) {
            if (t.speaker != Speaker::user) continue;
            for (auto line : text::split_lines(t.text)) {
                line = text::trim(line);
                if (!text::starts_with(line, kMarker)) continue;
                const auto fact = text::trim(line.substr(kMarker.size()));
                if (!fact.empty()) r.plan.ops.push_back(InsertOp{std::string(fact)});
            }
        }
        return r;
    }
};

// Parses {"ops":[{"insert":"x"},{"update":{"id":3,"text":"y"}},{"delete":5}]}.
// Returns nullopt when the reply has no usable ops array; malformed
// individual ops are skipped with a warning.
inline std::optional<MemoryOpPlan> parse_op_plan(std::string_view reply, std::vector<std::string>& warnings) {
    const auto j = extract_json_object(reply);
    if (!j || !j->contains("ops") || !(*j)["ops"].is_array()) return std::nullopt;
    MemoryOpPlan plan;
    for (const auto& op : (*j)["ops"]) {
        if (!op.is_object() || op.size() != 1) {
            warnings.push_back("skipped malformed op: " + op.dump());
            continue;
        }
        const auto& [key, val] = *op.items().begin();
        if (key == "insert" && val.is_string() && !text::trim(val.get<std::string>()).empty()) {
            plan.ops.push_back(InsertOp{val.get<std::string>()});
        } else if (key == "update" && val.is_object() && val.contains("id") && val["id"].is_number_integer() &&
                   val.contains("text") && val["text"].is_string() &&
                   !text::trim(val["text"].get<std::string>()).empty()) {
            plan.ops.push_back(UpdateOp{val["id"].get<EntryId>(), val["text"].get<std::string>()});
        } else if (key == "delete" && val.is_number_integer()) {
            plan.ops.push_back(DeleteOp{val.get<EntryId>()});
        } else {
            warnings.push_back("skipped malformed op: " + op.dump());
        }
    }
    return plan;
}

class BackendExtractor final : public Extractor {
public:
    BackendExtractor(Generator& backend, const PromptSet& prompts, std::string model_id)
        : backend_(&backend), prompts_(&prompts), model_id_(std::move(model_id)) {}

    ExtractionResult extract(std::span<const Turn> dialogue, std::span<const ScoredEntry> bank_view) override {
        if (dialogue.empty()) throw ValidationError("extract_ops: empty dialogue");
        std::string view;
        for (const auto& s : bank_view) view += std::to_string(s.entry.entry_id) + ": " + s.entry.text + "\n";
        if (view.empty()) view = "(none)\n";
        const auto prompt =
            prompts_->render("memory_extract", {{"bank_view", view}, {"dialogue", format_dialogue(dialogue)}});
        ExtractionResult r;
        for (int attempt = 0; attempt < 2; ++attempt) {
            const auto reply = backend_->generate(GenerationRequest::single("", prompt, model_id_));
            std::vector<std::string> warnings;
            if (auto plan = parse_op_plan(reply, warnings)) {
                r.plan = std::move(*plan);
                r.warnings = std::move(warnings);
                return r;
            }
        }
        r.error = "extraction_error: unparseable extractor output after retry";
        return r;
    }

private:
    Generator* backend_;
    const PromptSet* prompts_;
    std::string model_id_;
};

struct AppliedOp {
    std::string kind;  // insert | update | delete
    EntryId entry_id = 0;
    std::string text;
    std::optional<int> turn;  // user-turn index under turn-level granularity

    bool operator==(const AppliedOp&) const = default;
};

struct SessionTrace {
    int session_id = 0;
    std::string domain;
    bool gate = false;
    int extractor_calls = 0;
    std::vector<AppliedOp> ops;
    std::vector<EntryId> evicted;
    std::vector<std::string> warnings;
    std::vector<std::string> errors;
    std::size_t bank_size = 0;
};

inline json to_json(const SessionTrace& t) {
    json ops = json::array();
    for (const auto& op : t.ops) {
        json o = {{"op", op.kind}, {"entry_id", op.entry_id}};
        if (op.kind != "delete") o["text"] = op.text;
        if (op.turn) o["turn"] = *op.turn;
        ops.push_back(std::move(o));
    }
    return {{"session_id", t.session_id}, {"domain", t.domain},     {"gate", t.gate},
            {"extractor_calls", t.extractor_calls}, {"ops", ops}, {"evicted", t.evicted},
            {"warnings", t.warnings}, {"errors", t.errors},      {"bank_size", t.bank_size}};
}

struct ApplyOptions {
    Granularity granularity = Granularity::session_level;
    std::size_t bank_view_size = 10;
};

namespace detail {

inline void apply_plan(MemoryBank& bank, const Session& session, const MemoryOpPlan& plan, std::optional<int> turn,
                       SessionTrace& trace) {
    for (const auto& op : plan.ops) {
        if (const auto* ins = std::get_if<InsertOp>(&op)) {
            const EntryId id = bank.insert(ins->text, session.session_id, session.domain);
            trace.ops.push_back({"insert", id, ins->text, turn});
        } else if (const auto* upd = std::get_if<UpdateOp>(&op)) {
            if (!bank.contains(upd->entry_id)) {
                trace.warnings.push_back("dropped update of unknown entry " + std::to_string(upd->entry_id));
                continue;
            }
            bank.update(upd->entry_id, upd->text);
            trace.ops.push_back({"update", upd->entry_id, upd->text, turn});
        } else {
            const auto& del = std::get<DeleteOp>(op);
            if (!bank.contains(del.entry_id)) {
                trace.warnings.push_back("dropped delete of unknown entry " + std::to_string(del.entry_id));
                continue;
            }
            bank.remove(del.entry_id);
            trace.ops.push_back({"delete", del.entry_id, {}, turn});
        }
    }
}

inline std::vector<ScoredEntry> bank_view(const MemoryBank& bank, std::string_view query, std::size_t m) {
    if (bank.empty() || text::trim(query).empty()) return {};
    return bank.retrieve_top_k(query, m);
}

inline void run_extraction(MemoryBank& bank, const Session& session, std::span<const Turn> dialogue,
                           std::string_view query, std::optional<int> turn, Extractor& extractor,
                           const ApplyOptions& opts, SessionTrace& trace) {
    const auto view = bank_view(bank, query, opts.bank_view_size);
    auto result = extractor.extract(dialogue, view);
    ++trace.extractor_calls;
    for (auto& w : result.warnings) trace.warnings.push_back(std::move(w));
    if (result.error) trace.errors.push_back(*result.error);
    apply_plan(bank, session, result.plan, turn, trace);
}

}  // namespace detail

// Runs the memory pipeline for one session. With gate=false nothing is
// extracted and the bank only advances its session counter.
inline SessionTrace apply_session(MemoryBank& bank, const Session& session, bool gate, Extractor& extractor,
                                  const ApplyOptions& opts = {}) {
    if (session.turns.empty()) throw ValidationError("session " + std::to_string(session.session_id) + " has no turns");
    SessionTrace trace;
    trace.session_id = session.session_id;
    trace.domain = session.domain;
    trace.gate = gate;
    if (gate) {
        if (opts.granularity == Granularity::session_level) {
            detail::run_extraction(bank, session, session.turns, session.user_text(), std::nullopt, extractor, opts,
                                   trace);
        } else {
            // One extraction per user turn, paired with the agent reply that follows it.
            int user_turn = 0;
            const std::span<const Turn> turns(session.turns);
            for (std::size_t i = 0; i < turns.size(); ++i) {
                if (turns[i].speaker != Speaker::user) continue;
                const std::size_t len = (i + 1 < turns.size() && turns[i + 1].speaker == Speaker::agent) ? 2 : 1;
                detail::run_extraction(bank, session, turns.subspan(i, len), turns[i].text, user_turn, extractor,
                                       opts, trace);
                ++user_turn;
            }
        }
    }
    trace.evicted = bank.end_session(session.session_id);
    trace.bank_size = bank.size();
    return trace;
}

}  // namespace permem
