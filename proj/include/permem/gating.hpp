#pragma once

#include <algorithm>
#include <deque>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "permem/backend/backend.hpp"
#include "permem/backend/json_extract.hpp"
#include "permem/model.hpp"
#include "permem/prompts.hpp"
#include "permem/text.hpp"

namespace permem {

struct GateDecision {
    int session_id = 0;
    bool memory_required = true;
    std::string policy;
    std::string rationale;
    std::vector<std::string> warnings;

    bool operator==(const GateDecision&) const = default;
};

inline json to_json(const GateDecision& d) {
    json j = {{"session_id", d.session_id}, {"memory_required", d.memory_required}, {"policy", d.policy}};
    if (!d.rationale.empty()) j["rationale"] = d.rationale;
    if (!d.warnings.empty()) j["warnings"] = d.warnings;
    return j;
}

struct GatingOptions {
    std::size_t window = 5;             // Context-aware summaries kept
    std::size_t update_interval = 5;    // Structure-aware sessions per note update
    std::size_t max_chars = 8000;       // dialogue truncation for gate prompts
    std::string model_id;
};

inline GateDecision gate_universal(const Session& session) {
    return {session.session_id, true, "universal", {}, {}};
}

inline GateDecision gate_oracle(const Session& session, const AgentUseProfile& profile,
                                const std::optional<ProfileShift>& shift) {
    return {session.session_id, memory_required_at(profile, shift, session.domain, session.session_id), "oracle", {},
            {}};
}

namespace detail {

inline std::string gate_dialogue(const Session& s, std::size_t max_chars) {
    return text::truncate_utf8(format_dialogue(s.turns), max_chars);
}

// Strict-JSON {"memory_required": bool} with one retry; fallback is to store.
inline GateDecision ask_gate(Generator& backend, const std::string& prompt, const std::string& model_id,
                             int session_id, std::string policy) {
    GateDecision d{session_id, true, std::move(policy), {}, {}};
    for (int attempt = 0; attempt < 2; ++attempt) {
        const auto reply = backend.generate(GenerationRequest::single("", prompt, model_id));
        const auto j = extract_json_object(reply);
        if (j && j->contains("memory_required") && (*j)["memory_required"].is_boolean()) {
            d.memory_required = (*j)["memory_required"].get<bool>();
            if (auto r = j->find("reason"); r != j->end() && r->is_string()) d.rationale = r->get<std::string>();
            return d;
        }
        d.warnings.push_back("malformed gate reply (attempt " + std::to_string(attempt + 1) + ")");
    }
    d.rationale = "fallback: malformed reply, defaulting to store";
    return d;
}

}  // namespace detail

inline GateDecision gate_greedy(const Session& session, Generator& backend, const PromptSet& prompts,
                                const GatingOptions& opts = {}) {
    if (session.turns.empty()) throw ValidationError("gate_greedy: empty dialogue");
    const auto prompt =
        prompts.render("greedy_gate", {{"current_dialogue", detail::gate_dialogue(session, opts.max_chars)}});
    return detail::ask_gate(backend, prompt, opts.model_id, session.session_id, "greedy");
}

// Sliding window of the most recent session summaries.
class SummaryBuffer {
public:
    explicit SummaryBuffer(std::size_t capacity = 5) : capacity_(capacity) {
        if (capacity_ == 0) throw ConfigError("context window must be >= 1");
    }

    void push(int session_id, std::string summary) {
        if (!items_.empty() && session_id <= items_.back().first)
            throw ValidationError("summary buffer: session ids must increase");
        items_.emplace_back(session_id, std::move(summary));
        while (items_.size() > capacity_) items_.pop_front();
    }

    const std::deque<std::pair<int, std::string>>& items() const { return items_; }
    std::size_t capacity() const { return capacity_; }
    std::size_t size() const { return items_.size(); }

    std::string render() const {
        if (items_.empty()) return "(no previous sessions)";
        std::string out;
        for (const auto& [id, s] : items_) out += "[Session " + std::to_string(id) + "] " + s + "\n";
        return out;
    }

private:
    std::size_t capacity_;
    std::deque<std::pair<int, std::string>> items_;
};

inline GateDecision gate_context(const Session& session, SummaryBuffer& buffer, Generator& backend,
                                 const PromptSet& prompts, const GatingOptions& opts = {}) {
    if (session.turns.empty()) throw ValidationError("gate_context: empty dialogue");
    const auto dialogue = detail::gate_dialogue(session, opts.max_chars);
    const auto prompt = prompts.render("context_gate", {{"window", std::to_string(buffer.capacity())},
                                                        {"history_summaries", buffer.render()},
                                                        {"current_dialogue", dialogue}});
    auto d = detail::ask_gate(backend, prompt, opts.model_id, session.session_id, "context");
    const auto reply = backend.generate(
        GenerationRequest::single("", prompts.render("session_summary", {{"dialogue", dialogue}}), opts.model_id));
    // {"summary": "..."} when the model complies, the raw reply otherwise.
    std::string summary(text::trim(reply));
    if (const auto j = extract_json_object(reply); j && j->contains("summary") && (*j)["summary"].is_string())
        summary = std::string(text::trim((*j)["summary"].get<std::string>()));
    if (summary.empty()) {
        d.warnings.push_back("empty session summary");
        summary = "(no summary)";
    }
    buffer.push(session.session_id, std::move(summary));
    return d;
}

// ---------------------------------------------------------------------------
// Structure-aware gating

struct SessionRecord {
    int session_id = 0;
    std::string purpose;
    std::string summary;
    std::string topic;

    bool operator==(const SessionRecord&) const = default;
};

enum class ProjectStatus { ongoing, completed };

struct NoteProject {
    std::string project_id;
    std::string label;
    std::string core_topic;
    std::set<int> session_ids;
    ProjectStatus status = ProjectStatus::ongoing;

    bool operator==(const NoteProject&) const = default;
};

// Persistent partition of covered sessions into projects and isolated ones.
struct StructuralNote {
    std::vector<NoteProject> projects;
    std::set<int> isolated_sessions;

    bool operator==(const StructuralNote&) const = default;

    std::set<int> covered() const {
        std::set<int> out = isolated_sessions;
        for (const auto& p : projects) out.insert(p.session_ids.begin(), p.session_ids.end());
        return out;
    }
};

inline json to_json(const StructuralNote& n) {
    json projects = json::array();
    for (const auto& p : n.projects)
        projects.push_back({{"project_id", p.project_id},
                            {"label", p.label},
                            {"core_topic", p.core_topic},
                            {"session_ids", p.session_ids},
                            {"status", p.status == ProjectStatus::ongoing ? "ongoing" : "completed"}});
    return {{"projects", projects}, {"isolated_sessions", n.isolated_sessions}};
}

// Every covered session appears exactly once; returns the first violation.
inline std::optional<std::string> partition_violation(const StructuralNote& note) {
    std::set<int> seen;
    std::set<std::string> ids;
    auto claim = [&](int s, const std::string& where) -> std::optional<std::string> {
        if (s < 1) return "invalid session_id " + std::to_string(s) + " in " + where;
        if (!seen.insert(s).second) return "session " + std::to_string(s) + " appears more than once";
        return std::nullopt;
    };
    for (const auto& p : note.projects) {
        if (p.project_id.empty()) return std::string("project with empty project_id");
        if (!ids.insert(p.project_id).second) return "duplicate project_id " + p.project_id;
        for (int s : p.session_ids)
            if (auto v = claim(s, p.project_id)) return v;
    }
    for (int s : note.isolated_sessions)
        if (auto v = claim(s, "isolated_sessions")) return v;
    return std::nullopt;
}

namespace detail {

// Sets reject duplicates silently, so parsing keeps raw arrays and checks
// them before conversion.
inline std::optional<std::set<int>> unique_id_set(const json& arr, std::string& error, std::set<int>& seen) {
    if (!arr.is_array()) {
        error = "session id list is not an array";
        return std::nullopt;
    }
    std::set<int> out;
    for (const auto& v : arr) {
        if (!v.is_number_integer()) {
            error = "non-integer session id " + v.dump();
            return std::nullopt;
        }
        const int s = v.get<int>();
        if (!seen.insert(s).second) {
            error = "session " + std::to_string(s) + " appears more than once";
            return std::nullopt;
        }
        out.insert(s);
    }
    return out;
}

}  // namespace detail

// Parses and validates a note-update reply against the sessions that must be
// covered afterwards. Returns the note or an error description.
inline std::optional<StructuralNote> parse_note_reply(std::string_view reply, const std::set<int>& expected_cover,
                                                      std::string& error) {
    const auto j = extract_json_object(reply);
    if (!j) {
        error = "no JSON object in reply";
        return std::nullopt;
    }
    if (!j->contains("projects") || !(*j)["projects"].is_array() || !j->contains("isolated_sessions")) {
        error = "reply lacks projects/isolated_sessions";
        return std::nullopt;
    }
    StructuralNote note;
    std::set<int> seen;
    std::set<std::string> project_ids;
    for (const auto& p : (*j)["projects"]) {
        if (!p.is_object() || !p.contains("project_id") || !p["project_id"].is_string() ||
            p["project_id"].get<std::string>().empty()) {
            error = "project without a project_id";
            return std::nullopt;
        }
        NoteProject np;
        np.project_id = p["project_id"].get<std::string>();
        if (!project_ids.insert(np.project_id).second) {
            error = "duplicate project_id " + np.project_id;
            return std::nullopt;
        }
        np.label = p.value("label", "");
        np.core_topic = p.value("core_topic", "");
        const std::string status = p.value("status", "ongoing");
        if (status == "ongoing") np.status = ProjectStatus::ongoing;
        else if (status == "completed") np.status = ProjectStatus::completed;
        else {
            error = "unknown project status '" + status + "'";
            return std::nullopt;
        }
        if (!p.contains("session_ids")) {
            error = "project " + np.project_id + " lacks session_ids";
            return std::nullopt;
        }
        auto ids = detail::unique_id_set(p["session_ids"], error, seen);
        if (!ids) return std::nullopt;
        np.session_ids = std::move(*ids);
        note.projects.push_back(std::move(np));
    }
    auto isolated = detail::unique_id_set((*j)["isolated_sessions"], error, seen);
    if (!isolated) return std::nullopt;
    note.isolated_sessions = std::move(*isolated);
    if (seen != expected_cover) {
        for (int s : expected_cover)
            if (!seen.contains(s)) {
                error = "session " + std::to_string(s) + " is missing";
                return std::nullopt;
            }
        for (int s : seen)
            if (!expected_cover.contains(s)) {
                error = "unknown session " + std::to_string(s);
                return std::nullopt;
            }
    }
    if (auto v = partition_violation(note)) {
        error = *v;
        return std::nullopt;
    }
    return note;
}

struct NoteUpdateResult {
    StructuralNote note;
    bool accepted = false;  // false: fallback applied
    int attempts = 0;
    std::vector<std::string> errors;
};

inline std::string render_records(std::span<const SessionRecord> records) {
    json arr = json::array();
    for (const auto& r : records)
        arr.push_back({{"session_id", r.session_id}, {"purpose", r.purpose}, {"summary", r.summary}, {"topic", r.topic}});
    return arr.dump(2);
}

// Folds one window of session records into the note. Invalid replies get one
// retry; after that the window's sessions are isolated and the rest of the
// note is kept.
inline NoteUpdateResult update_structural_note(const StructuralNote& note, std::span<const SessionRecord> records,
                                               Generator& backend, const PromptSet& prompts,
                                               const std::string& model_id = {}) {
    if (records.empty()) throw ValidationError("update_structural_note: empty window");
    std::set<int> expected = note.covered();
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (i > 0 && records[i].session_id != records[i - 1].session_id + 1)
            throw ValidationError("update_structural_note: window is not contiguous");
        if (!expected.insert(records[i].session_id).second)
            throw ValidationError("update_structural_note: session " + std::to_string(records[i].session_id) +
                                  " already covered");
    }
    const auto prompt = prompts.render("note_update", {{"current_note", to_json(note).dump(2)},
                                                       {"start", std::to_string(records.front().session_id)},
                                                       {"end", std::to_string(records.back().session_id)},
                                                       {"session_records", render_records(records)}});
    NoteUpdateResult result;
    for (int attempt = 0; attempt < 2; ++attempt) {
        ++result.attempts;
        const auto reply = backend.generate(GenerationRequest::single("", prompt, model_id));
        std::string error;
        if (auto parsed = parse_note_reply(reply, expected, error)) {
            result.note = std::move(*parsed);
            result.accepted = true;
            return result;
        }
        result.errors.push_back(error);
    }
    result.note = note;
    for (const auto& r : records) result.note.isolated_sessions.insert(r.session_id);
    return result;
}

inline GateDecision gate_structure(int session_id, const StructuralNote& note) {
    for (const auto& p : note.projects)
        if (p.session_ids.contains(session_id)) return {session_id, true, "structure", "project " + p.project_id, {}};
    if (note.isolated_sessions.contains(session_id)) return {session_id, false, "structure", "isolated", {}};
    return {session_id, true, "structure", "not yet covered", {}};
}

// {"purpose","summary","topic"}, all non-empty; one retry, then a placeholder.
inline SessionRecord extract_session_record(const Session& session, Generator& backend, const PromptSet& prompts,
                                            const GatingOptions& opts, std::vector<std::string>& warnings) {
    const auto prompt =
        prompts.render("session_record", {{"dialogue", detail::gate_dialogue(session, opts.max_chars)}});
    for (int attempt = 0; attempt < 2; ++attempt) {
        const auto j = extract_json_object(backend.generate(GenerationRequest::single("", prompt, opts.model_id)));
        if (!j) continue;
        SessionRecord r{session.session_id, j->value("purpose", ""), j->value("summary", ""), j->value("topic", "")};
        if (!text::trim(r.purpose).empty() && !text::trim(r.summary).empty() && !text::trim(r.topic).empty()) return r;
    }
    warnings.push_back("session record fallback for session " + std::to_string(session.session_id));
    auto first = session.user_text();
    if (text::trim(first).empty()) first = "(empty)";
    return {session.session_id, "unknown", text::truncate_utf8(first, 300), "unknown"};
}

// ---------------------------------------------------------------------------
// Stateful per-user policies

class GatingPolicy {
public:
    virtual ~GatingPolicy() = default;
    virtual std::string name() const = 0;
    // Decides for `session` and then updates any internal state with it.
    // Sessions must arrive in timeline order.
    virtual GateDecision decide(const Session& session) = 0;
};

class UniversalPolicy final : public GatingPolicy {
public:
    std::string name() const override { return "universal"; }
    GateDecision decide(const Session& s) override { return gate_universal(s); }
};

class OraclePolicy final : public GatingPolicy {
public:
    OraclePolicy(AgentUseProfile profile, std::optional<ProfileShift> shift)
        : profile_(std::move(profile)), shift_(std::move(shift)) {}
    std::string name() const override { return "oracle"; }
    GateDecision decide(const Session& s) override { return gate_oracle(s, profile_, shift_); }

private:
    AgentUseProfile profile_;
    std::optional<ProfileShift> shift_;
};

class GreedyPolicy final : public GatingPolicy {
public:
    GreedyPolicy(Generator& backend, const PromptSet& prompts, GatingOptions opts)
        : backend_(&backend), prompts_(&prompts), opts_(std::move(opts)) {}
    std::string name() const override { return "greedy"; }
    GateDecision decide(const Session& s) override { return gate_greedy(s, *backend_, *prompts_, opts_); }

private:
    Generator* backend_;
    const PromptSet* prompts_;
    GatingOptions opts_;
};

class ContextPolicy final : public GatingPolicy {
public:
    ContextPolicy(Generator& backend, const PromptSet& prompts, GatingOptions opts)
        : backend_(&backend), prompts_(&prompts), opts_(std::move(opts)), buffer_(opts_.window) {}
    std::string name() const override { return "context"; }
    GateDecision decide(const Session& s) override { return gate_context(s, buffer_, *backend_, *prompts_, opts_); }
    const SummaryBuffer& buffer() const { return buffer_; }

private:
    Generator* backend_;
    const PromptSet* prompts_;
    GatingOptions opts_;
    SummaryBuffer buffer_;
};

class StructurePolicy final : public GatingPolicy {
public:
    StructurePolicy(Generator& backend, const PromptSet& prompts, GatingOptions opts)
        : backend_(&backend), prompts_(&prompts), opts_(std::move(opts)) {
        if (opts_.update_interval == 0) throw ConfigError("note update interval must be >= 1");
    }
    std::string name() const override { return "structure"; }

    GateDecision decide(const Session& s) override {
        auto d = gate_structure(s.session_id, note_);
        pending_.push_back(extract_session_record(s, *backend_, *prompts_, opts_, d.warnings));
        if (pending_.size() == opts_.update_interval) {
            auto r = update_structural_note(note_, pending_, *backend_, *prompts_, opts_.model_id);
            for (auto& e : r.errors) d.warnings.push_back("note update: " + e);
            if (!r.accepted) d.warnings.push_back("note update fallback: window isolated");
            note_ = std::move(r.note);
            pending_.clear();
        }
        return d;
    }

    const StructuralNote& note() const { return note_; }

private:
    Generator* backend_;
    const PromptSet* prompts_;
    GatingOptions opts_;
    StructuralNote note_;
    std::vector<SessionRecord> pending_;
};

inline const std::vector<std::string>& policy_names() {
    static const std::vector<std::string> names = {"universal", "oracle", "greedy", "context", "structure"};
    return names;
}

inline std::unique_ptr<GatingPolicy> make_policy(const std::string& name, const UserRecord& user, Generator& backend,
                                                 const PromptSet& prompts, const GatingOptions& opts) {
    if (name == "universal") return std::make_unique<UniversalPolicy>();
    if (name == "oracle") return std::make_unique<OraclePolicy>(user.profile, user.shift);
    if (name == "greedy") return std::make_unique<GreedyPolicy>(backend, prompts, opts);
    if (name == "context") return std::make_unique<ContextPolicy>(backend, prompts, opts);
    if (name == "structure") return std::make_unique<StructurePolicy>(backend, prompts, opts);
    throw ConfigError("unknown gating policy '" + name + "'");
}

}  // namespace permem
