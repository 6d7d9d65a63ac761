#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "permem/error.hpp"
#include "permem/json_util.hpp"

namespace permem {

using PromptVars = std::map<std::string, std::string>;

// Replaces every {{name}} with vars[name]. Single braces are left alone so
// templates can embed JSON examples. Unknown placeholders are an error.
inline std::string render_template(std::string_view tmpl, const PromptVars& vars) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        const auto open = tmpl.find("{{", pos);
        if (open == std::string_view::npos) {
            out.append(tmpl.substr(pos));
            break;
        }
        const auto close = tmpl.find("}}", open + 2);
        if (close == std::string_view::npos) {
            out.append(tmpl.substr(pos));
            break;
        }
        out.append(tmpl.substr(pos, open - pos));
        const std::string key(tmpl.substr(open + 2, close - open - 2));
        auto it = vars.find(key);
        if (it == vars.end()) throw ConfigError("prompt placeholder '{{" + key + "}}' has no value");
        out += it->second;
        pos = close + 2;
    }
    return out;
}

namespace prompts {

inline constexpr std::string_view kGreedyGate = R"(You are a memory policy agent. Decide whether this session should be stored in long-term memory.

## Current Session Dialogue
{{current_dialogue}}

memory_required = true: long-horizon session - part of an ongoing project or recurring goal.
memory_required = false: transient session - standalone and self-contained.

Respond ONLY with: {"memory_required": <true|false>})";

inline constexpr std::string_view kContextGate = R"(You are a memory policy agent. Decide whether this session should be stored in long-term memory.

## Recent Session Summaries (Past {{window}} Sessions)
{{history_summaries}}

## Current Session Dialogue
{{current_dialogue}}

memory_required = true: long-horizon session - part of an ongoing project or recurring goal.
memory_required = false: transient session - standalone and self-contained.

Respond ONLY with: {"memory_required": <true|false>})";

inline constexpr std::string_view kSessionSummary = R"(Summarize this conversation session in one to two sentences. Mention the user's goal and whether it continues earlier work.

## Session Dialogue
{{dialogue}}

Respond ONLY with: {"summary": "..."})";

inline constexpr std::string_view kSessionRecord = R"(Analyze this conversation session and extract a structured summary.

## Session Dialogue
{{dialogue}}

Respond ONLY with:
{"purpose": "...", "summary": "...", "topic": "..."})";

inline constexpr std::string_view kNoteUpdate = R"(You are managing a structural note that tracks a user's ongoing projects across AI assistant sessions.

## Current Structural Note
{{current_note}}

## New Session Records (session_id {{start}}~{{end}})
{{session_records}}

Rules:
1. Group sessions belonging to the same ongoing project.
2. Self-contained one-off sessions go in isolated_sessions.
3. Previously isolated sessions MAY be reassigned to a project if new evidence connects them.
4. Every session_id must appear in exactly one place.

Respond ONLY with the updated note:
{
  "projects": [
    {"project_id": "P1", "label": "...",
     "core_topic": "...", "session_ids": [...],
     "status": "ongoing"|"completed"}
  ],
  "isolated_sessions": [...]
})";

inline constexpr std::string_view kPresenceJudge = R"(You are checking whether a specific piece of information is contained in a given text.

Fact to find: "{{fact}}"

Text to search:
{{retrieved_entries}}

Does the text above contain the core meaning of this fact?
Answer YES if the fact is clearly expressed (even if worded differently).
Answer NO if the fact is absent or cannot be inferred from the text.
Reply with only YES or NO.)";

inline constexpr std::string_view kMemoryExtract = R"(You maintain a long-term memory bank for an AI assistant. Read the dialogue and decide which memory operations to apply.

## Existing Related Memories (id: text)
{{bank_view}}

## Dialogue
{{dialogue}}

Extract facts about the user that are worth remembering in future sessions: preferences, stable attributes, decisions, progress on ongoing goals.
- insert: a new fact not yet stored.
- update: an existing memory whose content changed (use its id).
- delete: an existing memory that is now false or obsolete (use its id).
Return an empty list when nothing is worth storing.

Respond ONLY with STRICT JSON:
{"ops": [{"insert": "fact"}, {"update": {"id": 3, "text": "new fact"}}, {"delete": 5}]})";

inline constexpr std::string_view kProfileAssignment = R"(You are building a user profile for a personalized AI agent system.

## User Persona
{{persona}}

## Domains
{{domain_list}}

## Task
For every domain listed above, determine whether this user would use an AI agent for it, and if so, whether memory is required and how frequently they would use it.

## Instructions
- Evaluate all {{n_domains}} domains without exception.
- For each domain, first determine whether this user would plausibly use an AI agent for it (use: true/false).
- If use is true, determine whether memory is required (memory_required: true/false) and how frequently this user would use this domain (frequency: "high"/"medium"/"low").
- If use is false, set memory_required to null and frequency to null.
- Base your judgment entirely on this user's specific context, not on general assumptions about the domain.

## Definition of Memory Required
Memory is required (true) when this user's usage of the domain is:
- Ongoing and accumulative (e.g., tracking progress over time)
- Connected across multiple sessions (e.g., building on past conversations)
- Tied to long-term goals or evolving personal circumstances
Memory is NOT required (false) when this user's usage of the domain is:
- One-time or ad-hoc (e.g., a single lookup with no follow-up)
- Self-contained within a single session
- Not dependent on past interactions

## Definition of Frequency
- "high": This user would use an AI agent for this domain very regularly
- "medium": This user would use an AI agent for this domain occasionally
- "low": This user would use an AI agent for this domain rarely

## CRITICAL
Both memory_required and frequency must reflect THIS USER's specific context, not the general nature of the domain.
The same domain can have different memory_required and frequency values for different users.

## Output Format
Return a JSON array in the following format:
[
  {
    "domain_name": "...",
    "use": true/false,
    "memory_required": true/false/null,
    "frequency": "high"/"medium"/"low"/null,
    "reason": "One sentence explaining why, grounded in this user's specific context."
  }
])";

inline constexpr std::string_view kProfileVerify = R"(You are verifying persona-conditioned agent use metadata.

## User Persona
{{persona}}

## Generated Metadata
{{domains_json}}

List every domain whose use/memory_required/frequency values are implausible for this persona.

Respond ONLY with STRICT JSON: {"implausible": ["domain name", ...]})";

inline constexpr std::string_view kSkeletonSystem = R"(You are designing a Life Skeleton for a personalized AI agent memory benchmark.
A Life Skeleton captures how a specific user engages with an AI agent in a particular domain over 1-2 years: a sequence of projects, each made of events, where every event is one conversation session.
Annotate each event with the reference memories (gt_memory) the agent should retain after that session.)";

inline constexpr std::string_view kSkeletonUser = R"(## User Persona
{{persona}}

## Domain
- Name: {{domain_name}}  Frequency: {{frequency}}  Why used: {{reason}}
{{transition_context}}
## Task
Generate a Life Skeleton over a 1-2 year period.
Scale: {{n_projects}} projects, {{n_events_min}}-{{n_events_max}} events per project.

## GT Memory Definitions
user_profile - persists forever after learned.
Skills, tools mastered, revealed preferences. Only record if NOT already in persona.

ongoing_state - lives only while the project is active.
Decisions made, tools chosen, progress reached.
CRITICAL: Must be things decided DURING conversation - not things user already knows.

## Already Covered (DO NOT duplicate)
{{covered_facts}}
{{feedback}}
Output STRICT JSON:
{"span_months": <int>, "projects": [{"project_id": "...", "title": "...", "events": [{"event_id": "...", "title": "...", "description": "...", "gt_memory": [{"type": "user_profile"|"ongoing_state", "fact": "...", "probing_question": "...", "answer": "..."}]}]}]})";

inline constexpr std::string_view kOneOffSystem = R"(You are designing one-off AI agent interaction events for a personalized AI agent memory benchmark.
These events are self-contained, single-session interactions with no longitudinal engagement, no project structure, and no memory required across sessions.)";

inline constexpr std::string_view kOneOffUser = R"(## User Persona
{{persona}}

## Domain
- Name: {{domain_name}}  Frequency: {{frequency}}
{{transition_context}}
## Task
Generate exactly {{n_events}} one-off events spread across ~{{total_months}} months. Each event should reflect a genuinely different moment and need.
{{feedback}}
Output STRICT JSON: {"events": [{"event_id": "...", "event_title": "...", "event_description": "..."}]})";

inline constexpr std::string_view kTimelineSystem = R"(You are designing an integrated session timeline for a personalized AI agent memory benchmark.
Your job is to arrange all events into a single, realistic session timeline - a chronologically ordered list of agent sessions that this person would actually have, given their real life circumstances.

## Key Principles
1. Ground in the persona's life.
2. Respect project sequentiality within each domain.
3. Interleave domains realistically.
4. Assign concrete month numbers.
5. Flag cross-domain links.)";

inline constexpr std::string_view kTimelineUser = R"(## User Persona
{{persona}}

## Domain Life Skeletons
{{skeleton_summary}}

## Events to Place (all must appear exactly once)
{{event_table}}

## Requirements
- Every event must appear exactly once.
- Assign realistic month (1-{{max_month}}) to each session.
- Identify anchor life events triggering multiple domains simultaneously.
- Respect project ordering within each domain.
- session_id must be sequential in chronological order.
{{feedback}}
Output STRICT JSON: {"total_months": <int>, "anchor_life_events": ["..."], "session_sequence": [{"session_id": 1, "month": 1, "domain": "...", "project_id": "...", "event_id": "..."}]})";

inline constexpr std::string_view kTransitionSystem = R"(You are writing a life transition narrative for a personalized AI agent memory benchmark.
Domain changes have already been decided. Write a short, coherent life transition event that naturally explains all the changes.)";

inline constexpr std::string_view kTransitionUser = R"(## User Persona: {{persona}}

## Current Usage (Phase 1, {{total_months}} months)
Memory-Required: {{mem_domains}}  One-Off: {{oneoff_domains}}

## Phase 2 Changes (already decided)
1. DEMOTED to occasional use: {{demoted}}
2. NEW longitudinal domain: {{added_longitudinal}}
3. NEW one-off domain: {{added_transient}}

Output STRICT JSON: {"name": "...", "description": "..."})";

inline constexpr std::string_view kUserSimSystem = R"(You are roleplaying as a real person interacting with an AI agent.
{{persona}}. You are always the USER seeking help, never the assistant.)";

inline constexpr std::string_view kUserSimOpening = R"(You are about to start a new conversation about: {{domain_name}}

## What is happening in your life right now
{{event_description}}

## What you already know from previous conversations
{{prior_context}}

## Who you are in this conversation
{{fact_briefing}}

Open with 1-3 sentences only. The agent has NO memory of you.)";

inline constexpr std::string_view kUserSimContinuation = R"(The agent replied:
{{agent_reply}}

## Not yet surfaced:
{{unrevealed_facts}}
## Already came up - do NOT repeat:
{{revealed_facts}}

Continue the conversation as the user. Reply [END] if the conversation has reached a natural conclusion.)";

inline constexpr std::string_view kAgentSystem = R"(You are a helpful AI assistant. Answer the user's requests thoroughly and accurately.)";

inline constexpr std::string_view kFactJudge = R"(You are tracking which facts a user has expressed in a conversation.

## Facts (numbered)
{{facts}}

## User utterances so far
{{user_utterances}}

Which facts has the user clearly expressed (explicitly or through their reactions)?

Respond ONLY with STRICT JSON: {"revealed": [<fact numbers>]})";

}  // namespace prompts

// Named prompt templates. Defaults are compiled in; a prompts directory can
// override any of them with a <name>.txt file.
class PromptSet {
public:
    PromptSet() {
        templates_ = {
            {"greedy_gate", std::string(prompts::kGreedyGate)},
            {"context_gate", std::string(prompts::kContextGate)},
            {"session_summary", std::string(prompts::kSessionSummary)},
            {"session_record", std::string(prompts::kSessionRecord)},
            {"note_update", std::string(prompts::kNoteUpdate)},
            {"presence_judge", std::string(prompts::kPresenceJudge)},
            {"memory_extract", std::string(prompts::kMemoryExtract)},
            {"profile_assignment", std::string(prompts::kProfileAssignment)},
            {"profile_verify", std::string(prompts::kProfileVerify)},
            {"skeleton_system", std::string(prompts::kSkeletonSystem)},
            {"skeleton_user", std::string(prompts::kSkeletonUser)},
            {"oneoff_system", std::string(prompts::kOneOffSystem)},
            {"oneoff_user", std::string(prompts::kOneOffUser)},
            {"timeline_system", std::string(prompts::kTimelineSystem)},
            {"timeline_user", std::string(prompts::kTimelineUser)},
            {"transition_system", std::string(prompts::kTransitionSystem)},
            {"transition_user", std::string(prompts::kTransitionUser)},
            {"user_sim_system", std::string(prompts::kUserSimSystem)},
            {"user_sim_opening", std::string(prompts::kUserSimOpening)},
            {"user_sim_continuation", std::string(prompts::kUserSimContinuation)},
            {"agent_system", std::string(prompts::kAgentSystem)},
            {"fact_judge", std::string(prompts::kFactJudge)},
        };
    }

    static PromptSet from_directory(const std::string& dir) {
        PromptSet set;
        set.load_overrides(dir);
        return set;
    }

    void load_overrides(const std::string& dir) {
        namespace fs = std::filesystem;
        if (!fs::is_directory(dir)) throw ConfigError("prompts directory '" + dir + "' does not exist");
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
            const std::string name = entry.path().stem().string();
            if (!templates_.contains(name)) throw ConfigError("unknown prompt template '" + name + "' in " + dir);
            std::string content = read_file(entry.path().string());
            while (!content.empty() && (content.back() == '\n' || content.back() == '\r')) content.pop_back();
            templates_[name] = std::move(content);
        }
    }

    const std::string& get(const std::string& name) const {
        auto it = templates_.find(name);
        if (it == templates_.end()) throw ConfigError("unknown prompt template '" + name + "'");
        return it->second;
    }

    void set(const std::string& name, std::string content) {
        get(name);
        templates_[name] = std::move(content);
    }

    std::string render(const std::string& name, const PromptVars& vars) const { return render_template(get(name), vars); }

    const std::map<std::string, std::string>& all() const { return templates_; }

private:
    std::map<std::string, std::string> templates_;
};

}  // namespace permem
