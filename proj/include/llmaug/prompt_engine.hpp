#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "llmaug/types.hpp"
#include "llmaug/working_memory.hpp"

namespace llmaug {

enum class Task { NewsChat, CustomerService, WikiQA };

const char* to_string(Task task);
/// Accepts "news-chat", "customer-service", "wiki-qa". Throws InvalidInput.
Task parse_task(const std::string& name);

enum class PromptLayout { Dialog, Qa, SelfCriticism };

inline constexpr std::size_t kDefaultTokenBudget = 3000;

namespace instructions {
inline constexpr const char* kNewsChat =
    "I want you to act as a chatbot. You need to answer user' questions nicely.";
inline constexpr const char* kNewsChatWithKnowledge =
    "I want you to act as a chatbot. You will be presented with knowledge snippets. You need to answer user' "
    "questions nicely and accurately based on the knowledge snippets.";
inline constexpr const char* kCustomerService =
    "I want you to act as a chatbot AI for travel planning. You need to answer customer's questions nicely.";
inline constexpr const char* kCustomerServiceWithKnowledge =
    "I want you to act as a chatbot AI for travel planning. You will be presented with knowledge snippets. You "
    "need to answer customer's questions nicely and accurately based on the knowledge snippets.";
inline constexpr const char* kWikiQa =
    "I am a highly intelligent question answering bot that can answer questions. If you ask me a question that "
    "is rooted in truth, I will give you the answer. If you ask me a question that is nonsense, trickery, or has "
    "no clear answer, I will respond with \"Unknown\".";
inline constexpr const char* kWikiQaWithKnowledge =
    "I am a highly intelligent question answering bot, and can answer questions given some documents and "
    "tables. If you ask me a question that is rooted in truth, I will give you the answer. If you ask me a "
    "question that is nonsense, trickery, or has no clear answer, I will respond with \"Unknown\".";
inline constexpr const char* kSelfCriticism =
    "You are reviewing a chatbot response against knowledge snippets. Critique whether the candidate response "
    "is factually consistent with the knowledge snippets and suggest a concrete fix in at most two sentences.";
inline constexpr const char* kSelfAsk =
    "Can you answer the following question without external knowledge? Answer yes or no.";
}  // namespace instructions

/// Structured prompt plus its rendering. `rendered` is always
/// render(spec) of the other fields; builders keep it in sync.
struct PromptSpec {
  Task task = Task::NewsChat;
  PromptLayout layout = PromptLayout::Dialog;
  std::string instruction;
  std::vector<std::string> memory_chains;  // rank order
  std::vector<DialogTurn> context;         // history before the query
  std::string query;
  std::optional<std::string> previous_candidate;
  std::optional<std::string> feedback;
  std::string rendered;

  /// Chains joined by blank lines; nullopt when there are none.
  std::optional<std::string> memory_text() const;
};

std::string render(const PromptSpec& spec);

/// News-chat / customer-service prompt. With evidence the knowledge variant
/// of the instruction is used and a "Working Memory:" block precedes the
/// context. Latest feedback follows the failed candidate as a user turn.
PromptSpec render_dialog_prompt(Task task, const DialogState& state, bool include_evidence,
                                std::size_t token_budget = kDefaultTokenBudget);

/// Question/Answer prompt; falls back to closed-book when there is no
/// evidence.
PromptSpec render_qa_prompt(const DialogState& state, bool include_evidence,
                            std::size_t token_budget = kDefaultTokenBudget);

/// Dispatches on task.
PromptSpec render_task_prompt(Task task, const DialogState& state, bool include_evidence,
                              std::size_t token_budget = kDefaultTokenBudget);

/// Critique prompt over the evidence and a candidate. Throws InvalidInput
/// when the state has no evidence or the candidate is blank.
PromptSpec render_self_criticism_prompt(const DialogState& state, const std::string& candidate);

/// Yes/no prompt asking whether the query needs external knowledge.
std::string render_self_ask_prompt(const DialogState& state);

/// Token count under tokenize().
std::size_t token_count(const std::string& text);

/// Drops chains from the lowest rank, then history from the oldest turn,
/// until the rendering fits. Instruction, query, candidate and feedback
/// are kept. Throws PromptBudget when even those do not fit or when the
/// budget is below instruction tokens + 32.
PromptSpec truncate_to_budget(PromptSpec spec, std::size_t token_budget);

}  // namespace llmaug
