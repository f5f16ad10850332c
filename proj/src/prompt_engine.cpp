#include "llmaug/prompt_engine.hpp"

#include "llmaug/error.hpp"
#include "llmaug/text.hpp"

namespace llmaug {

const char* to_string(Task task) {
  switch (task) {
    case Task::NewsChat: return "news-chat";
    case Task::CustomerService: return "customer-service";
    case Task::WikiQA: return "wiki-qa";
  }
  return "unknown";
}

Task parse_task(const std::string& name) {
  if (name == "news-chat") return Task::NewsChat;
  if (name == "customer-service") return Task::CustomerService;
  if (name == "wiki-qa") return Task::WikiQA;
  throw Error(ErrorKind::InvalidInput, "unknown task '" + name + "'");
}

std::optional<std::string> PromptSpec::memory_text() const {
  if (memory_chains.empty()) return std::nullopt;
  return join(memory_chains, "\n\n");
}

std::string render(const PromptSpec& spec) {
  std::string out = spec.instruction;
  auto line = [&out](const std::string& text) {
    out += '\n';
    out += text;
  };
  const auto memory = spec.memory_text();

  switch (spec.layout) {
    case PromptLayout::Dialog:
    case PromptLayout::SelfCriticism: {
      if (memory) line("Working Memory: " + *memory);
      line("Context:");
      for (const auto& turn : spec.context) line(std::string(to_string(turn.speaker)) + ": " + turn.text);
      line("User: " + spec.query);
      if (spec.layout == PromptLayout::SelfCriticism) {
        line("Candidate Response: " + spec.previous_candidate.value_or(""));
        line("Feedback:");
        break;
      }
      if (spec.feedback) {
        line("Assistant: " + spec.previous_candidate.value_or(""));
        line("User: " + *spec.feedback);
      }
      line("Assistant:");
      break;
    }
    case PromptLayout::Qa: {
      if (memory) line("Working Memory: " + *memory);
      line("Question: " + spec.query);
      if (spec.feedback) {
        line("Answer: " + spec.previous_candidate.value_or(""));
        line("User: " + *spec.feedback);
      }
      line("Answer:");
      break;
    }
  }
  return out;
}

namespace {

std::vector<std::string> chain_texts(const DialogState& state) {
  std::vector<std::string> out;
  out.reserve(state.evidence.size());
  for (const auto& chain : state.evidence) out.push_back(render_chain_text(chain));
  return out;
}

void attach_feedback(PromptSpec& spec, const DialogState& state) {
  if (!state.feedback || state.candidates.empty()) return;
  spec.feedback = state.feedback;
  spec.previous_candidate = state.candidates.back().text;
}

}  // namespace

PromptSpec render_dialog_prompt(Task task, const DialogState& state, bool include_evidence,
                                std::size_t token_budget) {
  if (task == Task::WikiQA) throw Error(ErrorKind::InvalidInput, "dialog prompt requested for a QA task");
  if (trim(state.query).empty()) throw Error(ErrorKind::InvalidInput, "query is empty");
  const bool with_memory = include_evidence && !state.evidence.empty();
  PromptSpec spec;
  spec.task = task;
  spec.layout = PromptLayout::Dialog;
  if (task == Task::NewsChat) {
    spec.instruction = with_memory ? instructions::kNewsChatWithKnowledge : instructions::kNewsChat;
  } else {
    spec.instruction = with_memory ? instructions::kCustomerServiceWithKnowledge : instructions::kCustomerService;
  }
  if (with_memory) spec.memory_chains = chain_texts(state);
  spec.context = state.history;
  spec.query = state.query;
  attach_feedback(spec, state);
  spec.rendered = render(spec);
  return truncate_to_budget(std::move(spec), token_budget);
}

PromptSpec render_qa_prompt(const DialogState& state, bool include_evidence, std::size_t token_budget) {
  if (trim(state.query).empty()) throw Error(ErrorKind::InvalidInput, "query is empty");
  const bool with_memory = include_evidence && !state.evidence.empty();
  PromptSpec spec;
  spec.task = Task::WikiQA;
  spec.layout = PromptLayout::Qa;
  spec.instruction = with_memory ? instructions::kWikiQaWithKnowledge : instructions::kWikiQa;
  if (with_memory) spec.memory_chains = chain_texts(state);
  spec.query = state.query;
  attach_feedback(spec, state);
  spec.rendered = render(spec);
  return truncate_to_budget(std::move(spec), token_budget);
}

PromptSpec render_task_prompt(Task task, const DialogState& state, bool include_evidence,
                              std::size_t token_budget) {
  if (task == Task::WikiQA) return render_qa_prompt(state, include_evidence, token_budget);
  return render_dialog_prompt(task, state, include_evidence, token_budget);
}

PromptSpec render_self_criticism_prompt(const DialogState& state, const std::string& candidate) {
  if (trim(candidate).empty()) throw Error(ErrorKind::InvalidInput, "candidate is empty");
  if (state.evidence.empty()) throw Error(ErrorKind::InvalidInput, "self-criticism requires evidence");
  PromptSpec spec;
  spec.layout = PromptLayout::SelfCriticism;
  spec.instruction = instructions::kSelfCriticism;
  spec.memory_chains = chain_texts(state);
  spec.context = state.history;
  spec.query = state.query;
  spec.previous_candidate = candidate;
  spec.rendered = render(spec);
  return spec;
}

std::string render_self_ask_prompt(const DialogState& state) {
  return std::string(instructions::kSelfAsk) + "\n" + state.query;
}

std::size_t token_count(const std::string& text) { return tokenize(text).size(); }

PromptSpec truncate_to_budget(PromptSpec spec, std::size_t token_budget) {
  const std::size_t floor = token_count(spec.instruction) + 32;
  if (token_budget < floor) {
    throw Error(ErrorKind::PromptBudget, "token budget " + std::to_string(token_budget) + " is below the minimum " +
                                             std::to_string(floor));
  }
  spec.rendered = render(spec);
  while (token_count(spec.rendered) > token_budget) {
    if (!spec.memory_chains.empty()) {
      spec.memory_chains.pop_back();
    } else if (!spec.context.empty()) {
      spec.context.erase(spec.context.begin());
    } else {
      throw Error(ErrorKind::PromptBudget, "token budget " + std::to_string(token_budget) +
                                               " cannot hold the instruction, query and feedback");
    }
    spec.rendered = render(spec);
  }
  return spec;
}

}  // namespace llmaug
