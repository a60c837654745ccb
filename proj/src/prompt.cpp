#include "bevllm/prompt.hpp"

#include <stdexcept>

namespace bevllm {

std::string role_name(Role role) {
  switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  throw std::logic_error("unreachable role");
}

Role role_from_name(const std::string& name) {
  if (name == "system") return Role::System;
  if (name == "user") return Role::User;
  if (name == "assistant") return Role::Assistant;
  throw std::invalid_argument("prompt: unknown role '" + name + "'");
}

PromptAssembly build_prompt(const std::vector<ChatMessage>& messages, const Tokenizer& tokenizer,
                            const std::optional<std::string>& assistant_ground_truth) {
  if (messages.empty()) throw std::invalid_argument("prompt: no messages");

  PromptAssembly out;
  auto push = [&out](int id) { out.tokens.push_back(id); };

  push(Tokenizer::kBeginOfText);
  int bev_count = 0;
  for (const auto& msg : messages) {
    push(Tokenizer::kHeaderStart);
    const int role_id = tokenizer.id_of(role_name(msg.role));
    if (role_id == Tokenizer::kUnk) {
      throw std::invalid_argument("prompt: role word missing from vocabulary");
    }
    push(role_id);
    push(Tokenizer::kHeaderEnd);
    for (const int id : tokenizer.encode(msg.text)) {
      if (id == Tokenizer::kBev) {
        if (msg.role != Role::User) {
          throw std::invalid_argument("prompt: <bev> placeholder only allowed in user messages");
        }
        out.bev_slot = static_cast<int>(out.tokens.size());
        ++bev_count;
      }
      push(id);
    }
    push(Tokenizer::kEot);
  }
  if (bev_count != 1) {
    throw std::invalid_argument("prompt: expected exactly one <bev> placeholder, found " +
                                std::to_string(bev_count));
  }

  // Trailing assistant header opens the response.
  push(Tokenizer::kHeaderStart);
  push(tokenizer.id_of(role_name(Role::Assistant)));
  push(Tokenizer::kHeaderEnd);
  out.generation_start = static_cast<int>(out.tokens.size());

  if (assistant_ground_truth) {
    out.target_ids = tokenizer.encode(*assistant_ground_truth);
    out.target_ids.push_back(Tokenizer::kEot);
    for (const int id : out.target_ids) push(id);
  }

  out.rendered_text = tokenizer.decode(out.tokens);
  return out;
}

}  // namespace bevllm
