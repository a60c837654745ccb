#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bevllm/tokenizer.hpp"

namespace bevllm {

enum class Role { System, User, Assistant };

std::string role_name(Role role);
Role role_from_name(const std::string& name);

struct ChatMessage {
  Role role;
  std::string text;
};

/// Rendered chat prompt. `tokens` still contains the single <bev>
/// placeholder; embedding splice happens downstream. `generation_start`
/// indexes the first position the model generates (right after the
/// trailing assistant header), and is unaffected by a training target
/// appended behind it.
struct PromptAssembly {
  std::vector<int> tokens;
  int bev_slot = -1;
  int generation_start = -1;
  std::vector<int> target_ids;  // training mode: caption tokens + <|eot_id|>
  std::string rendered_text;    // canonical space-joined rendering (golden-checked)
};

/// Renders begin-of-text, per-message header/content/end-of-message tokens
/// and the trailing assistant header. Captioning prompts must contain
/// exactly one <bev> placeholder across the user messages.
PromptAssembly build_prompt(const std::vector<ChatMessage>& messages, const Tokenizer& tokenizer,
                            const std::optional<std::string>& assistant_ground_truth = {});

}  // namespace bevllm
