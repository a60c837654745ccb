#pragma once

#include <string>
#include <vector>

namespace bevllm {

/// Word-level tokenizer: lowercase normalization, whitespace splitting,
/// punctuation split into single-character tokens. Special tokens carry
/// stable ids (also enumerated in configs/special_tokens.cfg) and are
/// recognized verbatim when encoding rendered prompts.
class Tokenizer {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kBeginOfText = 2;
  static constexpr int kHeaderStart = 3;
  static constexpr int kHeaderEnd = 4;
  static constexpr int kEot = 5;  // end of message
  static constexpr int kBev = 6;
  static constexpr int kNumSpecial = 7;

  Tokenizer();

  /// Builds the word vocabulary from a caption corpus. Throws if the
  /// vocabulary would exceed `capacity`.
  static Tokenizer from_corpus(const std::vector<std::string>& texts, int capacity);

  /// Splits into normalized word/punctuation strings; special-token names
  /// pass through unchanged.
  static std::vector<std::string> split(const std::string& text);

  std::vector<int> encode(const std::string& text) const;
  std::string decode(const std::vector<int>& ids) const;

  int id_of(const std::string& token) const;  // kUnk when absent
  const std::string& token_of(int id) const;
  bool is_special(int id) const { return id >= 0 && id < kNumSpecial; }

  int vocab_size() const { return static_cast<int>(vocab_.size()); }

  /// One token per line; the line index is the id. Used for checkpoints.
  std::string serialize() const;
  static Tokenizer deserialize(const std::string& blob);

 private:
  std::vector<std::string> vocab_;
  void add_token(const std::string& token);
  void rebuild_index();
  std::vector<std::pair<std::string, int>> index_;  // sorted for lookup
};

}  // namespace bevllm
