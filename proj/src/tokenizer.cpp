#include "bevllm/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <stdexcept>

namespace bevllm {

namespace {

const std::vector<std::string>& special_names() {
  static const std::vector<std::string> names = {
      "<|pad|>",             // 0
      "<|unk|>",             // 1
      "<|begin_of_text|>",   // 2
      "<|start_header_id|>", // 3
      "<|end_header_id|>",   // 4
      "<|eot_id|>",          // 5
      "<bev>",               // 6
  };
  return names;
}

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '\'' || c == '-' || c == '_';
}

}  // namespace

Tokenizer::Tokenizer() {
  for (const auto& name : special_names()) add_token(name);
  // Role names are always part of the base vocabulary so prompts render
  // on any caption corpus.
  add_token("system");
  add_token("user");
  add_token("assistant");
  rebuild_index();
}

void Tokenizer::add_token(const std::string& token) { vocab_.push_back(token); }

void Tokenizer::rebuild_index() {
  index_.clear();
  index_.reserve(vocab_.size());
  for (size_t i = 0; i < vocab_.size(); ++i) {
    index_.emplace_back(vocab_[i], static_cast<int>(i));
  }
  std::sort(index_.begin(), index_.end());
}

Tokenizer Tokenizer::from_corpus(const std::vector<std::string>& texts, int capacity) {
  Tokenizer t;
  for (const auto& text : texts) {
    for (const auto& word : split(text)) {
      if (t.id_of(word) == kUnk && word != special_names()[kUnk]) {
        t.add_token(word);
        t.rebuild_index();
      }
    }
  }
  if (t.vocab_size() > capacity) {
    throw std::invalid_argument("tokenizer: corpus vocabulary (" +
                                std::to_string(t.vocab_size()) + ") exceeds capacity " +
                                std::to_string(capacity));
  }
  return t;
}

std::vector<std::string> Tokenizer::split(const std::string& text) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '<') {
      // Longest-match attempt against the special-token names.
      size_t best = 0;
      for (const auto& name : special_names()) {
        if (text.compare(i, name.size(), name) == 0 && name.size() > best) best = name.size();
      }
      if (best > 0) {
        out.push_back(text.substr(i, best));
        i += best;
        continue;
      }
    }
    if (is_word_char(c)) {
      size_t j = i;
      while (j < text.size() && is_word_char(text[j])) ++j;
      std::string word = text.substr(i, j - i);
      std::transform(word.begin(), word.end(), word.begin(),
                     [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
      out.push_back(std::move(word));
      i = j;
    } else {
      out.push_back(std::string(1, c));  // punctuation as its own token
      ++i;
    }
  }
  return out;
}

std::vector<int> Tokenizer::encode(const std::string& text) const {
  std::vector<int> ids;
  for (const auto& token : split(text)) {
    ids.push_back(id_of(token));
  }
  return ids;
}

std::string Tokenizer::decode(const std::vector<int>& ids) const {
  std::string out;
  for (const int id : ids) {
    if (!out.empty()) out += ' ';
    out += token_of(id);
  }
  return out;
}

int Tokenizer::id_of(const std::string& token) const {
  auto it = std::lower_bound(index_.begin(), index_.end(), token,
                             [](const auto& entry, const std::string& key) {
                               return entry.first < key;
                             });
  if (it != index_.end() && it->first == token) return it->second;
  return kUnk;
}

const std::string& Tokenizer::token_of(int id) const {
  if (id < 0 || id >= vocab_size()) {
    throw std::invalid_argument("tokenizer: id " + std::to_string(id) +
                                " outside vocabulary of " + std::to_string(vocab_size()));
  }
  return vocab_[static_cast<size_t>(id)];
}

std::string Tokenizer::serialize() const {
  std::string out;
  for (const auto& token : vocab_) {
    out += token;
    out += '\n';
  }
  return out;
}

Tokenizer Tokenizer::deserialize(const std::string& blob) {
  Tokenizer t;
  t.vocab_.clear();
  std::istringstream in(blob);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) t.vocab_.push_back(line);
  }
  if (t.vocab_size() < kNumSpecial) {
    throw std::invalid_argument("tokenizer: serialized vocabulary is missing special tokens");
  }
  for (int i = 0; i < kNumSpecial; ++i) {
    if (t.vocab_[static_cast<size_t>(i)] != special_names()[static_cast<size_t>(i)]) {
      throw std::invalid_argument("tokenizer: special token id " + std::to_string(i) +
                                  " mismatch in serialized vocabulary");
    }
  }
  t.rebuild_index();
  return t;
}

}  // namespace bevllm
