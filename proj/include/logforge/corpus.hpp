#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "logforge/log_entry.hpp"

namespace logforge {

/// Disjoint train/test samples drawn uniformly from a source log.
struct CorpusSplit {
  std::vector<LogEntry> train;
  std::vector<LogEntry> test;
  std::vector<std::size_t> train_lines;  // source line indices, ascending
  std::vector<std::size_t> test_lines;
  std::uint64_t seed = 0;
};

/// Single-pass reservoir sample of n_train + n_test parseable lines, then a
/// seeded partition into the two sets. Deterministic for a fixed seed.
/// Throws InsufficientData when the source has too few parseable lines.
CorpusSplit sample_split(const std::vector<std::string>& lines, const FieldSchema& schema,
                         std::size_t n_train, std::size_t n_test, std::uint64_t seed);

CorpusSplit sample_split_file(const std::string& path, const FieldSchema& schema,
                              std::size_t n_train, std::size_t n_test, std::uint64_t seed);

/// One source line index per line; lets a run be reproduced exactly.
void write_manifest(const std::string& path, const std::vector<std::size_t>& lines);
std::vector<std::size_t> read_manifest(const std::string& path);

enum class TokenMode : std::uint8_t { kWord, kChar };

const char* to_string(TokenMode mode);

/// Token ids 0..3 are reserved.
struct TokenIds {
  static constexpr std::int32_t kPad = 0;
  static constexpr std::int32_t kBos = 1;
  static constexpr std::int32_t kEos = 2;
  static constexpr std::int32_t kUnk = 3;
};

struct TokenSequence {
  std::vector<std::int32_t> ids;
  std::size_t size() const { return ids.size(); }
};

/// Bijective token<->id maps over a tokenized corpus. In kWord mode every
/// whitespace-delimited token is one symbol, so a full timestamp is a single
/// unit the models cannot decompose; kChar mode is the per-character
/// counterfactual.
class Vocabulary {
 public:
  Vocabulary() = default;

  static Vocabulary build(const std::vector<LogEntry>& entries, const FieldSchema& schema,
                          TokenMode mode, std::size_t min_freq);
  static Vocabulary build_from_lines(const std::vector<std::string>& lines, TokenMode mode,
                                     std::size_t min_freq);

  TokenMode mode() const { return mode_; }
  std::size_t size() const { return id_to_token_.size(); }

  std::int32_t id_of(const std::string& token) const;  // kUnk when absent
  const std::string& token_of(std::int32_t id) const;
  bool contains(const std::string& token) const;

  /// BOS + tokens + EOS, truncated so the frame never exceeds max_len.
  TokenSequence encode(const std::string& line, std::size_t max_len) const;
  /// Stops at EOS; skips PAD/BOS. decode(encode(x)) == cleanse_whitespace(x)
  /// whenever nothing was truncated or mapped to UNK.
  std::string decode(const TokenSequence& seq) const;

  std::vector<std::string> tokenize(const std::string& line) const;

  /// Serialized token list in id order (used by the checkpoint container).
  const std::vector<std::string>& tokens() const { return id_to_token_; }
  static Vocabulary from_tokens(std::vector<std::string> tokens, TokenMode mode);

 private:
  TokenMode mode_ = TokenMode::kWord;
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, std::int32_t> token_to_id_;
};

/// Framing defaults per tokenization mode.
std::size_t default_max_seq_len(TokenMode mode);  // 64 word / 160 char

}  // namespace logforge
