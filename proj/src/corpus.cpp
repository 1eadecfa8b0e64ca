#include "logforge/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "logforge/rng.hpp"

namespace logforge {

CorpusSplit sample_split(const std::vector<std::string>& lines, const FieldSchema& schema,
                         std::size_t n_train, std::size_t n_test, std::uint64_t seed) {
  const std::size_t want = n_train + n_test;
  SplitMix64 rng(derive_seed(seed, 0x5e1ec7));

  struct Picked {
    std::size_t line;
    LogEntry entry;
  };
  std::vector<Picked> reservoir;
  reservoir.reserve(want);

  std::size_t seen = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto r = parse_entry_checked(lines[i], schema);
    auto* entry = std::get_if<LogEntry>(&r);
    if (!entry) continue;
    ++seen;
    if (reservoir.size() < want) {
      reservoir.push_back({i, std::move(*entry)});
    } else if (want > 0) {
      std::size_t j = static_cast<std::size_t>(rng.next_below(seen));
      if (j < want) reservoir[j] = {i, std::move(*entry)};
    }
  }
  if (seen < want) throw InsufficientData(seen, want);

  // Seeded partition of the reservoir into train/test keeps both samples
  // uniform and disjoint by construction.
  std::vector<std::size_t> order(reservoir.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  SplitMix64 part_rng(derive_seed(seed, 0xb00c));
  shuffle(order, part_rng);

  std::vector<std::size_t> train_idx(order.begin(), order.begin() + n_train);
  std::vector<std::size_t> test_idx(order.begin() + n_train, order.end());
  auto by_line = [&](std::size_t a, std::size_t b) {
    return reservoir[a].line < reservoir[b].line;
  };
  std::sort(train_idx.begin(), train_idx.end(), by_line);
  std::sort(test_idx.begin(), test_idx.end(), by_line);

  CorpusSplit split;
  split.seed = seed;
  for (std::size_t i : train_idx) {
    split.train.push_back(reservoir[i].entry);
    split.train_lines.push_back(reservoir[i].line);
  }
  for (std::size_t i : test_idx) {
    split.test.push_back(reservoir[i].entry);
    split.test_lines.push_back(reservoir[i].line);
  }
  return split;
}

CorpusSplit sample_split_file(const std::string& path, const FieldSchema& schema,
                              std::size_t n_train, std::size_t n_test, std::uint64_t seed) {
  return sample_split(read_lines(path), schema, n_train, n_test, seed);
}

void write_manifest(const std::string& path, const std::vector<std::size_t>& lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open manifest for writing: " + path);
  for (std::size_t i : lines) out << i << '\n';
}

std::vector<std::size_t> read_manifest(const std::string& path) {
  std::vector<std::size_t> out;
  for (const std::string& line : read_lines(path)) {
    if (line.empty()) continue;
    out.push_back(static_cast<std::size_t>(std::stoull(line)));
  }
  return out;
}

const char* to_string(TokenMode mode) {
  return mode == TokenMode::kWord ? "word" : "char";
}

std::size_t default_max_seq_len(TokenMode mode) {
  return mode == TokenMode::kWord ? 64 : 160;
}

namespace {

const std::vector<std::string>& reserved_tokens() {
  static const std::vector<std::string> kReserved = {"<pad>", "<bos>", "<eos>", "<unk>"};
  return kReserved;
}

std::vector<std::string> tokenize_line(const std::string& line, TokenMode mode) {
  if (mode == TokenMode::kWord) return split_tokens(line);
  std::vector<std::string> out;
  const std::string cleansed = cleanse_whitespace(line);
  out.reserve(cleansed.size());
  for (char c : cleansed) out.emplace_back(1, c);
  return out;
}

}  // namespace

Vocabulary Vocabulary::build_from_lines(const std::vector<std::string>& lines, TokenMode mode,
                                        std::size_t min_freq) {
  // std::map keeps tie-broken ordering reproducible across platforms.
  std::map<std::string, std::size_t> freq;
  for (const std::string& line : lines) {
    for (auto& tok : tokenize_line(line, mode)) ++freq[tok];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  kept.reserve(freq.size());
  for (auto& [tok, n] : freq) {
    if (n >= min_freq) kept.emplace_back(tok, n);
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  std::vector<std::string> tokens = reserved_tokens();
  for (auto& [tok, n] : kept) tokens.push_back(tok);
  return from_tokens(std::move(tokens), mode);
}

Vocabulary Vocabulary::build(const std::vector<LogEntry>& entries, const FieldSchema& schema,
                             TokenMode mode, std::size_t min_freq) {
  std::vector<std::string> lines;
  lines.reserve(entries.size());
  for (const LogEntry& e : entries) lines.push_back(serialize_entry(e, schema));
  return build_from_lines(lines, mode, min_freq);
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens, TokenMode mode) {
  Vocabulary v;
  v.mode_ = mode;
  v.id_to_token_ = std::move(tokens);
  for (std::size_t i = 0; i < v.id_to_token_.size(); ++i) {
    v.token_to_id_.emplace(v.id_to_token_[i], static_cast<std::int32_t>(i));
  }
  if (v.id_to_token_.size() < 4) throw std::invalid_argument("vocabulary lacks reserved tokens");
  return v;
}

std::int32_t Vocabulary::id_of(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? TokenIds::kUnk : it->second;
}

const std::string& Vocabulary::token_of(std::int32_t id) const {
  return id_to_token_.at(static_cast<std::size_t>(id));
}

bool Vocabulary::contains(const std::string& token) const {
  return token_to_id_.count(token) > 0;
}

std::vector<std::string> Vocabulary::tokenize(const std::string& line) const {
  return tokenize_line(line, mode_);
}

TokenSequence Vocabulary::encode(const std::string& line, std::size_t max_len) const {
  TokenSequence seq;
  seq.ids.push_back(TokenIds::kBos);
  for (auto& tok : tokenize_line(line, mode_)) {
    if (seq.ids.size() + 1 >= max_len) break;  // leave room for EOS
    seq.ids.push_back(id_of(tok));
  }
  seq.ids.push_back(TokenIds::kEos);
  return seq;
}

std::string Vocabulary::decode(const TokenSequence& seq) const {
  std::string out;
  bool first = true;
  for (std::int32_t id : seq.ids) {
    if (id == TokenIds::kEos) break;
    if (id == TokenIds::kBos || id == TokenIds::kPad) continue;
    const std::string& tok = token_of(id);
    if (mode_ == TokenMode::kWord) {
      if (!first) out += ' ';
      out += tok;
      first = false;
    } else {
      out += tok;
    }
  }
  return out;
}

}  // namespace logforge
