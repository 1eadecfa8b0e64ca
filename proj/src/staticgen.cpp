#include "logforge/staticgen.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <sstream>

#include "logforge/config.hpp"
#include "logforge/rng.hpp"

namespace logforge {

std::int64_t to_epoch_seconds(const Timestamp& t) {
  using namespace std::chrono;
  const year_month_day ymd{std::chrono::year{t.year},
                           std::chrono::month{static_cast<unsigned>(t.month)},
                           std::chrono::day{static_cast<unsigned>(t.day)}};
  const sys_days days{ymd};
  return duration_cast<seconds>(days.time_since_epoch()).count() + t.hour * 3600 +
         t.minute * 60 + t.second;
}

Timestamp from_epoch_seconds(std::int64_t total, TimestampStyle style) {
  using namespace std::chrono;
  std::int64_t day_count = total / 86400;
  std::int64_t in_day = total % 86400;
  if (in_day < 0) {
    in_day += 86400;
    --day_count;
  }
  const year_month_day ymd{sys_days{days{day_count}}};
  Timestamp t;
  t.year = static_cast<int>(ymd.year());
  t.month = static_cast<int>(static_cast<unsigned>(ymd.month()));
  t.day = static_cast<int>(static_cast<unsigned>(ymd.day()));
  t.hour = static_cast<int>(in_day / 3600);
  t.minute = static_cast<int>((in_day % 3600) / 60);
  t.second = static_cast<int>(in_day % 60);
  t.style = style;
  return t;
}

void GenTemplate::validate() const {
  if (codes.empty()) throw ConfigError("template has no event codes");
  if (patterns.empty()) throw ConfigError("template has no description patterns");
  double total = 0.0;
  for (const WeightedCode& wc : codes) {
    if (wc.weight < 0.0) throw ConfigError("negative code weight: " + wc.code);
    if (wc.code.empty() || wc.code.size() > 32 ||
        wc.code.find_first_of(" \t") != std::string::npos) {
      throw ConfigError("bad event code: '" + wc.code + "'");
    }
    total += wc.weight;
  }
  if (total <= 0.0) throw ConfigError("code weights sum to zero");
  if (mean_gap <= 0.0) throw ConfigError("mean_gap must be > 0");
  for (const std::string& p : patterns) {
    if (p.empty() || p.find('\n') != std::string::npos) throw ConfigError("bad pattern: " + p);
  }
}

GenTemplate GenTemplate::load(const std::string& path) {
  KeyValueConfig cfg = KeyValueConfig::parse_file(path);
  cfg.require_known_keys({"start", "style", "mean_gap", "code", "pattern"});
  GenTemplate t;
  FieldSchema any;  // all notations accepted for the start stamp
  t.start = parse_timestamp(cfg.get_or("start", "2021-08-30T10:49:58"), any);
  if (cfg.has("style")) {
    auto style = timestamp_style_from_string(cfg.get("style"));
    if (!style) throw ConfigError("unknown style: " + cfg.get("style"));
    t.start.style = *style;
  }
  t.mean_gap = cfg.get_double_or("mean_gap", 2.0);
  for (const std::string& spec : cfg.get_all("code")) {
    std::istringstream in(spec);
    WeightedCode wc;
    in >> wc.code;
    if (!(in >> wc.weight)) wc.weight = 1.0;
    t.codes.push_back(std::move(wc));
  }
  for (const std::string& p : cfg.get_all("pattern")) {
    t.patterns.push_back(cleanse_whitespace(p));
  }
  t.validate();
  return t;
}

GenTemplate default_template() {
  GenTemplate t;
  t.codes = {{"INFO", 6}, {"PSTART", 2}, {"PWRITE", 3}, {"PDONE", 2},
             {"EFR", 1},  {"EFW", 1},    {"WLOW", 1}};
  t.patterns = {
      "Write failed for volume {hex}",
      "Could not access file {word}.dll",
      "Loaded servicing stack v{ver}",
      "Session {hex} initialized by client {word}",
      "Read out cached package applicability for package {word}-{num}",
      "Process {word}.exe reported status {num}",
      "Store corruption check finished with {num} issues",
      "Low disk space on volume {hex}",
  };
  t.start = Timestamp{2021, 8, 30, 10, 49, 58, TimestampStyle::kCompact};
  t.mean_gap = 2.0;
  return t;
}

GenTemplate mine_template(const std::vector<LogEntry>& entries, std::size_t max_patterns,
                          std::size_t code_min_count) {
  if (entries.empty()) throw ConfigError("cannot mine a template from an empty corpus");
  std::map<std::string, std::size_t> code_freq;
  std::map<std::string, std::size_t> desc_freq;
  for (const LogEntry& e : entries) {
    ++code_freq[e.event_code];
    ++desc_freq[e.description];
  }

  GenTemplate t;
  for (auto& [code, n] : code_freq) {
    if (n >= code_min_count) t.codes.push_back({code, static_cast<double>(n)});
  }
  if (t.codes.empty()) {
    for (auto& [code, n] : code_freq) t.codes.push_back({code, static_cast<double>(n)});
  }

  std::vector<std::pair<std::string, std::size_t>> descs(desc_freq.begin(), desc_freq.end());
  std::stable_sort(descs.begin(), descs.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  for (std::size_t i = 0; i < descs.size() && i < max_patterns; ++i) {
    t.patterns.push_back(descs[i].first);
  }

  t.start = entries.front().timestamp;
  for (const LogEntry& e : entries) {
    if (e.timestamp.instant() < t.start.instant()) t.start = e.timestamp;
  }
  t.validate();
  return t;
}

namespace {

const char* const kWords[] = {"volume",  "package", "session", "manifest", "store",  "cache",
                              "update",  "driver",  "registry", "component", "payload", "index"};

std::string fill_slots(const std::string& pattern, SplitMix64& rng) {
  std::string out;
  out.reserve(pattern.size());
  std::size_t i = 0;
  while (i < pattern.size()) {
    if (pattern[i] != '{') {
      out += pattern[i++];
      continue;
    }
    std::size_t close = pattern.find('}', i);
    if (close == std::string::npos) {
      out += pattern.substr(i);
      break;
    }
    const std::string slot = pattern.substr(i + 1, close - i - 1);
    if (slot == "hex") {
      static const char* digits = "0123456789abcdef";
      for (int k = 0; k < 8; ++k) out += digits[rng.next_below(16)];
    } else if (slot == "num") {
      out += std::to_string(rng.next_below(10000));
    } else if (slot == "word") {
      out += kWords[rng.next_below(std::size(kWords))];
    } else if (slot == "ver") {
      out += std::to_string(1 + rng.next_below(10)) + "." + std::to_string(rng.next_below(10)) +
             "." + std::to_string(rng.next_below(9999)) + "." + std::to_string(rng.next_below(99999));
    } else {
      out += pattern.substr(i, close - i + 1);  // unknown slot stays literal
    }
    i = close + 1;
  }
  return out;
}

std::size_t draw_weighted(const std::vector<WeightedCode>& codes, double total, SplitMix64& rng) {
  double u = rng.next_unit() * total;
  for (std::size_t i = 0; i < codes.size(); ++i) {
    u -= codes[i].weight;
    if (u < 0.0) return i;
  }
  return codes.size() - 1;
}

std::int64_t draw_geometric_gap(double mean, SplitMix64& rng) {
  // Geometric over {0,1,2,...} with the given mean; zero gaps make ties.
  const double p_continue = mean / (1.0 + mean);
  const double u = rng.next_unit_pos();
  const double k = std::floor(std::log(u) / std::log(p_continue));
  return k < 0.0 ? 0 : static_cast<std::int64_t>(std::min(k, 1e9));
}

/// First index whose code depends on something not yet seen, or npos.
std::size_t first_coherence_violation(const std::vector<std::size_t>& code_ids,
                                      const std::vector<WeightedCode>& codes,
                                      const CoherenceRuleSet& rules) {
  std::set<std::string> seen;
  for (std::size_t i = 0; i < code_ids.size(); ++i) {
    const std::string& code = codes[code_ids[i]].code;
    for (const CoherenceRule& rule : rules.rules) {
      if (rule.dependent_code == code && !seen.count(rule.precondition_code)) return i;
    }
    seen.insert(code);
  }
  return std::string::npos;
}

}  // namespace

LogFile generate_static(const GenTemplate& tmpl, std::size_t n, std::uint64_t seed,
                        FileOrder order, const CoherenceRuleSet& rules) {
  tmpl.validate();
  LogFile file;
  file.declared_order = order == FileOrder::kDescending ? FileOrder::kDescending
                                                        : FileOrder::kAscending;
  if (n == 0) return file;

  SplitMix64 rng(derive_seed(seed, 0x57a7'16e9));
  double total_weight = 0.0;
  for (const WeightedCode& wc : tmpl.codes) total_weight += wc.weight;

  // Event codes first: coherence is a property of the code sequence alone.
  std::vector<std::size_t> code_ids(n);
  for (std::size_t i = 0; i < n; ++i) code_ids[i] = draw_weighted(tmpl.codes, total_weight, rng);

  if (!rules.empty()) {
    std::map<std::string, std::size_t> code_index;
    for (std::size_t i = 0; i < tmpl.codes.size(); ++i) code_index[tmpl.codes[i].code] = i;
    std::size_t budget = 10 * n + 1000;
    for (;;) {
      std::size_t bad = first_coherence_violation(code_ids, tmpl.codes, rules);
      if (bad == std::string::npos) break;
      if (budget-- == 0) throw ConfigError("coherence rules not satisfiable by injection");
      const std::string& code = tmpl.codes[code_ids[bad]].code;
      for (const CoherenceRule& rule : rules.rules) {
        if (rule.dependent_code != code) continue;
        auto it = code_index.find(rule.precondition_code);
        if (it == code_index.end()) {
          throw ConfigError("rule precondition '" + rule.precondition_code +
                            "' is not in the template code pool");
        }
        // Prepend one precondition at a random earlier slot; trim the tail to
        // keep n entries (dropping the newest entry cannot break any rule).
        std::size_t slot = static_cast<std::size_t>(rng.next_below(bad + 1));
        code_ids.insert(code_ids.begin() + static_cast<std::ptrdiff_t>(slot), it->second);
        if (code_ids.size() > n) code_ids.pop_back();
        break;
      }
    }
  }

  std::int64_t when = to_epoch_seconds(tmpl.start);
  file.entries.reserve(code_ids.size());
  for (std::size_t id : code_ids) {
    LogEntry e;
    e.timestamp = from_epoch_seconds(when, tmpl.start.style);
    e.event_code = tmpl.codes[id].code;
    e.description = fill_slots(tmpl.patterns[rng.next_below(tmpl.patterns.size())], rng);
    file.entries.push_back(std::move(e));
    when += draw_geometric_gap(tmpl.mean_gap, rng);
  }

  if (order == FileOrder::kDescending) {
    std::reverse(file.entries.begin(), file.entries.end());
  }
  return file;
}

}  // namespace logforge
