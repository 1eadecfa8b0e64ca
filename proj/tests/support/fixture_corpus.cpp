#include "fixture_corpus.hpp"

#include <fstream>

#include "logforge/rng.hpp"
#include "logforge/staticgen.hpp"

namespace logforge::testing {

namespace {

const char* const kClients = "wusa|tiworker|poqexec|cbsng|dism|sfc|msiexec|trustedinstaller";
const char* const kPackages =
    "KB4052623|KB5003791|KB5006670|KB4562830|KB5011543|Package_1_for_KB4052623|"
    "Package_2_for_KB5003791|Package_for_RollupFix|Microsoft-Windows-Foundation|"
    "Microsoft-Windows-PrintSpooler|Microsoft-Windows-NetFx3|WinPE-Fonts|WinPE-WMI|"
    "InternetExplorer-Optional|Hyper-V-Guest|RemoteDesktop-Services|"
    "Windows-Defender-Default-Definitions|LanguagePack-de-DE|LanguagePack-en-US";
const char* const kProcs =
    "TiWorker.exe|TrustedInstaller.exe|CbsCore.dll|wcp.dll|poqexec.exe|drvinst.exe|"
    "msiexec.exe|sfc.exe|dismhost.exe|wusa.exe";
const char* const kFiles =
    "pending.xml|poqexec.log|SessionState.xml|StoreCorruption.db|manifest.cix|catalog.cat|"
    "settings.dat|servicing.log|component.mum|deployment.cab|registry.pol|winsxs.idx";
const char* const kVolumes = "C:|D:|E:|volume_a12f|volume_77b0|volume_09cd";
const char* const kVersions = "6.1.7601.17592|6.1.7601.23505|6.1.7601.24499|10.0.19041.1288|"
                              "10.0.19041.746|10.0.22000.194";

std::vector<std::string> split_pool(const char* packed) {
  std::vector<std::string> out;
  std::string cur;
  for (const char* p = packed;; ++p) {
    if (*p == '|' || *p == '\0') {
      out.push_back(cur);
      cur.clear();
      if (*p == '\0') break;
    } else {
      cur += *p;
    }
  }
  return out;
}

}  // namespace

LogFile fixture_corpus(const FixtureOptions& options) {
  SplitMix64 rng(derive_seed(options.seed, 0xf1c7));
  const auto clients = split_pool(kClients);
  const auto packages = split_pool(kPackages);
  const auto procs = split_pool(kProcs);
  const auto files = split_pool(kFiles);
  const auto volumes = split_pool(kVolumes);
  const auto versions = split_pool(kVersions);

  // Session ids repeat within a corpus, like real service logs.
  std::vector<std::string> session_ids;
  for (int i = 0; i < 24; ++i) {
    static const char* hexd = "0123456789abcdef";
    std::string id;
    for (int k = 0; k < 8; ++k) id += hexd[rng.next_below(16)];
    session_ids.push_back(id);
  }

  auto pick = [&](const std::vector<std::string>& pool) -> const std::string& {
    return pool[rng.next_below(pool.size())];
  };

  LogFile file;
  file.declared_order = FileOrder::kAscending;
  std::int64_t when = to_epoch_seconds(Timestamp{2021, 8, 30, 10, 49, 58, options.style});

  auto emit = [&](std::string code, std::string desc) {
    LogEntry e;
    e.timestamp = from_epoch_seconds(when, options.style);
    e.event_code = std::move(code);
    e.description = std::move(desc);
    file.entries.push_back(std::move(e));
    const double gap = rng.next_unit();
    if (gap < 0.35) {
      // same second: exercises non-strict chronology
    } else if (gap < 0.85) {
      when += 1 + static_cast<std::int64_t>(rng.next_below(3));
    } else {
      when += 4 + static_cast<std::int64_t>(rng.next_below(17));
    }
  };

  // Service runs: each run opens with SINIT and closes with SDONE before the
  // idle gap, and every process started inside a run stops inside it. Long
  // gaps therefore separate self-contained segments, which is what lets
  // coherence rules be mined from gap-delimited windows.
  while (file.entries.size() < options.lines) {
    emit("SINIT", "Session " + pick(session_ids) + " initialized by client " + pick(clients));
    const std::size_t run_events = 8 + rng.next_below(28);
    bool process_running = false;
    for (std::size_t i = 0; i < run_events && file.entries.size() + 2 < options.lines; ++i) {
      const double u = rng.next_unit();
      if (!process_running && u < 0.22) {
        process_running = true;
        emit("PSTART", "Starting process " + pick(procs) + " with pid " +
                           std::to_string(100 + rng.next_below(60)));
      } else if (process_running && u < 0.36) {
        emit("PWRITE", "Process " + pick(procs) + " wrote " +
                           std::to_string(64 * (1 + rng.next_below(32))) + " bytes to " +
                           pick(files));
      } else if (process_running && u < 0.40) {
        process_running = false;
        if (rng.next_unit() < 0.25) {
          emit("PCRASH", "Process " + pick(procs) + " terminated unexpectedly with code " +
                             std::to_string(1 + rng.next_below(5)));
        } else {
          emit("PSTOP", "Process " + pick(procs) + " exited with code 0");
        }
      } else if (u < 0.52) {
        emit("CHKAPP", "Read out cached package applicability for package " + pick(packages) +
                           " state " + std::to_string(rng.next_below(8)));
      } else if (u < 0.62) {
        emit("INFO", "Loaded servicing stack v" + pick(versions) + " with core " + pick(files));
      } else if (u < 0.70) {
        emit("INFO", "Store consistency check finished with " +
                         std::to_string(rng.next_below(3)) + " issues");
      } else if (u < 0.78) {
        emit("CHKAPP", "Applicability state " + std::to_string(rng.next_below(8)) +
                           " recorded for package " + pick(packages));
      } else if (u < 0.84) {
        emit("WLOW", "Low disk space on volume " + pick(volumes));
      } else if (u < 0.90) {
        emit("EFR", "Could not access file " + pick(files));
      } else if (u < 0.96) {
        emit("EFW", "Write failed for " + pick(files) + " on volume " + pick(volumes));
      } else {
        emit("INFO", "Manifest hash verified for package " + pick(packages));
      }
    }
    if (process_running) {
      emit("PSTOP", "Process " + pick(procs) + " exited with code 0");
    }
    emit("SDONE",
         "Session " + pick(session_ids) + " completed with status " + std::to_string(rng.next_below(4)));
    // idle time between service runs
    when += 120 + static_cast<std::int64_t>(rng.next_below(780));
  }
  file.entries.resize(options.lines);
  return file;
}

std::vector<std::string> fixture_corpus_lines(const FixtureOptions& options) {
  const LogFile file = fixture_corpus(options);
  FieldSchema schema;
  std::vector<std::string> lines;
  lines.reserve(file.entries.size());
  for (const LogEntry& e : file.entries) lines.push_back(serialize_entry(e, schema));
  return lines;
}

void write_fixture_corpus(const std::string& path, const FixtureOptions& options) {
  const auto lines = fixture_corpus_lines(options);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write fixture corpus: " + path);
  for (const std::string& line : lines) out << line << '\n';
}

}  // namespace logforge::testing
