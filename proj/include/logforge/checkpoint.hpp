#pragma once

#include <optional>
#include <string>

#include "logforge/corpus.hpp"
#include "logforge/nets.hpp"

namespace logforge {

/// Binary container: magic "LOGF", format version, net kind, tokenization
/// mode, vocabulary block, then per-parameter records (name, shape,
/// little-endian 32-bit reals). load(save(net)) reproduces identical outputs.
void save_checkpoint(const std::string& path, const SequenceModel& net, const Vocabulary& vocab);
void save_checkpoint(const std::string& path, const Discriminator& net, const Vocabulary& vocab);

struct LoadedCheckpoint {
  std::string kind;  // "sequence_model" | "discriminator"
  Vocabulary vocab;
  std::optional<SequenceModel> sequence_model;
  std::optional<Discriminator> discriminator;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace logforge
