#include "logforge/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace logforge {

static_assert(std::endian::native == std::endian::little,
              "checkpoint container is little-endian");

namespace {

constexpr char kMagic[4] = {'L', 'O', 'G', 'F'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_string(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t get_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw std::runtime_error("truncated checkpoint");
  return v;
}

std::string get_string(std::istream& in) {
  std::string s(get_u32(in), '\0');
  in.read(s.data(), static_cast<std::streamsize>(s.size()));
  if (!in) throw std::runtime_error("truncated checkpoint");
  return s;
}

void put_tensor(std::ostream& out, const std::string& name, const Tensor& t) {
  put_string(out, name);
  put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
  for (int d : t.shape) put_u32(out, static_cast<std::uint32_t>(d));
  out.write(reinterpret_cast<const char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(float)));
}

Tensor get_tensor(std::istream& in, std::string* name) {
  *name = get_string(in);
  const std::uint32_t rank = get_u32(in);
  std::vector<int> shape(rank);
  for (std::uint32_t i = 0; i < rank; ++i) shape[i] = static_cast<int>(get_u32(in));
  Tensor t(shape);
  in.read(reinterpret_cast<char*>(t.data.data()),
          static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  if (!in) throw std::runtime_error("truncated checkpoint");
  return t;
}

template <typename Net>
void save_impl(const std::string& path, const std::string& kind, const Net& net,
               const Vocabulary& vocab) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  out.write(kMagic, 4);
  put_u32(out, kVersion);
  put_string(out, kind);
  put_u32(out, vocab.mode() == TokenMode::kWord ? 0u : 1u);
  put_u32(out, static_cast<std::uint32_t>(vocab.tokens().size()));
  for (const std::string& tok : vocab.tokens()) put_string(out, tok);
  put_u32(out, static_cast<std::uint32_t>(net.embed_dim));
  put_u32(out, static_cast<std::uint32_t>(net.hidden_dim));
  const auto params = net.params();
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, tensor] : params) put_tensor(out, name, *tensor);
  if (!out) throw std::runtime_error("failed writing checkpoint: " + path);
}

}  // namespace

void save_checkpoint(const std::string& path, const SequenceModel& net, const Vocabulary& vocab) {
  save_impl(path, "sequence_model", net, vocab);
}

void save_checkpoint(const std::string& path, const Discriminator& net, const Vocabulary& vocab) {
  save_impl(path, "discriminator", net, vocab);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("not a checkpoint file: " + path);
  }
  const std::uint32_t version = get_u32(in);
  if (version != kVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }

  LoadedCheckpoint loaded;
  loaded.kind = get_string(in);
  const TokenMode mode = get_u32(in) == 0 ? TokenMode::kWord : TokenMode::kChar;
  const std::uint32_t vocab_size = get_u32(in);
  std::vector<std::string> tokens(vocab_size);
  for (std::uint32_t i = 0; i < vocab_size; ++i) tokens[i] = get_string(in);
  loaded.vocab = Vocabulary::from_tokens(std::move(tokens), mode);

  const int embed_dim = static_cast<int>(get_u32(in));
  const int hidden_dim = static_cast<int>(get_u32(in));
  const std::uint32_t record_count = get_u32(in);

  auto read_into = [&](auto& net) {
    auto params = net.params();
    if (params.size() != record_count) {
      throw std::runtime_error("checkpoint parameter count mismatch");
    }
    for (auto& [expected_name, tensor] : params) {
      std::string name;
      Tensor t = get_tensor(in, &name);
      if (name != expected_name) {
        throw std::runtime_error("unexpected parameter '" + name + "', wanted '" +
                                 expected_name + "'");
      }
      *tensor = std::move(t);
    }
  };

  if (loaded.kind == "sequence_model") {
    SequenceModel net;
    net.vocab = static_cast<int>(vocab_size);
    net.embed_dim = embed_dim;
    net.hidden_dim = hidden_dim;
    read_into(net);
    loaded.sequence_model = std::move(net);
  } else if (loaded.kind == "discriminator") {
    Discriminator net;
    net.vocab = static_cast<int>(vocab_size);
    net.embed_dim = embed_dim;
    net.hidden_dim = hidden_dim;
    read_into(net);
    loaded.discriminator = std::move(net);
  } else {
    throw std::runtime_error("unknown checkpoint kind: " + loaded.kind);
  }
  return loaded;
}

}  // namespace logforge
