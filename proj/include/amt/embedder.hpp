#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "amt/error.hpp"

namespace amt {

class Embedding {
 public:
  Embedding() = default;
  // Throws InvalidArgument on non-finite values.
  explicit Embedding(std::vector<double> values);

  const std::vector<double>& values() const noexcept { return values_; }
  std::size_t dim() const noexcept { return values_.size(); }
  double norm() const noexcept { return norm_; }

  Embedding normalized() const;  // throws ZeroVector
  Embedding scaled(double alpha) const;

  bool operator==(const Embedding& o) const { return values_ == o.values_; }

 private:
  std::vector<double> values_;
  double norm_ = 0.0;
};

// Cosine similarity, clamped to [-1, 1]. Throws DimensionMismatch or
// ZeroVector.
double cosine(const Embedding& a, const Embedding& b);

enum class EmbedderProvider { Remote, DeterministicHash };

struct EmbedderConfig {
  EmbedderProvider provider = EmbedderProvider::DeterministicHash;
  std::size_t dim = 384;
  bool normalize = true;
  // Remote provider only.
  std::string endpoint;  // e.g. http://127.0.0.1:9000/embed
  std::string auth_token;
  std::chrono::milliseconds timeout{10000};

  void validate() const;  // dim >= 8
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::size_t dim() const = 0;
  // One embedding per input, same order. Inputs must be non-empty.
  virtual std::vector<Embedding> embed_batch(const std::vector<std::string>& texts) const = 0;

  Embedding embed(const std::string& text) const { return embed_batch({text}).front(); }
};

// Character 3-gram hashing embedder.
//
// The text is NFC-normalized and lowercased, then padded with U+0002 in
// front and U+0003 at the end. Every window of three code points is
// encoded as UTF-8 and hashed with 64-bit FNV-1a whose offset basis is
// XORed with kHashSeed; the count in bucket (hash % dim) is incremented.
// The count vector is L2-normalized when configured.
class HashEmbedder final : public Embedder {
 public:
  static constexpr std::uint64_t kHashSeed = 0x9E3779B97F4A7C15ULL;

  explicit HashEmbedder(std::size_t dim = 384, bool normalize = true);

  std::size_t dim() const override { return dim_; }
  std::vector<Embedding> embed_batch(const std::vector<std::string>& texts) const override;

  static std::uint64_t hash_bytes(std::string_view bytes);

 private:
  std::size_t dim_;
  bool normalize_;
};

// POST {"texts": [...]} -> {"embeddings": [[...], ...]}.
class RemoteEmbedder final : public Embedder {
 public:
  explicit RemoteEmbedder(EmbedderConfig cfg);

  std::size_t dim() const override { return cfg_.dim; }
  std::vector<Embedding> embed_batch(const std::vector<std::string>& texts) const override;

 private:
  EmbedderConfig cfg_;
};

std::unique_ptr<Embedder> make_embedder(const EmbedderConfig& cfg);

std::vector<Embedding> embed_batch(const std::vector<std::string>& texts, const EmbedderConfig& cfg);

}  // namespace amt
