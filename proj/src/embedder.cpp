#include "amt/embedder.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "amt/text.hpp"
#include "http_util.hpp"

namespace amt {

namespace {

double l2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

Embedding::Embedding(std::vector<double> values) : values_(std::move(values)) {
  for (double x : values_) {
    if (!std::isfinite(x)) throw Error(ErrorCode::InvalidArgument, "embedding has non-finite value");
  }
  norm_ = l2(values_);
}

Embedding Embedding::normalized() const {
  if (norm_ == 0.0) throw Error(ErrorCode::ZeroVector, "cannot normalize a zero vector");
  std::vector<double> out(values_);
  for (double& x : out) x /= norm_;
  return Embedding(std::move(out));
}

Embedding Embedding::scaled(double alpha) const {
  std::vector<double> out(values_);
  for (double& x : out) x *= alpha;
  return Embedding(std::move(out));
}

double cosine(const Embedding& a, const Embedding& b) {
  if (a.dim() != b.dim())
    throw Error(ErrorCode::DimensionMismatch,
                std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
  if (a.norm() == 0.0 || b.norm() == 0.0) throw Error(ErrorCode::ZeroVector, "cosine of zero vector");
  double dot = 0.0;
  const auto& x = a.values();
  const auto& y = b.values();
  for (std::size_t i = 0; i < x.size(); ++i) dot += x[i] * y[i];
  return std::clamp(dot / (a.norm() * b.norm()), -1.0, 1.0);
}

void EmbedderConfig::validate() const {
  if (dim < 8) throw Error(ErrorCode::InvalidArgument, "embedding dim must be >= 8");
  if (provider == EmbedderProvider::Remote && endpoint.empty())
    throw Error(ErrorCode::InvalidArgument, "remote embedder needs an endpoint");
}

HashEmbedder::HashEmbedder(std::size_t dim, bool normalize) : dim_(dim), normalize_(normalize) {
  if (dim_ < 8) throw Error(ErrorCode::InvalidArgument, "embedding dim must be >= 8");
}

std::uint64_t HashEmbedder::hash_bytes(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ kHashSeed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<Embedding> HashEmbedder::embed_batch(const std::vector<std::string>& texts) const {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    if (t.empty()) throw Error(ErrorCode::InvalidArgument, "cannot embed empty text");
    std::u32string cps = text::to_u32(text::to_lower(text::nfc(t)));
    std::u32string padded;
    padded.reserve(cps.size() + 2);
    padded.push_back(U'\u0002');
    padded += cps;
    padded.push_back(U'\u0003');
    std::vector<double> counts(dim_, 0.0);
    for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
      std::string gram = text::to_utf8(std::u32string_view(padded).substr(i, 3));
      counts[hash_bytes(gram) % dim_] += 1.0;
    }
    Embedding e(std::move(counts));
    out.push_back(normalize_ ? e.normalized() : std::move(e));
  }
  return out;
}

RemoteEmbedder::RemoteEmbedder(EmbedderConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

std::vector<Embedding> RemoteEmbedder::embed_batch(const std::vector<std::string>& texts) const {
  for (const auto& t : texts) {
    if (t.empty()) throw Error(ErrorCode::InvalidArgument, "cannot embed empty text");
  }
  auto j = detail::post_json(cfg_.endpoint, cfg_.auth_token, cfg_.timeout, nlohmann::json{{"texts", texts}},
                             ErrorCode::ProviderUnavailable);
  std::vector<Embedding> out;
  try {
    for (const auto& row : j.at("embeddings")) {
      auto values = row.get<std::vector<double>>();
      if (values.size() != cfg_.dim)
        throw Error(ErrorCode::DimensionMismatch,
                    "provider returned dim " + std::to_string(values.size()));
      Embedding e(std::move(values));
      out.push_back(cfg_.normalize ? e.normalized() : std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ProviderUnavailable, std::string("bad embedding response: ") + e.what());
  }
  if (out.size() != texts.size())
    throw Error(ErrorCode::ProviderUnavailable, "provider returned wrong number of embeddings");
  return out;
}

std::unique_ptr<Embedder> make_embedder(const EmbedderConfig& cfg) {
  cfg.validate();
  if (cfg.provider == EmbedderProvider::Remote) return std::make_unique<RemoteEmbedder>(cfg);
  return std::make_unique<HashEmbedder>(cfg.dim, cfg.normalize);
}

std::vector<Embedding> embed_batch(const std::vector<std::string>& texts, const EmbedderConfig& cfg) {
  return make_embedder(cfg)->embed_batch(texts);
}

}  // namespace amt
