#pragma once

// Inverted-file flat index: a k-means coarse quantizer partitions the
// stored vectors into nlist posting lists; a query scans the nprobe lists
// whose centroids are nearest (L2) and ranks their members exactly.
//
// Cosine is implemented as inner product over vectors normalized at
// ingest. Vectors are stored as 32-bit floats; scores are accumulated in
// double. Equal scores are ordered by ascending id.
//
// Not internally synchronized: const member functions may run
// concurrently, mutation needs exclusive access. The server publishes
// immutable snapshots through shared_ptr<const IvfIndex>.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "amt/embedder.hpp"

namespace amt {

enum class Metric : std::uint32_t { Cosine = 0, L2 = 1 };

struct SearchParams {
  std::size_t k = 10;
  std::size_t nprobe = 1;
};

struct SearchHit {
  std::uint64_t id;
  double score;  // inner product (cosine) or squared L2 distance

  bool operator==(const SearchHit&) const = default;
};

struct KMeansOptions {
  int max_iterations = 25;
  double tolerance = 1e-4;  // relative centroid shift
};

// nlist heuristic for a corpus of n vectors: 4096 when it lies within
// [4*sqrt(n), 16*sqrt(n)], else clamp(ceil(4*sqrt(n)), 1, n).
std::size_t default_nlist(std::size_t n);

class IvfIndex {
 public:
  static constexpr std::uint32_t kMagic = 0x46564941;  // "AIVF"
  static constexpr std::uint32_t kVersion = 1;

  // An empty, untrained index.
  IvfIndex(std::size_t dim, Metric metric = Metric::Cosine);

  // Runs k-means++ seeded k-means on `vectors`. Throws TooFewVectors when
  // vectors.size() < nlist, DimensionMismatch on ragged input. The training
  // vectors are not added.
  static IvfIndex train(std::span<const Embedding> vectors, std::size_t nlist, std::uint64_t seed,
                        Metric metric = Metric::Cosine, KMeansOptions opts = {});

  // Throws NotTrained, DimensionMismatch, DuplicateId.
  void add(std::uint64_t id, const Embedding& vector);

  // Throws NotTrained, InvalidArgument (k == 0 or nprobe outside
  // [1, nlist]), DimensionMismatch.
  std::vector<SearchHit> search(const Embedding& query, SearchParams params) const;

  std::size_t dim() const noexcept { return dim_; }
  std::size_t nlist() const noexcept { return nlist_; }
  Metric metric() const noexcept { return metric_; }
  bool trained() const noexcept { return nlist_ > 0; }
  std::size_t size() const noexcept { return ids_.size(); }

  // Row-major nlist x dim.
  const std::vector<float>& centroids() const noexcept { return centroids_; }
  std::span<const std::uint64_t> posting_ids(std::size_t list) const;
  // Posting list a stored id lives in; throws NotFound.
  std::size_t list_of(std::uint64_t id) const;

  // Vector as stored (normalized for cosine, float precision).
  std::vector<float> prepare(const Embedding& v) const;

  std::string serialize() const;
  static IvfIndex deserialize(std::string_view bytes);
  void save(const std::filesystem::path& path) const;
  static IvfIndex load(const std::filesystem::path& path);

 private:
  struct Posting {
    std::vector<std::uint64_t> ids;
    std::vector<float> data;  // ids.size() x dim
  };

  std::size_t nearest_centroid(std::span<const float> v) const;
  std::vector<std::size_t> probe_order(std::span<const float> q, std::size_t nprobe) const;
  double score(std::span<const float> q, const float* v) const;

  std::size_t dim_;
  Metric metric_;
  std::size_t nlist_ = 0;
  std::vector<float> centroids_;
  std::vector<Posting> postings_;
  std::unordered_set<std::uint64_t> ids_;
};

}  // namespace amt
