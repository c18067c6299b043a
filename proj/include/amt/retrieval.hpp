#pragma once

// Fuzzy-match retrieval over a project's TM: embed the query source,
// search the IVF index, map ids (TM positions) back to units.

#include <cstdint>
#include <optional>
#include <vector>

#include "amt/ann_index.hpp"
#include "amt/domain.hpp"
#include "amt/embedder.hpp"
#include "amt/tm_store.hpp"

namespace amt {

struct IndexBuildOptions {
  std::size_t nlist = 0;  // 0: default_nlist(tm size)
  std::uint64_t seed = 7;
  KMeansOptions kmeans;
};

// IVF index over a TM where external id = position of the unit in the TM.
class TmIndex {
 public:
  // Embeds every unit source and trains on them. Throws EmptyTm.
  static TmIndex build(const Project& project, const Embedder& embedder, IndexBuildOptions opts = {});

  // Adds units appended since the last build/refresh to their nearest
  // existing centroid. Returns the number added.
  std::size_t refresh(const Project& project, const Embedder& embedder);

  std::size_t indexed_count() const noexcept { return indexed_; }
  bool in_sync(const Project& project) const { return indexed_ == project.size(); }
  const IvfIndex& index() const noexcept { return index_; }

  TmIndex(IvfIndex index, std::size_t indexed) : index_(std::move(index)), indexed_(indexed) {}

 private:
  IvfIndex index_;
  std::size_t indexed_;
};

struct RetrievalConfig {
  std::size_t top_k = 10;
  bool exclude_exact_self = true;
  double min_similarity = -1.0;
  std::size_t nprobe = 32;  // clamped to the index's nlist

  void validate() const;
};

// Throws EmptyTm, IndexStale.
std::vector<FuzzyMatch> top_fuzzy(const Project& project, const TmIndex& index,
                                  const Embedder& embedder, const std::string& source,
                                  const RetrievalConfig& cfg = {});

struct SimilarityHistogram {
  std::vector<double> bucket_edges;
  std::vector<std::size_t> counts;  // bucket i is [edges[i], edges[i+1])
  std::size_t out_of_range = 0;     // similarities outside [edges.front(), edges.back())

  std::size_t total() const;
};

std::vector<double> default_histogram_edges();

// Throws BadEdges unless edges are finite, strictly ascending, size >= 2.
SimilarityHistogram match_stats(const std::vector<std::vector<FuzzyMatch>>& matches_per_query,
                                const std::vector<double>& edges = default_histogram_edges());

}  // namespace amt
