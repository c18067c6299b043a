#include "amt/retrieval.hpp"

#include <algorithm>
#include <cmath>

namespace amt {

namespace {

std::vector<std::string> sources_of(const std::vector<TranslationUnit>& units) {
  std::vector<std::string> out;
  out.reserve(units.size());
  for (const auto& u : units) out.push_back(u.source());
  return out;
}

}  // namespace

TmIndex TmIndex::build(const Project& project, const Embedder& embedder, IndexBuildOptions opts) {
  auto units = project.units();
  if (units.empty()) throw Error(ErrorCode::EmptyTm, "project " + project.id() + " has no units");
  auto vectors = embedder.embed_batch(sources_of(units));
  std::size_t nlist = opts.nlist == 0 ? default_nlist(units.size()) : opts.nlist;
  auto index = IvfIndex::train(vectors, nlist, opts.seed, Metric::Cosine, opts.kmeans);
  for (std::size_t i = 0; i < vectors.size(); ++i) index.add(i, vectors[i]);
  return TmIndex(std::move(index), units.size());
}

std::size_t TmIndex::refresh(const Project& project, const Embedder& embedder) {
  auto fresh = project.units_from(indexed_);
  if (fresh.empty()) return 0;
  auto vectors = embedder.embed_batch(sources_of(fresh));
  for (std::size_t i = 0; i < vectors.size(); ++i) index_.add(indexed_ + i, vectors[i]);
  indexed_ += fresh.size();
  return fresh.size();
}

void RetrievalConfig::validate() const {
  if (top_k < 1) throw Error(ErrorCode::InvalidArgument, "top_k must be >= 1");
  if (nprobe < 1) throw Error(ErrorCode::InvalidArgument, "nprobe must be >= 1");
}

std::vector<FuzzyMatch> top_fuzzy(const Project& project, const TmIndex& index,
                                  const Embedder& embedder, const std::string& source,
                                  const RetrievalConfig& cfg) {
  cfg.validate();
  if (project.size() == 0) throw Error(ErrorCode::EmptyTm, "project " + project.id() + " has no units");
  if (!index.in_sync(project))
    throw Error(ErrorCode::IndexStale, "index covers " + std::to_string(index.indexed_count()) +
                                           " of " + std::to_string(project.size()) + " units");
  // Over-fetch by the number of units that will be excluded as self.
  std::size_t extra = cfg.exclude_exact_self ? project.count_source(source) : 0;
  SearchParams params{cfg.top_k + extra, std::min(cfg.nprobe, index.index().nlist())};
  auto hits = index.index().search(embedder.embed(source), params);

  std::vector<FuzzyMatch> out;
  for (const auto& hit : hits) {
    if (out.size() == cfg.top_k) break;
    auto unit = project.unit_at(static_cast<std::size_t>(hit.id));
    if (cfg.exclude_exact_self && unit.source() == source) continue;
    double sim = std::clamp(hit.score, -1.0, 1.0);
    if (sim < cfg.min_similarity) continue;
    out.emplace_back(std::move(unit), sim);
  }
  return out;
}

std::size_t SimilarityHistogram::total() const {
  std::size_t t = out_of_range;
  for (auto c : counts) t += c;
  return t;
}

std::vector<double> default_histogram_edges() {
  return {0.0, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0 + 1e-9};
}

SimilarityHistogram match_stats(const std::vector<std::vector<FuzzyMatch>>& matches_per_query,
                                const std::vector<double>& edges) {
  if (edges.size() < 2) throw Error(ErrorCode::BadEdges, "need at least two edges");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (!std::isfinite(edges[i])) throw Error(ErrorCode::BadEdges, "non-finite edge");
    if (i > 0 && !(edges[i] > edges[i - 1])) throw Error(ErrorCode::BadEdges, "edges must be strictly ascending");
  }
  SimilarityHistogram h{edges, std::vector<std::size_t>(edges.size() - 1, 0), 0};
  for (const auto& matches : matches_per_query) {
    for (const auto& m : matches) {
      double s = m.similarity();
      if (s < edges.front() || s >= edges.back()) {
        ++h.out_of_range;
        continue;
      }
      // First edge strictly greater than s closes the bucket.
      auto it = std::upper_bound(edges.begin(), edges.end(), s);
      ++h.counts[static_cast<std::size_t>(it - edges.begin()) - 1];
    }
  }
  return h;
}

}  // namespace amt
