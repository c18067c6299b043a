#include "amt/ann_index.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace amt {

namespace {

double sq_dist(const float* a, const float* b, std::size_t dim) {
  double s = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    s += d * d;
  }
  return s;
}

double dot(const float* a, const float* b, std::size_t dim) {
  double s = 0.0;
  for (std::size_t i = 0; i < dim; ++i) s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return s;
}

// Little-endian encoding helpers for the snapshot format.
template <typename T>
void put(std::string& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > bytes_.size()) throw Error(ErrorCode::BadSnapshot, "truncated snapshot");
    char buf[sizeof(T)];
    std::memcpy(buf, bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    pos_ += sizeof(T);
    T value;
    std::memcpy(&value, buf, sizeof(T));
    return value;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::size_t default_nlist(std::size_t n) {
  if (n == 0) return 1;
  double root = std::sqrt(static_cast<double>(n));
  if (4.0 * root <= 4096.0 && 4096.0 <= 16.0 * root && n >= 4096) return 4096;
  auto v = static_cast<std::size_t>(std::ceil(4.0 * root));
  return std::clamp<std::size_t>(v, 1, n);
}

IvfIndex::IvfIndex(std::size_t dim, Metric metric) : dim_(dim), metric_(metric) {
  if (dim_ == 0) throw Error(ErrorCode::InvalidArgument, "index dim must be positive");
}

std::vector<float> IvfIndex::prepare(const Embedding& v) const {
  if (v.dim() != dim_)
    throw Error(ErrorCode::DimensionMismatch,
                "expected dim " + std::to_string(dim_) + ", got " + std::to_string(v.dim()));
  const Embedding& src = v;
  Embedding normed;
  if (metric_ == Metric::Cosine) {
    normed = v.normalized();
  }
  const auto& vals = metric_ == Metric::Cosine ? normed.values() : src.values();
  std::vector<float> out(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) out[i] = static_cast<float>(vals[i]);
  return out;
}

IvfIndex IvfIndex::train(std::span<const Embedding> vectors, std::size_t nlist, std::uint64_t seed,
                         Metric metric, KMeansOptions opts) {
  if (nlist == 0) throw Error(ErrorCode::InvalidArgument, "nlist must be >= 1");
  if (vectors.size() < nlist)
    throw Error(ErrorCode::TooFewVectors, std::to_string(vectors.size()) + " vectors for nlist " +
                                              std::to_string(nlist));
  const std::size_t dim = vectors.front().dim();
  IvfIndex index(dim, metric);
  const std::size_t n = vectors.size();

  std::vector<float> data(n * dim);
  for (std::size_t i = 0; i < n; ++i) {
    if (vectors[i].dim() != dim) throw Error(ErrorCode::DimensionMismatch, "ragged training set");
    auto p = index.prepare(vectors[i]);
    std::copy(p.begin(), p.end(), data.begin() + static_cast<std::ptrdiff_t>(i * dim));
  }
  auto row = [&](std::size_t i) { return data.data() + i * dim; };

  // k-means++ seeding.
  std::mt19937_64 rng(seed);
  std::vector<float> cent(nlist * dim);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::size_t first = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  std::copy(row(first), row(first) + dim, cent.begin());
  for (std::size_t c = 1; c < nlist; ++c) {
    const float* prev = cent.data() + (c - 1) * dim;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], sq_dist(row(i), prev, dim));
      total += d2[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double r = std::uniform_real_distribution<double>(0.0, total)(rng);
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > r && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    }
    std::copy(row(pick), row(pick) + dim, cent.begin() + static_cast<std::ptrdiff_t>(c * dim));
  }

  // Lloyd iterations.
  std::vector<std::size_t> assign(n, 0);
  std::vector<double> sums(nlist * dim);
  std::vector<std::size_t> counts(nlist);
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t arg = 0;
      for (std::size_t c = 0; c < nlist; ++c) {
        double d = sq_dist(row(i), cent.data() + c * dim, dim);
        if (d < best) {
          best = d;
          arg = c;
        }
      }
      assign[i] = arg;
    }
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[assign[i]];
      double* s = sums.data() + assign[i] * dim;
      for (std::size_t j = 0; j < dim; ++j) s[j] += row(i)[j];
    }
    std::vector<float> next(nlist * dim);
    for (std::size_t c = 0; c < nlist; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t j = 0; j < dim; ++j)
        next[c * dim + j] = static_cast<float>(sums[c * dim + j] / static_cast<double>(counts[c]));
    }
    // Empty clusters: split the currently largest cluster in two by
    // perturbing its centroid symmetrically.
    for (std::size_t c = 0; c < nlist; ++c) {
      if (counts[c] != 0) continue;
      std::size_t largest = static_cast<std::size_t>(
          std::max_element(counts.begin(), counts.end()) - counts.begin());
      constexpr float kEps = 1.0f / 1024.0f;
      for (std::size_t j = 0; j < dim; ++j) {
        float base = next[largest * dim + j];
        float sign = (j % 2 == 0) ? 1.0f : -1.0f;
        next[c * dim + j] = base * (1.0f + sign * kEps) + sign * kEps * 1e-3f;
        next[largest * dim + j] = base * (1.0f - sign * kEps) - sign * kEps * 1e-3f;
      }
      counts[c] = counts[largest] / 2;
      counts[largest] -= counts[c];
    }
    double shift = 0.0;
    double mass = 0.0;
    for (std::size_t k = 0; k < cent.size(); ++k) {
      double d = static_cast<double>(next[k]) - static_cast<double>(cent[k]);
      shift += d * d;
      mass += static_cast<double>(cent[k]) * static_cast<double>(cent[k]);
    }
    cent = std::move(next);
    if (mass > 0.0 && shift / mass < opts.tolerance) break;
    if (mass == 0.0 && shift == 0.0) break;
  }

  for (float v : cent) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "k-means produced a non-finite centroid");
  }
  index.nlist_ = nlist;
  index.centroids_ = std::move(cent);
  index.postings_.assign(nlist, Posting{});
  return index;
}

std::size_t IvfIndex::nearest_centroid(std::span<const float> v) const {
  double best = std::numeric_limits<double>::infinity();
  std::size_t arg = 0;
  for (std::size_t c = 0; c < nlist_; ++c) {
    double d = sq_dist(v.data(), centroids_.data() + c * dim_, dim_);
    if (d < best) {
      best = d;
      arg = c;
    }
  }
  return arg;
}

void IvfIndex::add(std::uint64_t id, const Embedding& vector) {
  if (!trained()) throw Error(ErrorCode::NotTrained, "add before train");
  auto p = prepare(vector);
  if (ids_.count(id)) throw Error(ErrorCode::DuplicateId, "id " + std::to_string(id) + " already stored");
  auto& list = postings_[nearest_centroid(p)];
  list.ids.push_back(id);
  list.data.insert(list.data.end(), p.begin(), p.end());
  ids_.insert(id);
}

std::vector<std::size_t> IvfIndex::probe_order(std::span<const float> q, std::size_t nprobe) const {
  std::vector<std::pair<double, std::size_t>> d(nlist_);
  for (std::size_t c = 0; c < nlist_; ++c) d[c] = {sq_dist(q.data(), centroids_.data() + c * dim_, dim_), c};
  std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(nprobe), d.end());
  std::vector<std::size_t> out(nprobe);
  for (std::size_t i = 0; i < nprobe; ++i) out[i] = d[i].second;
  return out;
}

double IvfIndex::score(std::span<const float> q, const float* v) const {
  return metric_ == Metric::Cosine ? dot(q.data(), v, dim_) : sq_dist(q.data(), v, dim_);
}

std::vector<SearchHit> IvfIndex::search(const Embedding& query, SearchParams params) const {
  if (!trained()) throw Error(ErrorCode::NotTrained, "search before train");
  if (params.k == 0) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  if (params.nprobe < 1 || params.nprobe > nlist_)
    throw Error(ErrorCode::InvalidArgument, "nprobe must be in [1, " + std::to_string(nlist_) + "]");
  auto q = prepare(query);
  std::vector<SearchHit> hits;
  for (std::size_t list : probe_order(q, params.nprobe)) {
    const auto& p = postings_[list];
    for (std::size_t i = 0; i < p.ids.size(); ++i) hits.push_back({p.ids[i], score(q, p.data.data() + i * dim_)});
  }
  auto better = [this](const SearchHit& a, const SearchHit& b) {
    if (a.score != b.score) return metric_ == Metric::Cosine ? a.score > b.score : a.score < b.score;
    return a.id < b.id;
  };
  std::size_t k = std::min(params.k, hits.size());
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(k), hits.end(), better);
  hits.resize(k);
  return hits;
}

std::span<const std::uint64_t> IvfIndex::posting_ids(std::size_t list) const {
  if (list >= postings_.size()) throw Error(ErrorCode::InvalidArgument, "no such posting list");
  return postings_[list].ids;
}

std::size_t IvfIndex::list_of(std::uint64_t id) const {
  for (std::size_t l = 0; l < postings_.size(); ++l) {
    const auto& ids = postings_[l].ids;
    if (std::find(ids.begin(), ids.end(), id) != ids.end()) return l;
  }
  throw Error(ErrorCode::NotFound, "id " + std::to_string(id) + " not stored");
}

std::string IvfIndex::serialize() const {
  if (!trained()) throw Error(ErrorCode::NotTrained, "cannot snapshot an untrained index");
  std::string out;
  put<std::uint32_t>(out, kMagic);
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(dim_));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(nlist_));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(metric_));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(ids_.size()));
  for (float v : centroids_) put<float>(out, v);
  for (const auto& p : postings_) {
    put<std::uint64_t>(out, p.ids.size());
    for (std::size_t i = 0; i < p.ids.size(); ++i) {
      put<std::uint64_t>(out, p.ids[i]);
      for (std::size_t j = 0; j < dim_; ++j) put<float>(out, p.data[i * dim_ + j]);
    }
  }
  return out;
}

IvfIndex IvfIndex::deserialize(std::string_view bytes) {
  Reader r(bytes);
  if (r.get<std::uint32_t>() != kMagic) throw Error(ErrorCode::BadSnapshot, "not an index snapshot");
  auto version = r.get<std::uint32_t>();
  if (version != kVersion)
    throw Error(ErrorCode::BadSnapshot, "unsupported snapshot version " + std::to_string(version));
  auto dim = r.get<std::uint32_t>();
  auto nlist = r.get<std::uint32_t>();
  auto metric = r.get<std::uint32_t>();
  auto count = r.get<std::uint64_t>();
  if (dim == 0 || nlist == 0 || metric > 1) throw Error(ErrorCode::BadSnapshot, "bad snapshot header");
  IvfIndex index(dim, static_cast<Metric>(metric));
  index.nlist_ = nlist;
  index.centroids_.resize(static_cast<std::size_t>(nlist) * dim);
  for (float& v : index.centroids_) v = r.get<float>();
  index.postings_.assign(nlist, Posting{});
  std::uint64_t seen = 0;
  for (auto& p : index.postings_) {
    auto n = r.get<std::uint64_t>();
    if (n > count) throw Error(ErrorCode::BadSnapshot, "posting list larger than count");
    for (std::uint64_t i = 0; i < n; ++i) {
      auto id = r.get<std::uint64_t>();
      if (!index.ids_.insert(id).second) throw Error(ErrorCode::BadSnapshot, "duplicate id in snapshot");
      p.ids.push_back(id);
      for (std::size_t j = 0; j < dim; ++j) p.data.push_back(r.get<float>());
    }
    seen += n;
  }
  if (seen != count || !r.done()) throw Error(ErrorCode::BadSnapshot, "snapshot count mismatch");
  return index;
}

void IvfIndex::save(const std::filesystem::path& path) const {
  auto bytes = serialize();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

IvfIndex IvfIndex::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

}  // namespace amt
