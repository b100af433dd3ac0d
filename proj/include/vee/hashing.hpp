#ifndef VEE_HASHING_HPP
#define VEE_HASHING_HPP

// Hamming-embedding style signatures: a k-means codebook quantizes each
// descriptor to its nearest centroid, and per-centroid median thresholds turn
// the descriptor into an N_F-bit code that refines matches within a cell.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "vee/binary_io.hpp"
#include "vee/error.hpp"
#include "vee/fingerprint.hpp"
#include "vee/random.hpp"

namespace vee {

// Fixed-length bit string packed LSB-first into bytes; padding bits are zero.
class BitCode {
 public:
  BitCode() = default;
  explicit BitCode(std::size_t nbits) : nbits_(nbits), bytes_((nbits + 7) / 8, 0) {}
  BitCode(std::size_t nbits, std::span<const std::uint8_t> packed) : nbits_(nbits), bytes_(packed.begin(), packed.end()) {
    if (bytes_.size() != byte_size(nbits)) throw InvalidInput("packed code has wrong byte length");
    if (nbits % 8 != 0 && !bytes_.empty()) bytes_.back() &= static_cast<std::uint8_t>((1u << (nbits % 8)) - 1);
  }

  static constexpr std::size_t byte_size(std::size_t nbits) { return (nbits + 7) / 8; }

  std::size_t size() const { return nbits_; }
  std::span<const std::uint8_t> bytes() const { return bytes_; }

  bool test(std::size_t k) const { return (bytes_[k >> 3] >> (k & 7)) & 1u; }
  void set(std::size_t k, bool on = true) {
    const auto mask = static_cast<std::uint8_t>(1u << (k & 7));
    if (on) bytes_[k >> 3] |= mask;
    else bytes_[k >> 3] &= static_cast<std::uint8_t>(~mask);
  }

  friend bool operator==(const BitCode&, const BitCode&) = default;

 private:
  std::size_t nbits_ = 0;
  std::vector<std::uint8_t> bytes_;
};

inline std::size_t hamming_distance(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += static_cast<std::size_t>(std::popcount(static_cast<unsigned>(a[i] ^ b[i])));
  return d;
}

struct HashCode {
  std::uint32_t q = 0;  // centroid index
  BitCode b;            // binary refinement, N_F bits

  friend bool operator==(const HashCode&, const HashCode&) = default;
};

/// Number of agreeing bits when both codes share a centroid, otherwise 0.
inline int similarity(const HashCode& a, const HashCode& b) {
  if (a.b.size() != b.b.size()) {
    throw InvalidInput("code length mismatch: " + std::to_string(a.b.size()) + " vs " + std::to_string(b.b.size()));
  }
  if (a.q != b.q) return 0;
  return static_cast<int>(a.b.size() - hamming_distance(a.b.bytes(), b.b.bytes()));
}

struct Codebook {
  std::size_t dim = 0;          // N_F
  std::uint64_t seed = 0;       // training seed, kept for provenance
  std::vector<float> centroids;   // N_C x dim, row-major
  std::vector<float> thresholds;  // N_C x dim, row-major

  std::size_t size() const { return dim == 0 ? 0 : centroids.size() / dim; }
  std::span<const float> centroid(std::size_t i) const { return std::span(centroids).subspan(i * dim, dim); }
  std::span<const float> threshold(std::size_t i) const { return std::span(thresholds).subspan(i * dim, dim); }

  void validate() const {
    if (dim == 0) throw InvalidInput("codebook dimension must be >= 1");
    if (centroids.empty() || centroids.size() % dim != 0) throw InvalidInput("codebook must hold >= 1 centroid");
    if (thresholds.size() != centroids.size()) throw InvalidInput("threshold table does not match centroids");
    for (float v : centroids) if (!std::isfinite(v)) throw InvalidInput("non-finite centroid entry");
    for (float v : thresholds) if (!std::isfinite(v)) throw InvalidInput("non-finite threshold entry");
  }

  friend bool operator==(const Codebook&, const Codebook&) = default;
};

namespace detail {

inline double squared_distance(std::span<const double> v, std::span<const float> c) {
  double s = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double d = v[k] - static_cast<double>(c[k]);
    s += d * d;
  }
  return s;
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

// Median of `values` (reordered in place); mean of the middle pair for even counts.
inline double median_inplace(std::vector<double>& values) {
  const std::size_t n = values.size();
  const std::size_t mid = n / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace detail

/// Nearest centroid by squared Euclidean distance; ties go to the lower index.
inline std::uint32_t assign(std::span<const double> v, const Codebook& cb) {
  if (v.size() != cb.dim) {
    throw InvalidInput("descriptor dimension " + std::to_string(v.size()) + " does not match codebook dimension " +
                       std::to_string(cb.dim));
  }
  std::uint32_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  const std::size_t n = cb.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double d = detail::squared_distance(v, cb.centroid(i));
    if (d < best_d) {
      best_d = d;
      best = static_cast<std::uint32_t>(i);
    }
  }
  return best;
}

/// Bit k is set iff v[k] >= threshold[q][k].
inline BitCode binarize(std::span<const double> v, std::uint32_t q, const Codebook& cb) {
  if (q >= cb.size()) throw InvalidInput("centroid index out of range");
  if (v.size() != cb.dim) throw InvalidInput("descriptor dimension does not match codebook");
  BitCode code(cb.dim);
  const auto tau = cb.threshold(q);
  for (std::size_t k = 0; k < cb.dim; ++k) {
    if (v[k] >= static_cast<double>(tau[k])) code.set(k);
  }
  return code;
}

inline HashCode hash(std::span<const double> v, const Codebook& cb) {
  const auto q = assign(v, cb);
  return {q, binarize(v, q, cb)};
}

/// k-means++ seeding followed by Lloyd iterations until the assignment stops
/// changing or `max_iters` is reached. Empty clusters are re-seeded with the
/// member of the largest cluster that lies farthest from its centroid.
/// Thresholds are per-centroid, per-dimension medians of the final members;
/// a centroid without members falls back to the global median.
inline Codebook train_codebook(std::span<const Descriptor> descriptors, std::size_t num_centroids,
                               std::size_t max_iters, std::uint64_t seed) {
  if (num_centroids < 1) throw InvalidInput("codebook size must be >= 1");
  if (descriptors.size() < num_centroids) {
    throw InvalidInput("need at least " + std::to_string(num_centroids) + " descriptors to train " +
                       std::to_string(num_centroids) + " centroids, got " + std::to_string(descriptors.size()));
  }
  const std::size_t dim = descriptors.front().size();
  if (dim == 0) throw InvalidInput("descriptors must have dimension >= 1");
  const std::size_t n = descriptors.size();
  const std::size_t k_count = num_centroids;
  for (const auto& d : descriptors) {
    if (d.size() != dim) throw InvalidInput("descriptors have mixed dimensions");
    for (double v : d.values) if (!std::isfinite(v)) throw InvalidInput("non-finite descriptor value");
  }
  auto point = [&](std::size_t i) { return std::span<const double>(descriptors[i].values); };

  Rng rng(seed);
  std::vector<double> centers(k_count * dim);
  auto center = [&](std::size_t c) { return std::span<double>(centers).subspan(c * dim, dim); };

  // k-means++ seeding.
  {
    auto first = point(rng.index(n));
    std::copy(first.begin(), first.end(), center(0).begin());
    std::vector<double> nearest(n);
    for (std::size_t i = 0; i < n; ++i) nearest[i] = detail::squared_distance(point(i), center(0));
    for (std::size_t c = 1; c < k_count; ++c) {
      double total = 0.0;
      for (double d : nearest) total += d;
      std::size_t pick = 0;
      if (total > 0.0) {
        const double r = rng.uniform() * total;
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          if (nearest[i] > 0.0) pick = i;  // fallback if rounding leaves acc <= r
          acc += nearest[i];
          if (acc > r && nearest[i] > 0.0) {
            pick = i;
            break;
          }
        }
      } else {
        pick = rng.index(n);
      }
      auto p = point(pick);
      std::copy(p.begin(), p.end(), center(c).begin());
      for (std::size_t i = 0; i < n; ++i) nearest[i] = std::min(nearest[i], detail::squared_distance(point(i), center(c)));
    }
  }

  std::vector<std::uint32_t> label(n, std::numeric_limits<std::uint32_t>::max());
  std::vector<std::size_t> counts(k_count);

  auto nearest_center = [&](std::size_t i) {
    std::uint32_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k_count; ++c) {
      const double d = detail::squared_distance(point(i), std::span<const double>(center(c)));
      if (d < best_d) {
        best_d = d;
        best = static_cast<std::uint32_t>(c);
      }
    }
    return best;
  };

  auto recompute_center = [&](std::size_t c) {
    auto ctr = center(c);
    std::fill(ctr.begin(), ctr.end(), 0.0);
    std::size_t members = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (label[i] != c) continue;
      ++members;
      auto p = point(i);
      for (std::size_t k = 0; k < dim; ++k) ctr[k] += p[k];
    }
    for (auto& x : ctr) x /= static_cast<double>(members);
    counts[c] = members;
  };

  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = nearest_center(i);
      if (c != label[i]) {
        label[i] = c;
        changed = true;
      }
    }
    if (!changed) break;

    std::fill(counts.begin(), counts.end(), 0);
    for (auto l : label) ++counts[l];
    for (std::size_t c = 0; c < k_count; ++c) {
      if (counts[c] > 0) recompute_center(c);
    }
    for (std::size_t c = 0; c < k_count; ++c) {
      if (counts[c] != 0) continue;
      const auto largest = static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
      if (counts[largest] < 2) break;  // nothing left to split
      std::size_t far = n;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (label[i] != largest) continue;
        const double d = detail::squared_distance(point(i), std::span<const double>(center(largest)));
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      label[far] = static_cast<std::uint32_t>(c);
      auto p = point(far);
      std::copy(p.begin(), p.end(), center(c).begin());
      counts[c] = 1;
      recompute_center(largest);
    }
  }

  Codebook cb;
  cb.dim = dim;
  cb.seed = seed;
  cb.centroids.assign(centers.begin(), centers.end());
  cb.thresholds.assign(centers.size(), 0.0f);

  // Final membership against the stored (float) centroids so that thresholds
  // describe exactly the cells that assign() will produce.
  std::vector<std::vector<std::size_t>> members(k_count);
  for (std::size_t i = 0; i < n; ++i) members[assign(point(i), cb)].push_back(i);

  std::vector<double> scratch;
  std::vector<double> global(dim);
  for (std::size_t k = 0; k < dim; ++k) {
    scratch.clear();
    for (std::size_t i = 0; i < n; ++i) scratch.push_back(point(i)[k]);
    global[k] = detail::median_inplace(scratch);
  }
  for (std::size_t c = 0; c < k_count; ++c) {
    for (std::size_t k = 0; k < dim; ++k) {
      double tau = global[k];
      if (!members[c].empty()) {
        scratch.clear();
        for (auto i : members[c]) scratch.push_back(point(i)[k]);
        tau = detail::median_inplace(scratch);
      }
      cb.thresholds[c * dim + k] = static_cast<float>(tau);
    }
  }
  cb.validate();
  return cb;
}

// Codebook section: N_C u32 | N_F u32 | seed u64 | centroids f32[] | thresholds f32[]
inline void write_codebook(io::ByteWriter& w, const Codebook& cb) {
  w.u32(static_cast<std::uint32_t>(cb.size()));
  w.u32(static_cast<std::uint32_t>(cb.dim));
  w.u64(cb.seed);
  for (float v : cb.centroids) w.f32(v);
  for (float v : cb.thresholds) w.f32(v);
}

inline Codebook read_codebook(io::ByteReader& r) {
  Codebook cb;
  const std::uint64_t count = r.u32();
  cb.dim = r.u32();
  cb.seed = r.u64();
  if (count == 0 || cb.dim == 0) throw LoadError(LoadErrc::corrupt, "empty codebook");
  const std::uint64_t entries = count * cb.dim;
  if (entries * 8 > r.remaining()) throw LoadError(LoadErrc::truncated, "codebook tables exceed data");
  cb.centroids.resize(entries);
  cb.thresholds.resize(entries);
  for (auto& v : cb.centroids) v = r.f32();
  for (auto& v : cb.thresholds) v = r.f32();
  try {
    cb.validate();
  } catch (const InvalidInput& e) {
    throw LoadError(LoadErrc::corrupt, e.what());
  }
  return cb;
}

inline constexpr std::uint16_t kCodebookFileVersion = 1;

inline std::vector<std::uint8_t> encode_codebook_file(const Codebook& cb) {
  io::ByteWriter w;
  write_codebook(w, cb);
  return io::seal("VEEC", kCodebookFileVersion, w.buffer());
}

inline Codebook decode_codebook_file(std::span<const std::uint8_t> file) {
  io::ByteReader r(io::unseal(file, "VEEC", kCodebookFileVersion));
  auto cb = read_codebook(r);
  if (r.remaining() != 0) throw LoadError(LoadErrc::corrupt, "trailing bytes in codebook file");
  return cb;
}

}  // namespace vee

#endif  // VEE_HASHING_HPP
