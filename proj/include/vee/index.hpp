#ifndef VEE_INDEX_HPP
#define VEE_INDEX_HPP

// Inverted index of reference signatures, one posting list per centroid.
//
// File layout ("VEEI", sealed: magic | version u16 | payload_len u64 | payload | fnv1a64 u64):
//   payload := window_half u32 | min_separation u32
//              video_count u32 | video_count * (id u32 | name str | frames u64 | fps_num u32 | fps_den u32)
//              codebook section (see hashing.hpp)
//              N_C * (count u32 | count * (video_id u32 | t u32 | code bytes))

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "vee/binary_io.hpp"
#include "vee/error.hpp"
#include "vee/hashing.hpp"

namespace vee {

inline constexpr std::uint16_t kIndexFileVersion = 1;

struct VideoInfo {
  std::string name;
  std::uint64_t frame_count = 0;
  std::uint32_t fps_num = 25;
  std::uint32_t fps_den = 1;

  friend bool operator==(const VideoInfo&, const VideoInfo&) = default;
};

struct Signature {
  std::uint32_t t = 0;
  HashCode code;
};

struct Match {
  std::uint32_t video_id = 0;
  std::int64_t t_r = 0;
  std::int64_t t_q = 0;
  int score = 0;

  std::int64_t offset() const { return t_q - t_r; }
  friend bool operator==(const Match&, const Match&) = default;
};

// Struct-of-arrays posting storage, kept sorted by (video_id, t).
class PostingList {
 public:
  explicit PostingList(std::size_t code_bytes = 0) : stride_(code_bytes) {}

  std::size_t size() const { return video_ids_.size(); }
  bool empty() const { return video_ids_.empty(); }
  std::uint32_t video_id(std::size_t i) const { return video_ids_[i]; }
  std::uint32_t time(std::size_t i) const { return times_[i]; }
  std::span<const std::uint8_t> code(std::size_t i) const { return std::span(codes_).subspan(i * stride_, stride_); }

  void push_back(std::uint32_t video_id, std::uint32_t t, std::span<const std::uint8_t> code) {
    video_ids_.push_back(video_id);
    times_.push_back(t);
    codes_.insert(codes_.end(), code.begin(), code.end());
  }

  // Restores (video_id, t) order; rejects duplicate keys.
  void sort() {
    std::vector<std::size_t> order(size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto key = [&](std::size_t i) { return std::pair(video_ids_[i], times_[i]); };
    if (std::is_sorted(order.begin(), order.end(), [&](auto a, auto b) { return key(a) < key(b); })) {
      check_unique();
      return;
    }
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return key(a) < key(b); });
    PostingList sorted(stride_);
    for (auto i : order) sorted.push_back(video_ids_[i], times_[i], code(i));
    *this = std::move(sorted);
    check_unique();
  }

  friend bool operator==(const PostingList&, const PostingList&) = default;

 private:
  void check_unique() const {
    for (std::size_t i = 1; i < size(); ++i) {
      if (video_ids_[i] == video_ids_[i - 1] && times_[i] == times_[i - 1]) {
        throw InvalidInput("duplicate posting (video " + std::to_string(video_ids_[i]) + ", t " +
                           std::to_string(times_[i]) + ")");
      }
    }
  }

  std::size_t stride_;
  std::vector<std::uint32_t> video_ids_;
  std::vector<std::uint32_t> times_;
  std::vector<std::uint8_t> codes_;
};

class InvertedIndex {
 public:
  InvertedIndex() = default;

  InvertedIndex(Codebook codebook, std::uint32_t window_half, std::uint32_t min_separation)
      : codebook_(std::move(codebook)), window_half_(window_half), min_separation_(min_separation) {
    codebook_.validate();
    lists_.assign(codebook_.size(), PostingList(BitCode::byte_size(codebook_.dim)));
  }

  const Codebook& codebook() const { return codebook_; }
  std::uint32_t window_half() const { return window_half_; }
  std::uint32_t min_separation() const { return min_separation_; }
  std::size_t feature_dim() const { return codebook_.dim; }
  const std::map<std::uint32_t, VideoInfo>& videos() const { return videos_; }
  const PostingList& list(std::uint32_t q) const { return lists_.at(q); }
  std::size_t list_count() const { return lists_.size(); }

  std::size_t posting_count() const {
    std::size_t n = 0;
    for (const auto& l : lists_) n += l.size();
    return n;
  }

  // A frozen index rejects writes and may be queried from many threads.
  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

  void add_video(std::uint32_t video_id, VideoInfo info, std::span<const Signature> signatures) {
    if (frozen_) throw ContractViolation("cannot add videos to a frozen index");
    if (videos_.contains(video_id)) throw Conflict("video id " + std::to_string(video_id) + " already indexed");
    for (const auto& [id, existing] : videos_) {
      if (existing.name == info.name) throw Conflict("video name \"" + info.name + "\" already indexed");
    }
    for (const auto& s : signatures) {
      if (s.code.q >= lists_.size()) throw InvalidInput("signature centroid out of range");
      if (s.code.b.size() != codebook_.dim) throw InvalidInput("signature code length does not match codebook");
    }
    {
      std::vector<std::uint32_t> times;
      for (const auto& s : signatures) times.push_back(s.t);
      std::sort(times.begin(), times.end());
      if (std::adjacent_find(times.begin(), times.end()) != times.end()) {
        throw InvalidInput("video " + std::to_string(video_id) + " has two signatures at the same frame");
      }
    }
    std::vector<std::uint32_t> touched;
    for (const auto& s : signatures) {
      lists_[s.code.q].push_back(video_id, s.t, s.code.b.bytes());
      touched.push_back(s.code.q);
    }
    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
    for (auto q : touched) lists_[q].sort();
    videos_.emplace(video_id, std::move(info));
  }

  /// Scores every posting in the query's centroid cell and returns the best
  /// `n_nn` with score >= max(1, tau_sc): score descending, then (video_id, t).
  std::vector<Match> knn(const HashCode& query, std::int64_t t_q, std::size_t n_nn, int tau_sc = 0) const {
    if (n_nn < 1) throw InvalidInput("N_nn must be >= 1");
    if (query.b.size() != codebook_.dim) throw InvalidInput("query code length does not match codebook");
    std::vector<Match> out;
    if (query.q >= lists_.size()) return out;
    const auto& list = lists_[query.q];
    if (list.empty()) return out;

    const int dim = static_cast<int>(codebook_.dim);
    const int floor = std::max(1, tau_sc);
    if (floor > dim) return out;

    // Counting sort by score keeps the list's (video_id, t) order within a score.
    std::vector<std::uint8_t> score(list.size());
    std::vector<std::size_t> per_score(static_cast<std::size_t>(dim) + 1, 0);
    const auto qbytes = query.b.bytes();
    for (std::size_t i = 0; i < list.size(); ++i) {
      score[i] = static_cast<std::uint8_t>(dim - static_cast<int>(hamming_distance(qbytes, list.code(i))));
      ++per_score[score[i]];
    }
    // Lowest score that still fits in the top n_nn.
    int cutoff = dim;
    std::size_t taken = 0;
    for (int s = dim; s >= floor; --s) {
      cutoff = s;
      taken += per_score[static_cast<std::size_t>(s)];
      if (taken >= n_nn) break;
    }
    out.reserve(std::min(taken, n_nn));
    for (int s = dim; s >= cutoff && out.size() < n_nn; --s) {
      if (per_score[static_cast<std::size_t>(s)] == 0) continue;
      for (std::size_t i = 0; i < list.size() && out.size() < n_nn; ++i) {
        if (score[i] == s) out.push_back({list.video_id(i), list.time(i), t_q, s});
      }
    }
    return out;
  }

  std::vector<std::uint8_t> serialize() const {
    io::ByteWriter w;
    w.u32(window_half_);
    w.u32(min_separation_);
    w.u32(static_cast<std::uint32_t>(videos_.size()));
    for (const auto& [id, v] : videos_) {
      w.u32(id);
      w.str(v.name);
      w.u64(v.frame_count);
      w.u32(v.fps_num);
      w.u32(v.fps_den);
    }
    write_codebook(w, codebook_);
    for (const auto& list : lists_) {
      w.u32(static_cast<std::uint32_t>(list.size()));
      for (std::size_t i = 0; i < list.size(); ++i) {
        w.u32(list.video_id(i));
        w.u32(list.time(i));
        w.bytes(list.code(i));
      }
    }
    return io::seal("VEEI", kIndexFileVersion, w.buffer());
  }

  /// Parses a sealed index image; the result is frozen.
  static InvertedIndex deserialize(std::span<const std::uint8_t> file) {
    io::ByteReader r(io::unseal(file, "VEEI", kIndexFileVersion));
    InvertedIndex idx;
    idx.window_half_ = r.u32();
    idx.min_separation_ = r.u32();
    const auto video_count = r.u32();
    for (std::uint32_t i = 0; i < video_count; ++i) {
      const auto id = r.u32();
      VideoInfo v;
      v.name = r.str();
      v.frame_count = r.u64();
      v.fps_num = r.u32();
      v.fps_den = r.u32();
      if (!idx.videos_.emplace(id, std::move(v)).second) throw LoadError(LoadErrc::corrupt, "duplicate video id");
    }
    idx.codebook_ = read_codebook(r);
    const std::size_t stride = BitCode::byte_size(idx.codebook_.dim);
    idx.lists_.assign(idx.codebook_.size(), PostingList(stride));
    for (auto& list : idx.lists_) {
      const auto count = r.u32();
      if (static_cast<std::uint64_t>(count) * (8 + stride) > r.remaining()) {
        throw LoadError(LoadErrc::truncated, "posting list exceeds data");
      }
      for (std::uint32_t i = 0; i < count; ++i) {
        const auto vid = r.u32();
        const auto t = r.u32();
        if (!idx.videos_.contains(vid)) throw LoadError(LoadErrc::corrupt, "posting references unknown video");
        list.push_back(vid, t, r.bytes(stride));
      }
      try {
        list.sort();
      } catch (const InvalidInput& e) {
        throw LoadError(LoadErrc::corrupt, e.what());
      }
    }
    if (r.remaining() != 0) throw LoadError(LoadErrc::corrupt, "trailing bytes in index payload");
    idx.frozen_ = true;
    return idx;
  }

  void save(const std::filesystem::path& path) const { io::write_file_atomic(path, serialize()); }
  static InvertedIndex load(const std::filesystem::path& path) { return deserialize(io::read_file(path)); }

  // Structural equality; the frozen flag is lifecycle state, not content.
  friend bool operator==(const InvertedIndex& a, const InvertedIndex& b) {
    return a.codebook_ == b.codebook_ && a.window_half_ == b.window_half_ &&
           a.min_separation_ == b.min_separation_ && a.videos_ == b.videos_ && a.lists_ == b.lists_;
  }

 private:
  Codebook codebook_;
  std::uint32_t window_half_ = 0;
  std::uint32_t min_separation_ = 0;
  std::map<std::uint32_t, VideoInfo> videos_;
  std::vector<PostingList> lists_;
  bool frozen_ = false;
};

/// Hashes each descriptor against the codebook.
inline std::vector<Signature> make_signatures(std::span<const Descriptor> descriptors, const Codebook& cb) {
  std::vector<Signature> out;
  out.reserve(descriptors.size());
  for (const auto& d : descriptors) out.push_back({static_cast<std::uint32_t>(d.t), hash(d.values, cb)});
  return out;
}

}  // namespace vee

#endif  // VEE_INDEX_HPP
