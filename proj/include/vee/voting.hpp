#ifndef VEE_VOTING_HPP
#define VEE_VOTING_HPP

// Temporal voting. Every (query, reference) match proposes an alignment
// offset t_q - t_r; matches whose offsets agree within tol_err accumulate
// votes on a shared segment. The queue keeps only segments that received a
// vote within the last tol_delete query frames, so its size is bounded by the
// matches of the trailing window instead of the whole offset space.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "vee/error.hpp"
#include "vee/fingerprint.hpp"
#include "vee/hashing.hpp"
#include "vee/index.hpp"

namespace vee {

inline constexpr std::int64_t kNeverPurge = std::numeric_limits<std::int64_t>::max();

struct VotingConfig {
  std::int64_t tol_err = 2;
  std::int64_t tol_delete = 250;
  std::int64_t n_conf = 200;
  bool merge = true;  // merge overlapping segments when finalizing

  void validate() const {
    if (tol_err < 0) throw InvalidInput("tol_err must be >= 0");
    if (tol_delete < 0) throw InvalidInput("tol_delete must be >= 0");
    if (n_conf < 1) throw InvalidInput("n_conf must be >= 1");
  }
};

struct Segment {
  std::uint32_t video_id = 0;
  std::int64_t q_start = 0;
  std::int64_t q_end = 0;
  std::int64_t r_start = 0;
  std::int64_t r_end = 0;
  std::int64_t offset = 0;  // t_q - t_r of the latest accepted pair
  std::int64_t votes = 0;
  std::int64_t last_vote_t_q = 0;

  static Segment from_match(const Match& m) {
    return {m.video_id, m.t_q, m.t_q, m.t_r, m.t_r, m.offset(), 1, m.t_q};
  }

  friend bool operator==(const Segment&, const Segment&) = default;
};

struct ResultSegment {
  std::uint32_t video_id = 0;
  std::int64_t q_start = 0;
  std::int64_t q_end = 0;
  std::int64_t r_start = 0;
  std::int64_t r_end = 0;
  std::int64_t offset = 0;
  std::int64_t votes = 0;

  static ResultSegment from(const Segment& s) {
    return {s.video_id, s.q_start, s.q_end, s.r_start, s.r_end, s.offset, s.votes};
  }

  friend bool operator==(const ResultSegment&, const ResultSegment&) = default;
};

/// Offsets a and b denote the same alignment iff |a - b| < tol_err.
inline bool same(std::int64_t offset_a, std::int64_t offset_b, std::int64_t tol_err) {
  const std::int64_t d = offset_a > offset_b ? offset_a - offset_b : offset_b - offset_a;
  return d < tol_err;
}

namespace detail {

inline bool spans_touch(const ResultSegment& a, const ResultSegment& b) {
  return a.r_start <= b.r_end + 1 && b.r_start <= a.r_end + 1;
}

inline void absorb(ResultSegment& into, const ResultSegment& from) {
  if (from.votes > into.votes) into.offset = from.offset;
  into.votes += from.votes;
  into.q_start = std::min(into.q_start, from.q_start);
  into.q_end = std::max(into.q_end, from.q_end);
  into.r_start = std::min(into.r_start, from.r_start);
  into.r_end = std::max(into.r_end, from.r_end);
}

inline auto rank_key(const ResultSegment& s) {
  return std::tuple(-s.votes, s.video_id, s.r_start, s.q_start, s.r_end, s.q_end, s.offset);
}

}  // namespace detail

/// Merges same-video segments with agreeing offsets and touching reference
/// spans until no such pair remains, drops those under n_conf votes, and
/// ranks by votes (then video_id, r_start).
inline std::vector<ResultSegment> finalize(std::vector<ResultSegment> segments, const VotingConfig& cfg) {
  if (cfg.merge) {
    bool merged = true;
    while (merged) {
      merged = false;
      for (std::size_t i = 0; i < segments.size(); ++i) {
        for (std::size_t j = i + 1; j < segments.size();) {
          const auto& a = segments[i];
          const auto& b = segments[j];
          if (a.video_id == b.video_id && same(a.offset, b.offset, cfg.tol_err) && detail::spans_touch(a, b)) {
            detail::absorb(segments[i], b);
            segments.erase(segments.begin() + static_cast<std::ptrdiff_t>(j));
            merged = true;
          } else {
            ++j;
          }
        }
      }
    }
  }
  std::erase_if(segments, [&](const ResultSegment& s) { return s.votes < cfg.n_conf; });
  std::sort(segments.begin(), segments.end(),
            [](const auto& a, const auto& b) { return detail::rank_key(a) < detail::rank_key(b); });
  return segments;
}

class VotingQueue {
 public:
  explicit VotingQueue(VotingConfig cfg) : cfg_(cfg) { cfg_.validate(); }

  const VotingConfig& config() const { return cfg_; }
  std::span<const Segment> segments() const { return segments_; }
  std::size_t size() const { return segments_.size(); }
  std::size_t peak_size() const { return peak_; }
  std::int64_t total_votes() const { return total_votes_; }

  /// Votes the best agreeing segment of the same video (most votes, then
  /// oldest) or opens a new one. Matches must arrive in nondecreasing t_q.
  void process_match(const Match& m) {
    if (seen_any_ && m.t_q < latest_t_q_) {
      throw ContractViolation("match at t_q=" + std::to_string(m.t_q) + " arrived after t_q=" +
                              std::to_string(latest_t_q_));
    }
    seen_any_ = true;
    latest_t_q_ = m.t_q;
    ++total_votes_;

    const std::int64_t offset = m.offset();
    Segment* best = nullptr;
    for (auto& s : segments_) {
      if (s.video_id != m.video_id || !same(offset, s.offset, cfg_.tol_err)) continue;
      if (best == nullptr || s.votes > best->votes) best = &s;
    }
    if (best == nullptr) {
      segments_.push_back(Segment::from_match(m));
      peak_ = std::max(peak_, segments_.size());
      return;
    }
    best->votes += 1;
    best->q_start = std::min(best->q_start, m.t_q);
    best->q_end = std::max(best->q_end, m.t_q);
    best->r_start = std::min(best->r_start, m.t_r);
    best->r_end = std::max(best->r_end, m.t_r);
    best->offset = offset;
    best->last_vote_t_q = m.t_q;
  }

  /// Drops segments idle for more than tol_delete query frames.
  void purge(std::int64_t current_t_q) {
    if (cfg_.tol_delete == kNeverPurge) return;
    std::erase_if(segments_, [&](const Segment& s) { return current_t_q - s.last_vote_t_q > cfg_.tol_delete; });
  }

  /// All matches of one query signature, followed by a purge at its time.
  void process_signature(std::span<const Match> matches, std::int64_t t_q) {
    for (const auto& m : matches) process_match(m);
    purge(t_q);
  }

  std::vector<ResultSegment> finalize() const {
    std::vector<ResultSegment> out;
    out.reserve(segments_.size());
    for (const auto& s : segments_) out.push_back(ResultSegment::from(s));
    return vee::finalize(std::move(out), cfg_);
  }

 private:
  VotingConfig cfg_;
  std::vector<Segment> segments_;
  std::size_t peak_ = 0;
  std::int64_t total_votes_ = 0;
  std::int64_t latest_t_q_ = 0;
  bool seen_any_ = false;
};

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  const std::int64_t q = a / b;
  return (a % b != 0 && ((a < 0) != (b < 0))) ? q - 1 : q;
}

/// Reference voting: a full table keyed by (video_id, offset bucket of width
/// tol_err) holding every alignment at once, then the same
/// merge/threshold/rank step as the queue.
inline std::vector<ResultSegment> brute_force_vote(std::span<const Match> matches, const VotingConfig& cfg) {
  cfg.validate();
  std::map<std::tuple<std::uint32_t, std::int64_t, std::size_t>, Segment> table;
  for (std::size_t i = 0; i < matches.size(); ++i) {
    const auto& m = matches[i];
    // With tol_err == 0 no two pairs are ever "same", so each match is its own cell.
    const auto key = cfg.tol_err == 0 ? std::tuple(m.video_id, m.offset(), i)
                                      : std::tuple(m.video_id, floor_div(m.offset(), cfg.tol_err), std::size_t{0});
    auto [it, fresh] = table.try_emplace(key, Segment::from_match(m));
    if (fresh) continue;
    auto& s = it->second;
    s.votes += 1;
    s.q_start = std::min(s.q_start, m.t_q);
    s.q_end = std::max(s.q_end, m.t_q);
    s.r_start = std::min(s.r_start, m.t_r);
    s.r_end = std::max(s.r_end, m.t_r);
    s.offset = m.offset();
    s.last_vote_t_q = std::max(s.last_vote_t_q, m.t_q);
  }
  std::vector<ResultSegment> out;
  out.reserve(table.size());
  for (const auto& [key, s] : table) out.push_back(ResultSegment::from(s));
  return finalize(std::move(out), cfg);
}

/// Runs a t_q-sorted match stream through a queue, treating each distinct
/// t_q as one query signature. `on_step` (optional) sees the queue after
/// every purge.
inline std::vector<ResultSegment> queue_vote(
    std::span<const Match> matches, const VotingConfig& cfg,
    const std::function<void(std::int64_t, const VotingQueue&)>& on_step = {}) {
  VotingQueue queue(cfg);
  std::size_t i = 0;
  while (i < matches.size()) {
    std::size_t j = i;
    while (j < matches.size() && matches[j].t_q == matches[i].t_q) ++j;
    queue.process_signature(matches.subspan(i, j - i), matches[i].t_q);
    if (on_step) on_step(matches[i].t_q, queue);
    i = j;
  }
  return queue.finalize();
}

/// Bytes a dense (video, offset-bucket) table would need to cover every
/// possible alignment of a query of `query_frames` against the index.
inline std::uint64_t dense_table_bytes(const InvertedIndex& index, std::uint64_t query_frames, std::int64_t tol_err) {
  const std::uint64_t width = static_cast<std::uint64_t>(std::max<std::int64_t>(1, tol_err));
  std::uint64_t cells = 0;
  for (const auto& [id, v] : index.videos()) cells += (v.frame_count + query_frames + width - 1) / width;
  return cells * sizeof(Segment);
}

struct SearchParams {
  std::size_t n_nn = 200;
  int tau_sc = 0;
  VotingConfig voting;
};

struct SearchStats {
  std::size_t signatures = 0;
  std::size_t matches = 0;
  std::size_t peak_queue_length = 0;
  std::uint64_t peak_queue_bytes = 0;
  double seconds = 0.0;
};

struct SearchOutcome {
  std::vector<ResultSegment> results;
  SearchStats stats;
  std::vector<Match> matches;  // filled only when requested
};

/// End-to-end query against a frozen index: hash each query descriptor,
/// fetch its N_nn best postings, vote, purge after every signature, and
/// finalize at the end of the stream.
inline SearchOutcome search(const InvertedIndex& index, std::span<const Descriptor> query, const SearchParams& params,
                            bool keep_matches = false) {
  if (!index.frozen()) throw ContractViolation("search requires a frozen index");
  params.voting.validate();
  const auto start = std::chrono::steady_clock::now();

  SearchOutcome out;
  VotingQueue queue(params.voting);
  std::int64_t previous = std::numeric_limits<std::int64_t>::min();
  for (const auto& d : query) {
    const auto t_q = static_cast<std::int64_t>(d.t);
    if (t_q < previous) throw ContractViolation("query fingerprints must be sorted by frame time");
    previous = t_q;
    const auto matches = index.knn(hash(d.values, index.codebook()), t_q, params.n_nn, params.tau_sc);
    queue.process_signature(matches, t_q);
    out.stats.matches += matches.size();
    if (keep_matches) out.matches.insert(out.matches.end(), matches.begin(), matches.end());
  }
  out.results = queue.finalize();
  out.stats.signatures = query.size();
  out.stats.peak_queue_length = queue.peak_size();
  out.stats.peak_queue_bytes = queue.peak_size() * sizeof(Segment);
  out.stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace vee

#endif  // VEE_VOTING_HPP
