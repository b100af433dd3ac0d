#ifndef VEE_EVALKIT_HPP
#define VEE_EVALKIT_HPP

// Retrieval evaluation: synthetic reference/query corpora with exact ground
// truth, frame-level distortions, temporal-overlap correctness and mean
// average precision.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "vee/error.hpp"
#include "vee/fingerprint.hpp"
#include "vee/frame_io.hpp"
#include "vee/pipeline.hpp"
#include "vee/random.hpp"
#include "vee/voting.hpp"

namespace vee {

struct GroundTruthEntry {
  std::string query_id;
  std::uint32_t video_id = 0;
  std::int64_t r_start = 0;
  std::int64_t r_end = 0;
  std::int64_t q_start = 0;
  std::int64_t q_end = 0;

  friend bool operator==(const GroundTruthEntry&, const GroundTruthEntry&) = default;
};

inline constexpr double kMinOverlap = 0.6;

/// Correct when the result names the right video and covers at least
/// `min_overlap` of the ground-truth reference span (inclusive frame counts).
inline bool is_correct(const ResultSegment& result, const GroundTruthEntry& gt, double min_overlap = kMinOverlap) {
  if (result.video_id != gt.video_id) return false;
  const std::int64_t truth_len = gt.r_end - gt.r_start + 1;
  if (truth_len <= 0) return false;
  const std::int64_t lo = std::max(result.r_start, gt.r_start);
  const std::int64_t hi = std::min(result.r_end, gt.r_end);
  const std::int64_t inter = std::max<std::int64_t>(0, hi - lo + 1);
  return static_cast<double>(inter) >= min_overlap * static_cast<double>(truth_len);
}

/// Precision-at-hit average over the relevant entries; each ground-truth
/// entry can be claimed by at most one result.
inline double average_precision(std::span<const ResultSegment> ranked, std::span<const GroundTruthEntry> relevant,
                                double min_overlap = kMinOverlap) {
  if (relevant.empty()) return 0.0;
  std::vector<bool> claimed(relevant.size(), false);
  std::size_t hits = 0;
  double sum = 0.0;
  for (std::size_t rank = 0; rank < ranked.size(); ++rank) {
    for (std::size_t g = 0; g < relevant.size(); ++g) {
      if (claimed[g] || !is_correct(ranked[rank], relevant[g], min_overlap)) continue;
      claimed[g] = true;
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
      break;
    }
  }
  return sum / static_cast<double>(relevant.size());
}

struct MapResult {
  double mean_ap = 0.0;
  std::map<std::string, double> per_query;
  std::vector<std::string> excluded;  // queries without ground truth
};

inline MapResult mean_average_precision(const std::map<std::string, std::vector<ResultSegment>>& results,
                                        std::span<const GroundTruthEntry> truth, double min_overlap = kMinOverlap) {
  std::map<std::string, std::vector<GroundTruthEntry>> by_query;
  for (const auto& g : truth) by_query[g.query_id].push_back(g);
  MapResult out;
  double sum = 0.0;
  for (const auto& [query, ranked] : results) {
    auto it = by_query.find(query);
    if (it == by_query.end()) {
      out.excluded.push_back(query);
      continue;
    }
    const double ap = average_precision(ranked, it->second, min_overlap);
    out.per_query[query] = ap;
    sum += ap;
  }
  if (!out.per_query.empty()) out.mean_ap = sum / static_cast<double>(out.per_query.size());
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic corpus

struct CorpusSpec {
  std::size_t n_videos = 12;
  std::size_t min_frames = 800;
  std::size_t max_frames = 1200;
  std::size_t query_min_frames = 360;
  std::size_t query_max_frames = 480;
  std::size_t window_half = 50;  // queries must host at least one full window
  std::uint32_t width = 32;
  std::uint32_t height = 24;
};

struct Corpus {
  std::vector<std::string> reference_names;
  std::vector<VideoStream> references;
  std::vector<std::string> query_ids;
  std::vector<VideoStream> queries;
  std::vector<GroundTruthEntry> truth;
};

namespace detail {

struct Grating {
  double amplitude, fx, fy, speed, phase;
};

struct Shot {
  std::size_t length;
  double base;
  std::vector<Grating> gratings;
  double mod_depth, mod_period, mod_phase;
  double box_x, box_y, box_vx, box_vy, box_level;
  std::uint32_t box_w, box_h;
};

inline Shot random_shot(Rng& rng, std::uint32_t w, std::uint32_t h) {
  Shot s;
  s.length = static_cast<std::size_t>(rng.between(18, 70));
  s.base = rng.uniform(70.0, 180.0);
  const auto n = rng.between(2, 4);
  for (std::int64_t i = 0; i < n; ++i) {
    s.gratings.push_back({rng.uniform(8.0, 45.0), rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0),
                          rng.uniform(-0.4, 0.4), rng.uniform(0.0, 2.0 * std::numbers::pi)});
  }
  s.mod_depth = rng.uniform(0.2, 0.7);
  s.mod_period = rng.uniform(9.0, 40.0);
  s.mod_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  s.box_w = static_cast<std::uint32_t>(rng.between(3, static_cast<std::int64_t>(w) / 2));
  s.box_h = static_cast<std::uint32_t>(rng.between(3, static_cast<std::int64_t>(h) / 2));
  s.box_x = rng.uniform(0.0, w - s.box_w);
  s.box_y = rng.uniform(0.0, h - s.box_h);
  s.box_vx = rng.uniform(-0.8, 0.8);
  s.box_vy = rng.uniform(-0.6, 0.6);
  s.box_level = rng.uniform(-70.0, 70.0);
  return s;
}

inline Frame render(const Shot& s, std::size_t local_t, std::uint32_t w, std::uint32_t h) {
  Frame f(w, h);
  const double t = static_cast<double>(local_t);
  const double gain = 1.0 + s.mod_depth * std::sin(2.0 * std::numbers::pi * t / s.mod_period + s.mod_phase);
  const double two_pi = 2.0 * std::numbers::pi;
  double bx = std::fmod(s.box_x + s.box_vx * t, static_cast<double>(w - s.box_w));
  double by = std::fmod(s.box_y + s.box_vy * t, static_cast<double>(h - s.box_h));
  if (bx < 0) bx += w - s.box_w;
  if (by < 0) by += h - s.box_h;
  const auto bx0 = static_cast<std::uint32_t>(bx);
  const auto by0 = static_cast<std::uint32_t>(by);
  // sin(a + b) = sin(a)cos(b) + cos(a)sin(b) keeps the work per grating O(w + h).
  const std::size_t ng = s.gratings.size();
  std::vector<double> sx(ng * w), cx(ng * w), sy(ng * h), cy(ng * h);
  for (std::size_t i = 0; i < ng; ++i) {
    const auto& g = s.gratings[i];
    for (std::uint32_t x = 0; x < w; ++x) {
      const double a = two_pi * g.fx * x / w;
      sx[i * w + x] = g.amplitude * std::sin(a);
      cx[i * w + x] = g.amplitude * std::cos(a);
    }
    for (std::uint32_t y = 0; y < h; ++y) {
      const double b = two_pi * g.fy * y / h + g.speed * t + g.phase;
      sy[i * h + y] = std::sin(b);
      cy[i * h + y] = std::cos(b);
    }
  }
  for (std::uint32_t y = 0; y < h; ++y) {
    for (std::uint32_t x = 0; x < w; ++x) {
      double v = 0.0;
      for (std::size_t i = 0; i < ng; ++i) v += sx[i * w + x] * cy[i * h + y] + cx[i * w + x] * sy[i * h + y];
      v = s.base + gain * v;
      if (x >= bx0 && x < bx0 + s.box_w && y >= by0 && y < by0 + s.box_h) v += gain * s.box_level;
      f.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
  }
  return f;
}

}  // namespace detail

/// Renders `frame_count` frames of shot-structured moving texture.
inline std::vector<Frame> synthesize_video(Rng& rng, std::size_t frame_count, std::uint32_t w, std::uint32_t h) {
  std::vector<Frame> frames;
  frames.reserve(frame_count);
  while (frames.size() < frame_count) {
    const auto shot = detail::random_shot(rng, w, h);
    for (std::size_t t = 0; t < shot.length && frames.size() < frame_count; ++t) {
      frames.push_back(detail::render(shot, t, w, h));
    }
  }
  return frames;
}

/// Reference videos ref00.. and one subclip query per reference (q00..),
/// with the exact reference span recorded as ground truth.
inline Corpus make_corpus(std::uint64_t seed, const CorpusSpec& spec) {
  const std::size_t window = 2 * spec.window_half + 1;
  if (spec.query_min_frames < window || spec.query_min_frames > spec.query_max_frames) {
    throw InvalidInput("query duration must be at least " + std::to_string(window) + " frames");
  }
  if (spec.min_frames < spec.query_max_frames || spec.min_frames > spec.max_frames) {
    throw InvalidInput("reference duration must be at least the longest query");
  }
  if (spec.width < 8 || spec.height < 8) throw InvalidInput("synthetic frames must be at least 8x8");

  Rng rng(seed);
  Corpus c;
  for (std::size_t i = 0; i < spec.n_videos; ++i) {
    const auto len = static_cast<std::size_t>(
        rng.between(static_cast<std::int64_t>(spec.min_frames), static_cast<std::int64_t>(spec.max_frames)));
    VideoStream v;
    v.width = spec.width;
    v.height = spec.height;
    v.frames = synthesize_video(rng, len, spec.width, spec.height);

    const auto qlen = static_cast<std::size_t>(rng.between(static_cast<std::int64_t>(spec.query_min_frames),
                                                           static_cast<std::int64_t>(spec.query_max_frames)));
    const auto start = static_cast<std::size_t>(rng.between(0, static_cast<std::int64_t>(len - qlen)));
    VideoStream q;
    q.width = spec.width;
    q.height = spec.height;
    q.frames.assign(v.frames.begin() + static_cast<std::ptrdiff_t>(start),
                    v.frames.begin() + static_cast<std::ptrdiff_t>(start + qlen));

    std::ostringstream rn, qn;
    rn << "ref" << std::setw(2) << std::setfill('0') << i;
    qn << "q" << std::setw(2) << std::setfill('0') << i;
    c.reference_names.push_back(rn.str());
    c.references.push_back(std::move(v));
    c.query_ids.push_back(qn.str());
    c.queries.push_back(std::move(q));
    c.truth.push_back({qn.str(), static_cast<std::uint32_t>(i), static_cast<std::int64_t>(start),
                       static_cast<std::int64_t>(start + qlen - 1), 0, static_cast<std::int64_t>(qlen - 1)});
  }
  return c;
}

// ---------------------------------------------------------------------------
// Distortions

struct NoiseDistortion {
  double sigma = 0.0;
};

struct LogoDistortion {
  std::uint32_t x = 0;
  std::uint32_t y = 0;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
};

struct CropDistortion {
  std::size_t first = 0;
  std::size_t last = 0;  // inclusive
};

using Distortion = std::variant<NoiseDistortion, LogoDistortion, CropDistortion>;

inline std::vector<Frame> distort(std::span<const Frame> frames, const Distortion& kind, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Frame> out;
  if (const auto* noise = std::get_if<NoiseDistortion>(&kind)) {
    if (noise->sigma < 0) throw InvalidInput("noise sigma must be >= 0");
    out.assign(frames.begin(), frames.end());
    if (noise->sigma == 0) return out;
    for (auto& f : out) {
      for (auto& p : f.pixels) {
        const double v = static_cast<double>(p) + noise->sigma * rng.gaussian();
        p = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  } else if (const auto* logo = std::get_if<LogoDistortion>(&kind)) {
    out.assign(frames.begin(), frames.end());
    if (frames.empty()) return out;
    const auto w = frames.front().width;
    const auto h = frames.front().height;
    if (static_cast<std::uint64_t>(logo->x) + logo->width > w ||
        static_cast<std::uint64_t>(logo->y) + logo->height > h) {
      throw InvalidInput("logo patch exceeds frame bounds");
    }
    std::vector<std::uint8_t> patch(static_cast<std::size_t>(logo->width) * logo->height);
    for (auto& p : patch) p = static_cast<std::uint8_t>(rng.index(2) ? 235 : 20);
    for (auto& f : out) {
      for (std::uint32_t y = 0; y < logo->height; ++y) {
        for (std::uint32_t x = 0; x < logo->width; ++x) {
          f.at(logo->x + x, logo->y + y) = patch[static_cast<std::size_t>(y) * logo->width + x];
        }
      }
    }
  } else {
    const auto& crop = std::get<CropDistortion>(kind);
    if (crop.first > crop.last || crop.last >= frames.size()) throw InvalidInput("crop span out of range");
    out.assign(frames.begin() + static_cast<std::ptrdiff_t>(crop.first),
               frames.begin() + static_cast<std::ptrdiff_t>(crop.last + 1));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ground truth and result text formats

inline std::string format_ground_truth(std::span<const GroundTruthEntry> truth) {
  std::ostringstream os;
  for (const auto& g : truth) {
    os << g.query_id << '\t' << g.video_id << '\t' << g.r_start << '\t' << g.r_end << '\t' << g.q_start << '\t'
       << g.q_end << '\n';
  }
  return os.str();
}

inline std::vector<GroundTruthEntry> parse_ground_truth(std::string_view text) {
  std::vector<GroundTruthEntry> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || line.front() == '#') continue;
    std::istringstream fields(line);
    GroundTruthEntry g;
    if (!(fields >> g.query_id >> g.video_id >> g.r_start >> g.r_end >> g.q_start >> g.q_end)) {
      throw InvalidInput("ground truth line " + std::to_string(line_no) + ": expected 6 tab-separated fields");
    }
    if (g.r_end < g.r_start || g.q_end < g.q_start) {
      throw InvalidInput("ground truth line " + std::to_string(line_no) + ": empty span");
    }
    out.push_back(std::move(g));
  }
  return out;
}

inline std::string format_results(std::string_view query_id, std::span<const ResultSegment> results) {
  std::ostringstream os;
  for (const auto& r : results) {
    os << query_id << '\t' << r.video_id << '\t' << r.q_start << '\t' << r.q_end << '\t' << r.r_start << '\t'
       << r.r_end << '\t' << r.votes << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Evaluation driver

struct LabeledQuery {
  std::string id;
  std::vector<Frame> frames;
};

struct EvalReport {
  double mean_ap = 0.0;
  std::map<std::string, double> per_query_ap;
  std::vector<std::string> excluded;
  std::size_t queries = 0;
  double mean_fingerprint_seconds = 0.0;
  double mean_search_seconds = 0.0;
  std::size_t peak_queue_length = 0;
  std::uint64_t peak_queue_bytes = 0;
  std::uint64_t dense_table_bytes = 0;  // what a full voting table would need
  std::map<std::string, std::vector<ResultSegment>> results;
};

inline EvalReport evaluate(const InvertedIndex& index, std::span<const LabeledQuery> queries,
                           std::span<const GroundTruthEntry> truth, const SearchConfig& cfg) {
  if (queries.empty()) throw InvalidInput("query set is empty");
  const auto params = cfg.fingerprint();
  const auto search_params = cfg.search();
  EvalReport report;
  report.queries = queries.size();
  for (const auto& q : queries) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto fps = fingerprint_video(q.frames, params);
    report.mean_fingerprint_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    auto outcome = search(index, fps, search_params);
    report.mean_search_seconds += outcome.stats.seconds;
    report.peak_queue_length = std::max(report.peak_queue_length, outcome.stats.peak_queue_length);
    report.peak_queue_bytes = std::max(report.peak_queue_bytes, outcome.stats.peak_queue_bytes);
    report.dense_table_bytes =
        std::max(report.dense_table_bytes, dense_table_bytes(index, q.frames.size(), cfg.tol_err));
    report.results[q.id] = std::move(outcome.results);
  }
  report.mean_fingerprint_seconds /= static_cast<double>(queries.size());
  report.mean_search_seconds /= static_cast<double>(queries.size());
  auto map = mean_average_precision(report.results, truth);
  report.mean_ap = map.mean_ap;
  report.per_query_ap = std::move(map.per_query);
  report.excluded = std::move(map.excluded);
  return report;
}

inline std::string format_report(const EvalReport& r) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << "mAP\t" << r.mean_ap << '\n';
  os << "queries\t" << r.queries << '\n';
  os << "evaluated\t" << r.per_query_ap.size() << '\n';
  os << std::setprecision(6);
  os << "mean_fingerprint_seconds\t" << r.mean_fingerprint_seconds << '\n';
  os << "mean_search_seconds\t" << r.mean_search_seconds << '\n';
  os << "mean_query_seconds\t" << r.mean_fingerprint_seconds + r.mean_search_seconds << '\n';
  os << "peak_queue_length\t" << r.peak_queue_length << '\n';
  os << "peak_queue_bytes\t" << r.peak_queue_bytes << '\n';
  os << "dense_table_bytes\t" << r.dense_table_bytes << '\n';
  os << std::setprecision(4);
  for (const auto& [q, ap] : r.per_query_ap) os << "ap\t" << q << '\t' << ap << '\n';
  for (const auto& q : r.excluded) os << "excluded\t" << q << '\n';
  return os.str();
}

}  // namespace vee

#endif  // VEE_EVALKIT_HPP
