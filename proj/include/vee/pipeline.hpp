#ifndef VEE_PIPELINE_HPP
#define VEE_PIPELINE_HPP

// Glue between the stages: per-video fingerprint sets, their file format
// ("VEEP"), codebook training over a reference set and index construction.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "vee/binary_io.hpp"
#include "vee/config.hpp"
#include "vee/fingerprint.hpp"
#include "vee/frame_io.hpp"
#include "vee/hashing.hpp"
#include "vee/index.hpp"

namespace vee {

inline constexpr std::uint16_t kFingerprintFileVersion = 1;

struct VideoFingerprints {
  FingerprintParams params;
  std::uint64_t frame_count = 0;
  std::uint32_t fps_num = 25;
  std::uint32_t fps_den = 1;
  std::vector<Descriptor> descriptors;

  friend bool operator==(const VideoFingerprints&, const VideoFingerprints&) = default;
};

inline VideoFingerprints fingerprint_stream(const VideoStream& video, const FingerprintParams& params) {
  VideoFingerprints fp;
  fp.params = params;
  fp.frame_count = video.frames.size();
  fp.fps_num = video.fps_num;
  fp.fps_den = video.fps_den;
  fp.descriptors = fingerprint_video(video.frames, params);
  return fp;
}

// payload := nt u32 | nf u32 | min_sep u32 | frames u64 | fps_num u32 | fps_den u32 |
//            count u32 | count * (t u32 | nf * f64)
inline std::vector<std::uint8_t> encode_fingerprints(const VideoFingerprints& fp) {
  io::ByteWriter w;
  w.u32(static_cast<std::uint32_t>(fp.params.window_half));
  w.u32(static_cast<std::uint32_t>(fp.params.feature_dim));
  w.u32(static_cast<std::uint32_t>(fp.params.min_separation));
  w.u64(fp.frame_count);
  w.u32(fp.fps_num);
  w.u32(fp.fps_den);
  w.u32(static_cast<std::uint32_t>(fp.descriptors.size()));
  for (const auto& d : fp.descriptors) {
    w.u32(static_cast<std::uint32_t>(d.t));
    for (double v : d.values) w.f64(v);
  }
  return io::seal("VEEP", kFingerprintFileVersion, w.buffer());
}

inline VideoFingerprints decode_fingerprints(std::span<const std::uint8_t> file) {
  io::ByteReader r(io::unseal(file, "VEEP", kFingerprintFileVersion));
  VideoFingerprints fp;
  fp.params.window_half = r.u32();
  fp.params.feature_dim = r.u32();
  fp.params.min_separation = r.u32();
  fp.frame_count = r.u64();
  fp.fps_num = r.u32();
  fp.fps_den = r.u32();
  const auto count = r.u32();
  if (static_cast<std::uint64_t>(count) * (4 + 8 * fp.params.feature_dim) > r.remaining()) {
    throw LoadError(LoadErrc::truncated, "descriptor records exceed data");
  }
  fp.descriptors.resize(count);
  for (auto& d : fp.descriptors) {
    d.t = r.u32();
    d.values.resize(fp.params.feature_dim);
    for (auto& v : d.values) v = r.f64();
  }
  if (r.remaining() != 0) throw LoadError(LoadErrc::corrupt, "trailing bytes in fingerprint file");
  return fp;
}

inline VideoFingerprints read_fingerprints(const std::filesystem::path& path) {
  return decode_fingerprints(io::read_file(path));
}

/// Trains a codebook on the pooled descriptors of the given videos.
inline Codebook train_from(std::span<const VideoFingerprints> videos, const SearchConfig& cfg) {
  std::vector<Descriptor> pool;
  for (const auto& v : videos) {
    if (v.params.feature_dim != cfg.feature_dim) {
      throw InvalidInput("fingerprint dimension " + std::to_string(v.params.feature_dim) +
                         " does not match configured nf=" + std::to_string(cfg.feature_dim));
    }
    pool.insert(pool.end(), v.descriptors.begin(), v.descriptors.end());
  }
  if (pool.size() < cfg.num_centroids) {
    throw InvalidInput("codebook training needs at least " + std::to_string(cfg.num_centroids) +
                       " descriptors (nc), got " + std::to_string(pool.size()));
  }
  return train_codebook(pool, cfg.num_centroids, cfg.kmeans_iters, cfg.seed);
}

struct NamedFingerprints {
  std::string name;
  VideoFingerprints fingerprints;
};

/// Indexes the videos with ids 0..n-1 in the given order and freezes the result.
inline InvertedIndex build_index(const Codebook& codebook, const FingerprintParams& params,
                                 std::span<const NamedFingerprints> videos) {
  if (params.feature_dim != codebook.dim) throw InvalidInput("nf does not match the codebook dimension");
  InvertedIndex index(codebook, static_cast<std::uint32_t>(params.window_half),
                      static_cast<std::uint32_t>(params.min_separation));
  for (std::uint32_t id = 0; id < videos.size(); ++id) {
    const auto& v = videos[id];
    if (!(v.fingerprints.params == params)) {
      throw InvalidInput("video \"" + v.name + "\" was fingerprinted with different parameters");
    }
    const auto sigs = make_signatures(v.fingerprints.descriptors, codebook);
    index.add_video(id, {v.name, v.fingerprints.frame_count, v.fingerprints.fps_num, v.fingerprints.fps_den}, sigs);
  }
  index.freeze();
  return index;
}

}  // namespace vee

#endif  // VEE_PIPELINE_HPP
