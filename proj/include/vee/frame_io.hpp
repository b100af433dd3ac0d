#ifndef VEE_FRAME_IO_HPP
#define VEE_FRAME_IO_HPP

// Raw grayscale frame stream ("VEEF"):
//   "VEEF" | version u16 | width u32 | height u32 | fps_num u32 | fps_den u32 |
//   frame_count u64 | frame_count * (width*height) bytes
// All integers little-endian, no per-frame headers.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "vee/binary_io.hpp"
#include "vee/error.hpp"
#include "vee/fingerprint.hpp"

namespace vee {

inline constexpr std::uint16_t kFrameStreamVersion = 1;
inline constexpr std::size_t kFrameStreamHeaderSize = 4 + 2 + 4 * 4 + 8;

struct VideoStream {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t fps_num = 25;
  std::uint32_t fps_den = 1;
  std::vector<Frame> frames;

  double frame_rate() const { return fps_den == 0 ? 0.0 : static_cast<double>(fps_num) / fps_den; }
  friend bool operator==(const VideoStream&, const VideoStream&) = default;
};

inline std::vector<std::uint8_t> encode_frame_stream(const VideoStream& v) {
  io::ByteWriter w;
  w.magic("VEEF");
  w.u16(kFrameStreamVersion);
  w.u32(v.width);
  w.u32(v.height);
  w.u32(v.fps_num);
  w.u32(v.fps_den);
  w.u64(v.frames.size());
  for (const auto& f : v.frames) {
    if (f.width != v.width || f.height != v.height || f.size() != static_cast<std::size_t>(v.width) * v.height) {
      throw InvalidInput("frame dimensions differ from stream header");
    }
    w.bytes(f.pixels);
  }
  return w.take();
}

inline VideoStream decode_frame_stream(std::span<const std::uint8_t> data) {
  io::ByteReader r(data);
  if (data.size() < 4 || !r.magic("VEEF")) throw LoadError(LoadErrc::bad_magic, "not a VEEF frame stream");
  if (data.size() < kFrameStreamHeaderSize) throw LoadError(LoadErrc::truncated, "incomplete VEEF header");
  const auto version = r.u16();
  if (version != kFrameStreamVersion) {
    throw LoadError(LoadErrc::version_mismatch, "unsupported VEEF version " + std::to_string(version));
  }
  VideoStream v;
  v.width = r.u32();
  v.height = r.u32();
  v.fps_num = r.u32();
  v.fps_den = r.u32();
  const auto count = r.u64();
  if (v.width < 3 || v.height < 3) throw LoadError(LoadErrc::corrupt, "frame size below 3x3");
  const std::uint64_t frame_bytes = static_cast<std::uint64_t>(v.width) * v.height;
  if (count > r.remaining() / frame_bytes) {
    throw LoadError(LoadErrc::truncated, "stream declares " + std::to_string(count) + " frames but holds " +
                                             std::to_string(r.remaining() / frame_bytes));
  }
  if (r.remaining() != count * frame_bytes) throw LoadError(LoadErrc::corrupt, "trailing bytes after last frame");
  v.frames.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    auto raw = r.bytes(frame_bytes);
    v.frames.emplace_back(v.width, v.height, std::vector<std::uint8_t>(raw.begin(), raw.end()));
  }
  return v;
}

inline VideoStream read_frame_stream(const std::filesystem::path& path) {
  return decode_frame_stream(io::read_file(path));
}

inline void write_frame_stream(const std::filesystem::path& path, const VideoStream& v) {
  io::write_file_atomic(path, encode_frame_stream(v));
}

}  // namespace vee

#endif  // VEE_FRAME_IO_HPP
