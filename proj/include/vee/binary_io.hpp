#ifndef VEE_BINARY_IO_HPP
#define VEE_BINARY_IO_HPP

// Little-endian serialization helpers shared by every on-disk format.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vee/error.hpp"

namespace vee::io {

static_assert(std::endian::native == std::endian::little,
              "on-disk formats assume a little-endian host");

// 64-bit FNV-1a. Every step is a bijection on the running state, so any
// single-byte change in the input always changes the digest.
inline std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) { put(v); }
  void u32(std::uint32_t v) { put(v); }
  void u64(std::uint64_t v) { put(v); }
  void f32(float v) { put(v); }
  void f64(double v) { put(v); }
  void bytes(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
  void magic(std::string_view m) { buf_.insert(buf_.end(), m.begin(), m.end()); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
  }

  std::size_t size() const { return buf_.size(); }
  std::vector<std::uint8_t>& buffer() { return buf_; }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  template <class T>
  void put(T v) {
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, &v, sizeof(T));
    buf_.insert(buf_.end(), raw, raw + sizeof(T));
  }

  std::vector<std::uint8_t> buf_;
};

// Bounds-checked reader; running past the end raises LoadErrc::truncated.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::uint8_t u8() { return get<std::uint8_t>(); }
  std::uint16_t u16() { return get<std::uint16_t>(); }
  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::uint64_t u64() { return get<std::uint64_t>(); }
  float f32() { return get<float>(); }
  double f64() { return get<double>(); }

  std::span<const std::uint8_t> bytes(std::size_t n) {
    need(n);
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  std::string str() {
    const auto n = u32();
    auto raw = bytes(n);
    return std::string(raw.begin(), raw.end());
  }

  bool magic(std::string_view m) {
    need(m.size());
    const bool ok = std::memcmp(data_.data() + pos_, m.data(), m.size()) == 0;
    pos_ += m.size();
    return ok;
  }

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (n > data_.size() - pos_) {
      throw LoadError(LoadErrc::truncated, "unexpected end of data at offset " + std::to_string(pos_));
    }
  }

  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError(LoadErrc::io, "cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  std::vector<std::uint8_t> data(size);
  if (size > 0 && !in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(size))) {
    throw LoadError(LoadErrc::io, "read failed for " + path.string());
  }
  return data;
}

// Writes to a sibling temp file and renames it over the target, so readers
// never observe a partially written file.
inline void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error("cannot rename " + tmp.string() + " to " + path.string());
  }
}

inline void write_file_atomic(const std::filesystem::path& path, std::string_view text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

// Framed container used by the codebook and index files:
//   magic[4] | version u16 | payload_length u64 | payload | fnv1a64(payload) u64
inline std::vector<std::uint8_t> seal(std::string_view magic, std::uint16_t version,
                                      std::span<const std::uint8_t> payload) {
  ByteWriter w;
  w.magic(magic);
  w.u16(version);
  w.u64(payload.size());
  w.bytes(payload);
  w.u64(fnv1a64(payload));
  return w.take();
}

inline constexpr std::size_t kSealHeaderSize = 4 + 2 + 8;

// Validates framing and returns the payload view (into `file`).
inline std::span<const std::uint8_t> unseal(std::span<const std::uint8_t> file, std::string_view magic,
                                            std::uint16_t version) {
  if (file.size() < magic.size()) throw LoadError(LoadErrc::truncated, "file shorter than magic");
  ByteReader r(file);
  if (!r.magic(magic)) throw LoadError(LoadErrc::bad_magic, "expected \"" + std::string(magic) + "\"");
  if (file.size() < kSealHeaderSize) throw LoadError(LoadErrc::truncated, "incomplete header");
  const auto found = r.u16();
  if (found != version) {
    throw LoadError(LoadErrc::version_mismatch,
                    "found version " + std::to_string(found) + ", expected " + std::to_string(version));
  }
  const auto length = r.u64();
  if (length > r.remaining() || r.remaining() - length < 8) {
    throw LoadError(LoadErrc::truncated, "payload length " + std::to_string(length) + " exceeds file size");
  }
  if (r.remaining() - length != 8) throw LoadError(LoadErrc::corrupt, "trailing bytes after checksum");
  auto payload = r.bytes(length);
  if (r.u64() != fnv1a64(payload)) throw LoadError(LoadErrc::checksum, "payload checksum mismatch");
  return payload;
}

}  // namespace vee::io

#endif  // VEE_BINARY_IO_HPP
