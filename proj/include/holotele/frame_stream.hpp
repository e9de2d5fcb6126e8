#pragma once

// Alice -> Bob classical channel. Each frame is self-delimiting:
//
//   "HTPF" | version u32 | trial_index u64 | Nx Ny Nt u32 | B0 f64   (36 bytes)
//   i_x[Nx*Ny*Nt] f32 | i_p[Nx*Ny*Nt] f32                          row-major (x, y, t)
//
// All fields little-endian.

#include <istream>
#include <optional>
#include <ostream>
#include <string>

#include "holotele/binary_io.hpp"
#include "holotele/protocol.hpp"

namespace holotele {

inline constexpr std::uint32_t kFrameFormatVersion = 1;
inline constexpr std::size_t kFrameHeaderSize = 36;

struct FrameHeader {
  std::uint32_t version = kFrameFormatVersion;
  std::uint64_t trial_index = 0;
  std::uint32_t nx = 0, ny = 0, nt = 0;
  double b0 = 0.0;

  std::size_t payload_size() const { return 2 * 4 * static_cast<std::size_t>(nx) * ny * nt; }
};

inline std::string encode_frame(const PhotocurrentFrame& frame, double b0) {
  const std::size_t n = frame.grid.size();
  if (frame.i_x.size() != n || frame.i_p.size() != n)
    throw GridMismatch("encode_frame: frame arrays do not match grid");
  std::string out;
  out.reserve(kFrameHeaderSize + 8 * n);
  binio::put_magic(out, "HTPF");
  binio::put_u32(out, kFrameFormatVersion);
  binio::put_u64(out, frame.trial_index);
  binio::put_u32(out, static_cast<std::uint32_t>(frame.grid.nx));
  binio::put_u32(out, static_cast<std::uint32_t>(frame.grid.ny));
  binio::put_u32(out, static_cast<std::uint32_t>(frame.grid.nt));
  binio::put_f64(out, b0);
  for (double v : frame.i_x) binio::put_f32(out, static_cast<float>(v));
  for (double v : frame.i_p) binio::put_f32(out, static_cast<float>(v));
  return out;
}

class FrameWriter {
public:
  FrameWriter(std::ostream& out, double b0) : out_(out), b0_(b0) {}

  void write(const PhotocurrentFrame& frame) {
    const auto bytes = encode_frame(frame, b0_);
    out_.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out_) throw IoError("frame stream: write failed at frame " + std::to_string(frames_));
    ++frames_;
  }

  void flush() {
    out_.flush();
    if (!out_) throw IoError("frame stream: flush failed");
  }

  std::uint64_t frames_written() const { return frames_; }

private:
  std::ostream& out_;
  double b0_;
  std::uint64_t frames_ = 0;
};

/// Reads frames for a known grid and local-oscillator amplitude; rejects any
/// header that disagrees and any out-of-order trial index.
class FrameReader {
public:
  FrameReader(std::istream& in, const SpaceTimeGrid& grid, double b0) : in_(in), grid_(grid), b0_(b0) {}

  /// Next frame, or empty at a clean end of stream (EOF on a frame boundary).
  std::optional<PhotocurrentFrame> next() {
    unsigned char header[kFrameHeaderSize];
    const std::size_t got = read_bytes(header, kFrameHeaderSize);
    if (got == 0) return std::nullopt;
    if (got < kFrameHeaderSize)
      throw ProtocolError("unexpected end of stream inside frame header (" + std::to_string(got) + " of " +
                              std::to_string(kFrameHeaderSize) + " bytes)",
                          frames_, offset_ + got);
    const std::uint64_t frame_start = offset_;
    if (std::memcmp(header, "HTPF", 4) != 0)
      throw ProtocolError("bad magic, expected \"HTPF\"", frames_, frame_start);
    FrameHeader h;
    h.version = binio::get_u32(header + 4);
    h.trial_index = binio::get_u64(header + 8);
    h.nx = binio::get_u32(header + 16);
    h.ny = binio::get_u32(header + 20);
    h.nt = binio::get_u32(header + 24);
    h.b0 = binio::get_f64(header + 28);
    if (h.version != kFrameFormatVersion)
      throw ProtocolError("unsupported frame version " + std::to_string(h.version), frames_, frame_start + 4);
    if (h.nx != grid_.nx || h.ny != grid_.ny || h.nt != grid_.nt)
      throw ProtocolError("frame grid " + std::to_string(h.nx) + "x" + std::to_string(h.ny) + "x" +
                              std::to_string(h.nt) + " does not match configured grid",
                          frames_, frame_start + 16);
    if (h.b0 != b0_)
      throw ProtocolError("frame B0 " + std::to_string(h.b0) + " does not match configured B0", frames_,
                          frame_start + 28);
    if (h.trial_index != expected_trial_)
      throw ProtocolError("trial index " + std::to_string(h.trial_index) + " out of order, expected " +
                              std::to_string(expected_trial_),
                          frames_, frame_start + 8);
    offset_ += kFrameHeaderSize;

    std::string payload(h.payload_size(), '\0');
    const std::size_t body = read_bytes(reinterpret_cast<unsigned char*>(payload.data()), payload.size());
    if (body < payload.size())
      throw ProtocolError("unexpected end of stream inside frame payload (" + std::to_string(body) + " of " +
                              std::to_string(payload.size()) + " bytes)",
                          frames_, offset_ + body);
    offset_ += payload.size();

    const std::size_t n = grid_.size();
    PhotocurrentFrame frame{grid_, std::vector<double>(n), std::vector<double>(n), h.trial_index};
    const auto* p = reinterpret_cast<const unsigned char*>(payload.data());
    for (std::size_t i = 0; i < n; ++i) frame.i_x[i] = binio::get_f32(p + 4 * i);
    for (std::size_t i = 0; i < n; ++i) frame.i_p[i] = binio::get_f32(p + 4 * (n + i));
    ++frames_;
    ++expected_trial_;
    return frame;
  }

  std::uint64_t frames_read() const { return frames_; }
  std::uint64_t offset() const { return offset_; }

private:
  std::size_t read_bytes(unsigned char* dst, std::size_t n) {
    in_.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
    const auto got = static_cast<std::size_t>(in_.gcount());
    if (in_.bad()) throw IoError("frame stream: read error at byte offset " + std::to_string(offset_));
    return got;
  }

  std::istream& in_;
  SpaceTimeGrid grid_;
  double b0_;
  std::uint64_t frames_ = 0;
  std::uint64_t offset_ = 0;
  std::uint64_t expected_trial_ = 0;
};

} // namespace holotele
