#include <gtest/gtest.h>

#include <random>
#include <sstream>
#include <thread>

#include "holotele/frame_stream.hpp"
#include "holotele/socket_stream.hpp"

using namespace holotele;

namespace {

const SpaceTimeGrid kGrid{3, 2, 4, 1.0, 1.0, 1.0};

PhotocurrentFrame make_frame(std::uint64_t trial) {
  std::mt19937_64 rng(trial + 100);
  std::normal_distribution<double> n(0.0, 3.0);
  PhotocurrentFrame f{kGrid, std::vector<double>(kGrid.size()), std::vector<double>(kGrid.size()), trial};
  for (auto& v : f.i_x) v = static_cast<float>(n(rng));
  for (auto& v : f.i_p) v = static_cast<float>(n(rng));
  return f;
}

std::string stream_of(std::uint64_t frames, double b0 = 1.5) {
  std::ostringstream os;
  FrameWriter w(os, b0);
  for (std::uint64_t t = 0; t < frames; ++t) w.write(make_frame(t));
  w.flush();
  return os.str();
}

std::vector<PhotocurrentFrame> read_all(const std::string& bytes, const SpaceTimeGrid& g = kGrid, double b0 = 1.5) {
  std::istringstream is(bytes);
  FrameReader r(is, g, b0);
  std::vector<PhotocurrentFrame> out;
  while (auto f = r.next()) out.push_back(std::move(*f));
  return out;
}

} // namespace

TEST(Frames, RoundTrip) {
  const auto bytes = stream_of(5);
  EXPECT_EQ(bytes.size(), 5 * (kFrameHeaderSize + 8 * kGrid.size()));
  const auto frames = read_all(bytes);
  ASSERT_EQ(frames.size(), 5u);
  for (std::uint64_t t = 0; t < 5; ++t) {
    const auto ref = make_frame(t);
    EXPECT_EQ(frames[t].trial_index, t);
    EXPECT_EQ(frames[t].i_x, ref.i_x);
    EXPECT_EQ(frames[t].i_p, ref.i_p);
  }
}

TEST(Frames, EmptyStreamIsClean) { EXPECT_TRUE(read_all("").empty()); }

TEST(Frames, HeaderLayout) {
  const auto bytes = encode_frame(make_frame(7), 2.0);
  EXPECT_EQ(bytes.substr(0, 4), "HTPF");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  EXPECT_EQ(binio::get_u32(p + 4), kFrameFormatVersion);
  EXPECT_EQ(binio::get_u64(p + 8), 7u);
  EXPECT_EQ(binio::get_u32(p + 16), 3u);
  EXPECT_EQ(binio::get_u32(p + 20), 2u);
  EXPECT_EQ(binio::get_u32(p + 24), 4u);
  EXPECT_EQ(binio::get_f64(p + 28), 2.0);
}

TEST(Frames, RejectsBadMagic) {
  auto bytes = stream_of(2);
  bytes[0] = 'X';
  EXPECT_THROW(read_all(bytes), ProtocolError);
}

TEST(Frames, RejectsBadVersion) {
  auto bytes = stream_of(1);
  bytes[4] = 2;
  EXPECT_THROW(read_all(bytes), ProtocolError);
}

TEST(Frames, RejectsTruncatedHeader) {
  const auto bytes = stream_of(2);
  const auto one = kFrameHeaderSize + 8 * kGrid.size();
  try {
    read_all(bytes.substr(0, one + 10));
    FAIL() << "no error";
  } catch (const ProtocolError& e) {
    EXPECT_EQ(e.frame_index(), 1u);
    EXPECT_EQ(e.byte_offset(), one + 10);
  }
}

TEST(Frames, RejectsTruncatedPayload) {
  const auto bytes = stream_of(1);
  EXPECT_THROW(read_all(bytes.substr(0, bytes.size() - 1)), ProtocolError);
}

TEST(Frames, RejectsGridMismatch) {
  EXPECT_THROW(read_all(stream_of(1), SpaceTimeGrid{3, 2, 5, 1, 1, 1}), ProtocolError);
}

TEST(Frames, RejectsB0Mismatch) { EXPECT_THROW(read_all(stream_of(1), kGrid, 1.0), ProtocolError); }

TEST(Frames, RejectsOutOfOrderTrials) {
  std::ostringstream os;
  FrameWriter w(os, 1.5);
  w.write(make_frame(0));
  w.write(make_frame(2));
  EXPECT_THROW(read_all(os.str()), ProtocolError);
}

TEST(Frames, TcpLoopback) {
  net::Listener listener({"127.0.0.1", "0"});
  const std::string port = std::to_string(listener.port());
  std::thread sender([&] {
    auto s = net::connect({"127.0.0.1", port});
    FrameWriter w(*s, 1.5);
    for (std::uint64_t t = 0; t < 20; ++t) w.write(make_frame(t));
    w.flush();
  });
  auto conn = listener.accept();
  FrameReader r(*conn, kGrid, 1.5);
  std::uint64_t n = 0;
  while (auto f = r.next()) {
    EXPECT_EQ(f->i_x, make_frame(n).i_x);
    ++n;
  }
  sender.join();
  EXPECT_EQ(n, 20u);
}

TEST(Frames, EndpointParsing) {
  const auto ep = net::parse_endpoint("localhost:9000");
  EXPECT_EQ(ep.host, "localhost");
  EXPECT_EQ(ep.port, "9000");
  EXPECT_THROW(net::parse_endpoint("9000"), Error);
}
