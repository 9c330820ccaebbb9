//
// Copyright (C) 2026 The clod Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <algorithm>
#include <cstring>
#include <numeric>
#include <random>

#include "clod/codec.hpp"
#include "clod/error.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace clod;

namespace {

constexpr ArchConfig kSmall{6, 4, 4, 5, 12};

std::uint32_t u32_at(const Bytes& b, std::size_t offset) {
  std::uint32_t v = 0;
  std::memcpy(&v, b.data() + offset, 4);  // the test host is little-endian
  return v;
}

// Model whose parameter i holds the value i, to trace where each one lands.
VariableWidthMlp<float> indexed_model(const ArchConfig& arch) {
  VariableWidthMlp<float> m(arch);
  std::iota(m.parameters().begin(), m.parameters().end(), 0.0f);
  return m;
}

double lod_for_width(const ArchConfig& arch, std::uint32_t w) { return w - arch.min_width + 1.0; }

std::size_t pad16(std::size_t n) { return (n + 15) / 16 * 16; }

}  // namespace

TEST_CASE("header layout") {
  const auto model = test::random_model<float>(kSmall, 1);
  const Bytes bytes = encode_stream(model);
  CHECK(std::memcmp(bytes.data(), "CLFN", 4) == 0);
  CHECK(u32_at(bytes, 4) == 1);
  CHECK(u32_at(bytes, 8) == 6);
  CHECK(u32_at(bytes, 12) == 4);
  CHECK(u32_at(bytes, 16) == 4);
  CHECK(u32_at(bytes, 20) == 5);
  CHECK(u32_at(bytes, 24) == 12);
  CHECK(u32_at(bytes, 28) == 0x01020304u);
  CHECK(read_header(bytes) == kSmall);
}

TEST_CASE("segments carry every parameter exactly once") {
  const auto model = indexed_model(kSmall);
  std::vector<float> seen = base_values(model);
  CHECK(seen.size() == param_count(kSmall, kSmall.min_width));
  for (std::uint32_t w = kSmall.min_width + 1; w <= kSmall.max_width; ++w) {
    const auto delta = delta_values(model, w);
    CHECK(delta.size() == param_count(kSmall, w) - param_count(kSmall, w - 1));
    seen.insert(seen.end(), delta.begin(), delta.end());
  }
  std::sort(seen.begin(), seen.end());
  std::vector<float> all(model.parameters().size());
  std::iota(all.begin(), all.end(), 0.0f);
  CHECK(seen == all);
}

TEST_CASE("delta segments of the default architecture") {
  const ArchConfig cfg;
  VariableWidthMlp<float> model(cfg);
  model.initialize(3);
  const Bytes bytes = encode_stream(model);
  const auto segments = scan_segments(bytes);
  REQUIRE(segments.size() == 385);
  CHECK(segments[0].kind == SegmentKind::kBase);
  CHECK(segments[0].param_count == 135812);
  std::size_t expected_size = 32 + 16 + pad16(4 * 135812);
  for (std::size_t i = 1; i < segments.size(); ++i) {
    const std::uint32_t w = 128 + static_cast<std::uint32_t>(i);
    CHECK(segments[i].kind == SegmentKind::kDelta);
    CHECK(segments[i].width == w);
    CHECK(segments[i].param_count == 16 * (w - 1) + 45);
    CHECK(segments[i].begin % 16 == 0);
    expected_size += 16 + pad16(4 * (16 * (w - 1) + 45));
  }
  CHECK(bytes.size() == expected_size);
}

TEST_CASE("full and progressive round trips are exact") {
  const auto model = test::random_model<float>(kSmall, 4);
  CHECK(decode_model(encode_full(model)) == model);
  CHECK(decode_model(encode_stream(model)) == model);

  const auto dir = test::scratch_dir("codec");
  write_file(dir / "m.clfn", encode_stream(model));
  CHECK(decode_model(read_file(dir / "m.clfn")) == model);
}

TEST_CASE("prefixes reproduce the full model at every available width") {
  const auto model = test::random_model<float>(kSmall, 5);
  const Bytes bytes = encode_stream(model);
  const auto inputs = test::random_matrix<float>(6, 30, 6);
  for (std::uint32_t w = kSmall.min_width; w <= kSmall.max_width; ++w) {
    const auto prefix = decode_prefix(bytes, w);
    CHECK(prefix.available_width() == w);
    for (std::uint32_t v = kSmall.min_width; v <= w; ++v) {
      const double lod = lod_for_width(kSmall, v);
      CHECK(forward(prefix, inputs, lod) == forward(model, inputs, lod));
      if (v > kSmall.min_width) CHECK(forward(prefix, inputs, lod - 0.5) == forward(model, inputs, lod - 0.5));
    }
    if (w < kSmall.max_width) CHECK_THROWS_AS(forward(prefix, inputs, lod_for_width(kSmall, w) + 0.5), InvalidInput);
  }
  CHECK_THROWS_AS(decode_prefix(bytes, kSmall.max_width + 1), InvalidInput);
}

TEST_CASE("arbitrary cut points and chunkings") {
  const auto model = test::random_model<float>(kSmall, 7);
  const Bytes bytes = encode_stream(model);
  const auto segments = scan_segments(bytes);
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t cut = rng() % (bytes.size() + 1);
    const std::span<const std::uint8_t> prefix(bytes.data(), cut);
    std::uint32_t expect = 0;
    for (const auto& s : segments)
      if (s.end <= cut) expect = s.width;
    if (cut < kHeaderBytes) {
      CHECK_THROWS_AS(decode_available(prefix), std::exception);
      continue;
    }
    if (expect == 0) {
      CHECK_THROWS_AS(decode_available(prefix), PartialStreamError);
      continue;
    }
    const auto partial = decode_available(prefix);
    CHECK(partial.available_width() == expect);
    try {
      decode_prefix(prefix, kSmall.max_width);
      CHECK(expect == kSmall.max_width);
    } catch (const PartialStreamError& e) {
      CHECK(e.last_complete_width() == expect);
    }

    // The same bytes fed in random chunks end in the same state.
    StreamDecoder decoder;
    std::size_t at = 0;
    while (at < cut) {
      const std::size_t n = std::min<std::size_t>(cut - at, 1 + rng() % 97);
      decoder.feed(prefix.subspan(at, n));
      at += n;
    }
    CHECK(decoder.available_width() == expect);
    CHECK(decoder.bytes_received() == cut);
    CHECK(decoder.model() == partial);
  }
}

TEST_CASE("decoder progress while bytes arrive") {
  const auto model = test::random_model<float>(kSmall, 9);
  const Bytes bytes = encode_stream(model);
  StreamDecoder decoder;
  CHECK_FALSE(decoder.has_header());
  CHECK_THROWS_AS(decoder.model(), PartialStreamError);
  std::uint32_t last = 0;
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    decoder.feed(std::span<const std::uint8_t>(&bytes[i], 1));
    CHECK(decoder.available_width() >= last);
    last = decoder.available_width();
  }
  CHECK(decoder.has_header());
  CHECK(decoder.consumed() == bytes.size());
  CHECK(decoder.model() == model);

  StreamDecoder limited;
  limited.set_width_limit(7);
  limited.feed(bytes);
  CHECK(limited.available_width() == 7);
}

TEST_CASE("malformed input") {
  const auto model = test::random_model<float>(kSmall, 10);
  Bytes bytes = encode_stream(model);

  Bytes bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_model(bad), FormatError);
  CHECK_THROWS_AS(StreamDecoder().feed(std::span<const std::uint8_t>(bad.data(), 3)), FormatError);
  bad = bytes;
  bad[4] = 2;  // version
  CHECK_THROWS_AS(decode_model(bad), FormatError);
  bad = bytes;
  bad[28] = 0x05;  // endian tag
  CHECK_THROWS_AS(decode_model(bad), FormatError);
  bad = bytes;
  bad[20] = 13;  // min width above max width
  CHECK_THROWS_AS(decode_model(bad), FormatError);

  // Delta segments out of order.
  const auto segments = scan_segments(bytes);
  bad = Bytes(bytes.begin(), bytes.begin() + segments[1].begin);
  bad.insert(bad.end(), bytes.begin() + segments[2].begin, bytes.begin() + segments[2].end);
  CHECK_THROWS_AS(decode_model(bad), FormatError);

  // Segment claiming the wrong size.
  bad = bytes;
  bad[segments[1].begin + 8] ^= 1;
  CHECK_THROWS_AS(decode_model(bad), FormatError);

  CHECK_THROWS_AS(read_file("/nonexistent/clod/model.clfn"), std::runtime_error);
}

TEST_CASE("discrete levels") {
  CHECK(discrete_widths(ArchConfig{}, 4) == std::vector<std::uint32_t>{128, 256, 384, 512});
  CHECK(discrete_widths(kDeskArch, 4) == std::vector<std::uint32_t>{16, 32, 48, 64});
  CHECK(discrete_widths(kDeskArch, 2) == std::vector<std::uint32_t>{16, 64});
  CHECK(discrete_widths(kDeskArch, 1) == std::vector<std::uint32_t>{64});
  CHECK(discrete_widths(ArchConfig{6, 4, 3, 4, 6}, 10) == std::vector<std::uint32_t>{4, 5, 6});
  CHECK_THROWS_AS(discrete_widths(kDeskArch, 0), InvalidInput);
}

TEST_CASE("stream simulation") {
  const auto model = test::random_model<float>(kDeskArch, 11);
  const Bytes bytes = encode_stream(model);
  const auto segments = scan_segments(bytes);

  const auto cont = stream_simulate(bytes, 1000.0, {true, 4});
  REQUIRE(cont.size() == 49);
  std::uint64_t wire = 0, payload = 0;
  for (std::size_t i = 0; i < cont.size(); ++i) {
    CHECK(cont[i].available_width == 16 + i);
    CHECK(cont[i].bytes_received == segments[i].end);
    CHECK(cont[i].time == doctest::Approx(segments[i].end / 1000.0).epsilon(1e-12));
    CHECK(cont[i].delta_payload_bytes == 4ull * segments[i].param_count);
    wire += cont[i].delta_wire_bytes;
    payload += cont[i].delta_payload_bytes;
    if (i > 0) CHECK(cont[i].time > cont[i - 1].time);
  }
  CHECK(wire == bytes.size());
  CHECK(payload == model_bytes(kDeskArch, 64));

  const auto disc = stream_simulate(bytes, 1000.0, {false, 4});
  REQUIRE(disc.size() == 4);
  CHECK(disc[0].available_width == 16);
  CHECK(disc[1].available_width == 32);
  CHECK(disc[3].available_width == 64);
  CHECK(disc[1].delta_payload_bytes == model_bytes(kDeskArch, 32) - model_bytes(kDeskArch, 16));
  CHECK(disc[3].bytes_received == bytes.size());

  const auto instant = stream_simulate(bytes, std::numeric_limits<double>::infinity(), {true, 4});
  for (const auto& e : instant) CHECK(e.time == 0.0);

  CHECK_THROWS_AS(stream_simulate(bytes, 0.0, {true, 4}), InvalidInput);
  CHECK_THROWS_AS(stream_simulate(encode_full(model), 1.0, {true, 4}), InvalidInput);
}
