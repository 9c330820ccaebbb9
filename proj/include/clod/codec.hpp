//
// Copyright (C) 2026 The clod Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "clod/mlp.hpp"

// Binary model files. Layout (all integers u32 little-endian, payload
// little-endian float32), see docs/stream_format.md:
//
//   header   "CLFN" | version=1 | input_dim output_dim depth min_width max_width | 0x01020304
//   segment  kind | width | param_count | payload_bytes | payload | zero pad to 16 bytes
//
// A progressive stream holds one base segment (every parameter of the
// min-width network) followed by one delta segment per width
// min_width+1 .. max_width. A full-model file holds a single full segment
// with the flat parameter vector.
namespace clod {

inline constexpr char kStreamMagic[4] = {'C', 'L', 'F', 'N'};
inline constexpr std::uint32_t kStreamVersion = 1;
inline constexpr std::uint32_t kEndianTag = 0x01020304u;
inline constexpr std::size_t kHeaderBytes = 32;
inline constexpr std::size_t kSegmentHeaderBytes = 16;
inline constexpr std::size_t kSegmentAlignment = 16;

enum class SegmentKind : std::uint32_t { kBase = 1, kDelta = 2, kFull = 3 };

using Bytes = std::vector<std::uint8_t>;

/// Parameter values appended when growing a network from width - 1 to
/// width, in stream order: per layer (network order) the new row over the
/// width - 1 earlier inputs, the new column including the corner, the new
/// bias entry, then the new normalization gain and bias.
std::vector<float> delta_values(const VariableWidthMlp<float>& model, std::uint32_t width);

/// Every parameter of the network truncated to min_width, in stream order.
std::vector<float> base_values(const VariableWidthMlp<float>& model);

Bytes encode_stream(const VariableWidthMlp<float>& model);
Bytes encode_full(const VariableWidthMlp<float>& model);

ArchConfig read_header(std::span<const std::uint8_t> bytes);

/// Incremental decoder for a progressive stream arriving in arbitrary chunks.
class StreamDecoder {
 public:
  void feed(std::span<const std::uint8_t> chunk);

  bool has_header() const { return model_.has_value(); }
  /// 0 until the base segment is complete.
  std::uint32_t available_width() const { return width_; }
  std::size_t bytes_received() const { return buffer_.size(); }
  /// Offset just past the last fully decoded segment.
  std::size_t consumed() const { return consumed_; }
  const VariableWidthMlp<float>& model() const;

  /// Stop decoding beyond this width (remaining bytes are ignored).
  void set_width_limit(std::uint32_t width) { limit_ = width; }

 private:
  void decode_available();
  void apply_base(std::span<const float> values);
  void apply_delta(std::uint32_t width, std::span<const float> values);

  Bytes buffer_;
  std::size_t consumed_ = 0;
  std::uint32_t width_ = 0;
  std::uint32_t limit_ = UINT32_MAX;
  std::optional<VariableWidthMlp<float>> model_;
};

/// Network rebuilt from a stream prefix through `up_to_width`. Parameters
/// beyond it stay zero and available_width() reports the limit. Throws
/// PartialStreamError (with the greatest usable width) when the bytes end
/// before that width, FormatError on a bad header or segment.
VariableWidthMlp<float> decode_prefix(std::span<const std::uint8_t> bytes, std::uint32_t up_to_width);

/// Widest network the bytes allow; PartialStreamError if not even the base
/// segment is complete.
VariableWidthMlp<float> decode_available(std::span<const std::uint8_t> bytes);

/// Accepts either file kind.
VariableWidthMlp<float> decode_model(std::span<const std::uint8_t> bytes);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// Segment boundaries of a complete progressive stream.
struct SegmentInfo {
  SegmentKind kind;
  std::uint32_t width;
  std::uint32_t param_count;
  std::size_t begin;  ///< offset of the segment header
  std::size_t end;    ///< offset past the padding
};
std::vector<SegmentInfo> scan_segments(std::span<const std::uint8_t> bytes);

/// Widths of an N-level discrete baseline, equally spaced from min to max.
std::vector<std::uint32_t> discrete_widths(const ArchConfig& arch, std::uint32_t levels);

struct StreamSchedule {
  bool continuous = true;
  std::uint32_t levels = 4;  ///< discrete mode only
};

struct StreamEvent {
  double time = 0.0;  ///< seconds since the first byte
  std::uint32_t available_width = 0;
  std::uint64_t bytes_received = 0;
  std::uint64_t delta_payload_bytes = 0;  ///< float32 parameter bytes since the previous event
  std::uint64_t delta_wire_bytes = 0;     ///< including segment headers and padding
};

/// Replays the stream at constant bandwidth (bytes/s, may be +inf) and
/// reports every change of the renderable width. In discrete mode the width
/// only advances when the next level is complete.
std::vector<StreamEvent> stream_simulate(std::span<const std::uint8_t> stream, double bandwidth,
                                         const StreamSchedule& schedule);

}  // namespace clod
