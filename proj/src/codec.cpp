//
// Copyright (C) 2026 The clod Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "clod/codec.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>

#include "clod/error.hpp"

namespace clod {

namespace {

void put_u32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[offset + i]) << (8 * i);
  return v;
}

void put_floats(Bytes& out, std::span<const float> values) {
  for (float f : values) put_u32(out, std::bit_cast<std::uint32_t>(f));
}

std::size_t padded(std::size_t n) { return (n + kSegmentAlignment - 1) / kSegmentAlignment * kSegmentAlignment; }

void put_segment(Bytes& out, SegmentKind kind, std::uint32_t width, std::span<const float> values) {
  const std::size_t payload = values.size() * sizeof(float);
  if (payload > std::numeric_limits<std::uint32_t>::max()) throw_invalid("segment too large for the stream format");
  put_u32(out, static_cast<std::uint32_t>(kind));
  put_u32(out, width);
  put_u32(out, static_cast<std::uint32_t>(values.size()));
  put_u32(out, static_cast<std::uint32_t>(payload));
  put_floats(out, values);
  out.resize(out.size() + (padded(payload) - payload), 0);
}

void put_header(Bytes& out, const ArchConfig& arch) {
  out.insert(out.end(), std::begin(kStreamMagic), std::end(kStreamMagic));
  put_u32(out, kStreamVersion);
  put_u32(out, arch.input_dim);
  put_u32(out, arch.output_dim);
  put_u32(out, arch.depth);
  put_u32(out, arch.min_width);
  put_u32(out, arch.max_width);
  put_u32(out, kEndianTag);
}

// Calls visit(index) for every flat-parameter index that enters the network
// when it grows to `width`, in stream order.
template <typename Visit>
void visit_delta(const ArchConfig& arch, const ParamLayout& layout, std::uint32_t width, Visit&& visit) {
  const std::uint32_t p = width - 1;
  for (std::uint32_t l = 0; l < layout.layers.size(); ++l) {
    const auto& L = layout.layers[l];
    auto at = [&L](std::size_t r, std::size_t c) { return L.weight + r * L.cols + c; };
    if (L.normalized) {
      const std::uint32_t row_len = (l == 0) ? arch.input_dim : p;
      for (std::uint32_t c = 0; c < row_len; ++c) visit(at(p, c));
    }
    if (l > 0) {
      const std::uint32_t col_len = L.normalized ? width : arch.output_dim;
      for (std::uint32_t r = 0; r < col_len; ++r) visit(at(r, p));
    }
    if (L.normalized) {
      visit(L.bias + p);
      visit(L.gain + p);
      visit(L.beta + p);
    }
  }
}

template <typename Visit>
void visit_base(const ArchConfig& arch, const ParamLayout& layout, Visit&& visit) {
  const std::uint32_t w = arch.min_width;
  for (std::uint32_t l = 0; l < layout.layers.size(); ++l) {
    const auto& L = layout.layers[l];
    const std::uint32_t rows = L.normalized ? w : arch.output_dim;
    const std::uint32_t cols = (l == 0) ? arch.input_dim : w;
    for (std::uint32_t r = 0; r < rows; ++r)
      for (std::uint32_t c = 0; c < cols; ++c) visit(L.weight + static_cast<std::size_t>(r) * L.cols + c);
    for (std::uint32_t r = 0; r < rows; ++r) visit(L.bias + r);
    if (L.normalized) {
      for (std::uint32_t r = 0; r < rows; ++r) visit(L.gain + r);
      for (std::uint32_t r = 0; r < rows; ++r) visit(L.beta + r);
    }
  }
}

}  // namespace

std::vector<float> delta_values(const VariableWidthMlp<float>& model, std::uint32_t width) {
  const auto& arch = model.arch();
  if (width <= arch.min_width || width > arch.max_width) throw_invalid("delta_values: width out of range");
  std::vector<float> out;
  out.reserve(delta_param_count(arch, width));
  const auto& params = model.parameters();
  visit_delta(arch, model.layout(), width, [&](std::size_t i) { out.push_back(params[i]); });
  return out;
}

std::vector<float> base_values(const VariableWidthMlp<float>& model) {
  std::vector<float> out;
  out.reserve(param_count(model.arch(), model.arch().min_width));
  const auto& params = model.parameters();
  visit_base(model.arch(), model.layout(), [&](std::size_t i) { out.push_back(params[i]); });
  return out;
}

Bytes encode_stream(const VariableWidthMlp<float>& model) {
  const auto& arch = model.arch();
  if (model.available_width() != arch.max_width) throw_invalid("encode_stream: model is missing its widest parameters");
  Bytes out;
  out.reserve(kHeaderBytes + model_bytes(arch, arch.max_width) +
              (arch.max_width - arch.min_width + 1) * (kSegmentHeaderBytes + kSegmentAlignment));
  put_header(out, arch);
  put_segment(out, SegmentKind::kBase, arch.min_width, base_values(model));
  for (std::uint32_t w = arch.min_width + 1; w <= arch.max_width; ++w)
    put_segment(out, SegmentKind::kDelta, w, delta_values(model, w));
  return out;
}

Bytes encode_full(const VariableWidthMlp<float>& model) {
  Bytes out;
  put_header(out, model.arch());
  put_segment(out, SegmentKind::kFull, model.available_width(), model.parameters());
  return out;
}

ArchConfig read_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes) throw PartialStreamError("stream ends inside the header", 0);
  if (std::memcmp(bytes.data(), kStreamMagic, 4) != 0) throw FormatError("bad magic: not a CLFN stream");
  const std::uint32_t version = get_u32(bytes, 4);
  if (version != kStreamVersion) throw FormatError("unsupported stream version " + std::to_string(version));
  if (get_u32(bytes, 28) != kEndianTag) throw FormatError("bad endianness tag");
  ArchConfig arch{get_u32(bytes, 8), get_u32(bytes, 12), get_u32(bytes, 16), get_u32(bytes, 20), get_u32(bytes, 24)};
  try {
    arch.validate();
  } catch (const InvalidInput& e) {
    throw FormatError(std::string("invalid architecture in header: ") + e.what());
  }
  return arch;
}

const VariableWidthMlp<float>& StreamDecoder::model() const {
  if (!model_ || width_ == 0) throw PartialStreamError("no complete base segment received", 0);
  return *model_;
}

void StreamDecoder::feed(std::span<const std::uint8_t> chunk) {
  buffer_.insert(buffer_.end(), chunk.begin(), chunk.end());
  decode_available();
}

void StreamDecoder::apply_base(std::span<const float> values) {
  auto& params = model_->parameters();
  std::size_t k = 0;
  visit_base(model_->arch(), model_->layout(), [&](std::size_t i) { params[i] = values[k++]; });
}

void StreamDecoder::apply_delta(std::uint32_t width, std::span<const float> values) {
  auto& params = model_->parameters();
  std::size_t k = 0;
  visit_delta(model_->arch(), model_->layout(), width, [&](std::size_t i) { params[i] = values[k++]; });
}

void StreamDecoder::decode_available() {
  const std::span<const std::uint8_t> bytes(buffer_);
  if (!model_) {
    if (bytes.size() < kHeaderBytes) {
      if (std::memcmp(bytes.data(), kStreamMagic, std::min<std::size_t>(bytes.size(), 4)) != 0)
        throw FormatError("bad magic: not a CLFN stream");
      return;
    }
    model_.emplace(read_header(bytes));
    std::fill(model_->parameters().begin(), model_->parameters().end(), 0.0f);
    consumed_ = kHeaderBytes;
  }
  const ArchConfig& arch = model_->arch();

  std::vector<float> values;
  while (width_ < limit_ && width_ < arch.max_width) {
    if (bytes.size() < consumed_ + kSegmentHeaderBytes) return;
    const auto kind = static_cast<SegmentKind>(get_u32(bytes, consumed_));
    const std::uint32_t width = get_u32(bytes, consumed_ + 4);
    const std::uint32_t count = get_u32(bytes, consumed_ + 8);
    const std::uint32_t payload = get_u32(bytes, consumed_ + 12);

    std::uint64_t expected = 0;
    if (width_ == 0 && kind == SegmentKind::kBase && width == arch.min_width) {
      expected = param_count(arch, arch.min_width);
    } else if (width_ == 0 && kind == SegmentKind::kFull && width >= arch.min_width && width <= arch.max_width) {
      expected = model_->layout().total;
    } else if (width_ != 0 && kind == SegmentKind::kDelta && width == width_ + 1) {
      expected = delta_param_count(arch, width);
    } else {
      throw FormatError("unexpected segment (kind " + std::to_string(static_cast<std::uint32_t>(kind)) + ", width " +
                        std::to_string(width) + ") after width " + std::to_string(width_));
    }
    if (count != expected || payload != expected * sizeof(float))
      throw FormatError("segment for width " + std::to_string(width) + " has the wrong size");

    const std::size_t end = consumed_ + kSegmentHeaderBytes + padded(payload);
    if (bytes.size() < end) return;
    values.resize(count);
    for (std::uint32_t k = 0; k < count; ++k)
      values[k] = std::bit_cast<float>(get_u32(bytes, consumed_ + kSegmentHeaderBytes + 4 * std::size_t{k}));

    if (kind == SegmentKind::kFull) {
      std::copy(values.begin(), values.end(), model_->parameters().begin());
      model_->set_available_width(width);
      width_ = width;
      consumed_ = end;
      return;
    }
    if (kind == SegmentKind::kBase)
      apply_base(values);
    else
      apply_delta(width, values);
    width_ = width;
    model_->set_available_width(width);
    consumed_ = end;
  }
}

VariableWidthMlp<float> decode_prefix(std::span<const std::uint8_t> bytes, std::uint32_t up_to_width) {
  const ArchConfig arch = read_header(bytes);
  if (up_to_width < arch.min_width || up_to_width > arch.max_width) throw_invalid("decode_prefix: width out of range");
  StreamDecoder decoder;
  decoder.set_width_limit(up_to_width);
  decoder.feed(bytes);
  if (decoder.available_width() < up_to_width)
    throw PartialStreamError("stream ends before width " + std::to_string(up_to_width) + "; last complete width " +
                                 std::to_string(decoder.available_width()),
                             decoder.available_width());
  return decoder.model();
}

VariableWidthMlp<float> decode_available(std::span<const std::uint8_t> bytes) {
  StreamDecoder decoder;
  decoder.feed(bytes);
  if (decoder.available_width() == 0) throw PartialStreamError("stream ends before the base segment is complete", 0);
  return decoder.model();
}

VariableWidthMlp<float> decode_model(std::span<const std::uint8_t> bytes) { return decode_available(bytes); }

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<SegmentInfo> scan_segments(std::span<const std::uint8_t> bytes) {
  read_header(bytes);
  std::vector<SegmentInfo> segments;
  std::size_t offset = kHeaderBytes;
  while (offset + kSegmentHeaderBytes <= bytes.size()) {
    SegmentInfo info;
    info.kind = static_cast<SegmentKind>(get_u32(bytes, offset));
    info.width = get_u32(bytes, offset + 4);
    info.param_count = get_u32(bytes, offset + 8);
    info.begin = offset;
    info.end = offset + kSegmentHeaderBytes + padded(get_u32(bytes, offset + 12));
    if (info.end > bytes.size()) break;
    segments.push_back(info);
    offset = info.end;
  }
  return segments;
}

std::vector<std::uint32_t> discrete_widths(const ArchConfig& arch, std::uint32_t levels) {
  arch.validate();
  if (levels < 1) throw_invalid("discrete_widths: need at least one level");
  if (levels == 1) return {arch.max_width};
  std::vector<std::uint32_t> widths;
  const double span = arch.max_width - arch.min_width;
  for (std::uint32_t k = 0; k < levels; ++k)
    widths.push_back(arch.min_width + static_cast<std::uint32_t>(std::lround(k * span / (levels - 1))));
  widths.erase(std::unique(widths.begin(), widths.end()), widths.end());
  return widths;
}

std::vector<StreamEvent> stream_simulate(std::span<const std::uint8_t> stream, double bandwidth,
                                         const StreamSchedule& schedule) {
  if (!(bandwidth > 0.0)) throw_invalid("stream_simulate: bandwidth must be positive");
  const ArchConfig arch = read_header(stream);
  const auto segments = scan_segments(stream);
  std::vector<std::uint32_t> targets;
  if (!schedule.continuous) targets = discrete_widths(arch, schedule.levels);

  std::vector<StreamEvent> events;
  std::uint32_t prev_width = 0;
  std::size_t prev_end = 0;
  for (const auto& seg : segments) {
    if (seg.kind == SegmentKind::kFull) throw_invalid("stream_simulate: expected a progressive stream");
    const bool emit = schedule.continuous || seg.width == arch.min_width ||
                      std::find(targets.begin(), targets.end(), seg.width) != targets.end();
    if (!emit) continue;
    StreamEvent ev;
    ev.time = std::isinf(bandwidth) ? 0.0 : static_cast<double>(seg.end) / bandwidth;
    ev.available_width = seg.width;
    ev.bytes_received = seg.end;
    ev.delta_payload_bytes =
        model_bytes(arch, seg.width) - (prev_width == 0 ? 0 : model_bytes(arch, prev_width));
    ev.delta_wire_bytes = seg.end - prev_end;
    events.push_back(ev);
    prev_width = seg.width;
    prev_end = seg.end;
  }
  return events;
}

}  // namespace clod
