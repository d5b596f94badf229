#include "fedfleet/param_vector.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "fedfleet/errors.hpp"

namespace fedfleet {

namespace {

void put_u32_le(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
  out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
  out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xFF));
}

std::uint32_t get_u32_le(std::span<const std::uint8_t> bytes, std::size_t offset) {
  return static_cast<std::uint32_t>(bytes[offset]) |
         (static_cast<std::uint32_t>(bytes[offset + 1]) << 8) |
         (static_cast<std::uint32_t>(bytes[offset + 2]) << 16) |
         (static_cast<std::uint32_t>(bytes[offset + 3]) << 24);
}

void put_f64_le(std::vector<std::uint8_t>& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>((bits >> (8 * i)) & 0xFF));
}

double get_f64_le(std::span<const std::uint8_t> bytes, std::size_t offset) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[offset + i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, sizeof(v));
  return v;
}

}  // namespace

std::size_t layout_param_count(const Layout& layout) {
  std::size_t total = 0;
  for (const auto& layer : layout) total += layer.param_count();
  return total;
}

ParamVector::ParamVector(Layout layout, std::vector<double> values)
    : layout_(std::move(layout)), values_(std::move(values)) {
  const std::size_t expected = layout_param_count(layout_);
  if (values_.size() != expected) {
    throw ShapeError("param vector holds " + std::to_string(values_.size()) +
                     " values but layout demands " + std::to_string(expected));
  }
  for (const double v : values_) {
    if (!std::isfinite(v)) throw DomainError("param vector contains a non-finite value");
  }
}

ParamVector ParamVector::zeros(Layout layout) {
  std::vector<double> values(layout_param_count(layout), 0.0);
  return ParamVector(std::move(layout), std::move(values));
}

void ParamVector::require_same_layout(const ParamVector& other) const {
  if (!same_layout(other)) throw ShapeError("param vector layouts differ");
}

ParamVector& ParamVector::operator+=(const ParamVector& other) {
  require_same_layout(other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

ParamVector& ParamVector::operator-=(const ParamVector& other) {
  require_same_layout(other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

ParamVector& ParamVector::operator*=(double scale) {
  for (double& v : values_) v *= scale;
  return *this;
}

ParamVector& ParamVector::axpy(double a, const ParamVector& x) {
  require_same_layout(x);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += a * x.values_[i];
  return *this;
}

ParamVector model_delta(const ParamVector& local, const ParamVector& global) {
  ParamVector out = local;
  out -= global;
  return out;
}

ParamVector apply_delta(const ParamVector& base, const ParamVector& delta) {
  ParamVector out = base;
  out += delta;
  return out;
}

std::size_t serialized_header_bytes(std::size_t layer_count) {
  return 4 + 8 * layer_count;
}

std::vector<std::uint8_t> serialize(const ParamVector& params) {
  std::vector<std::uint8_t> out;
  out.reserve(serialized_header_bytes(params.layout().size()) + 8 * params.size());
  put_u32_le(out, static_cast<std::uint32_t>(params.layout().size()));
  for (const auto& layer : params.layout()) {
    put_u32_le(out, layer.rows);
    put_u32_le(out, layer.cols);
  }
  for (const double v : params.values()) put_f64_le(out, v);
  return out;
}

ParamVector deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw LengthError("param vector stream shorter than its header");
  const std::uint32_t layer_count = get_u32_le(bytes, 0);
  const std::size_t header = serialized_header_bytes(layer_count);
  if (bytes.size() < header) throw LengthError("param vector header truncated");

  Layout layout(layer_count);
  for (std::uint32_t i = 0; i < layer_count; ++i) {
    layout[i].rows = get_u32_le(bytes, 4 + 8 * static_cast<std::size_t>(i));
    layout[i].cols = get_u32_le(bytes, 8 + 8 * static_cast<std::size_t>(i));
  }
  const std::size_t count = layout_param_count(layout);
  if (bytes.size() != header + 8 * count) {
    throw LengthError("param vector payload does not match its layout");
  }
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) values[i] = get_f64_le(bytes, header + 8 * i);
  return ParamVector(std::move(layout), std::move(values));
}

void write_param_file(const std::filesystem::path& path, const ParamVector& params) {
  const auto bytes = serialize(params);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw LookupError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw LookupError("short write to " + path.string());
}

ParamVector read_param_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw LookupError("cannot open " + path.string());
  const std::streamsize size = in.tellg();
  in.seekg(0);
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
  in.read(reinterpret_cast<char*>(bytes.data()), size);
  if (!in) throw LookupError("short read from " + path.string());
  return deserialize(bytes);
}

}  // namespace fedfleet
