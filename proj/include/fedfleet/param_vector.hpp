#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace fedfleet {

/// One dense layer: rows x cols weight matrix followed by cols bias terms.
struct LayerShape {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;

  std::size_t weight_count() const { return static_cast<std::size_t>(rows) * cols; }
  std::size_t param_count() const { return weight_count() + cols; }

  friend bool operator==(const LayerShape&, const LayerShape&) = default;
};

using Layout = std::vector<LayerShape>;

std::size_t layout_param_count(const Layout& layout);

/// Flat parameter storage shared by global and local models. Two vectors
/// with identical layouts are element-wise addable/subtractable; every
/// element is finite (checked at construction and deserialization).
class ParamVector {
 public:
  ParamVector() = default;
  ParamVector(Layout layout, std::vector<double> values);

  static ParamVector zeros(Layout layout);

  const Layout& layout() const { return layout_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }

  bool same_layout(const ParamVector& other) const { return layout_ == other.layout_; }

  ParamVector& operator+=(const ParamVector& other);
  ParamVector& operator-=(const ParamVector& other);
  ParamVector& operator*=(double scale);
  /// this += a * x
  ParamVector& axpy(double a, const ParamVector& x);

  friend bool operator==(const ParamVector&, const ParamVector&) = default;

 private:
  void require_same_layout(const ParamVector& other) const;

  Layout layout_;
  std::vector<double> values_;
};

/// local - global, element-wise ("the discrepancies").
ParamVector model_delta(const ParamVector& local, const ParamVector& global);

/// base + delta, element-wise. Exact inverse of model_delta in floating point.
ParamVector apply_delta(const ParamVector& base, const ParamVector& delta);

// Wire format (also the checkpoint file format): little-endian u32 layer
// count, then (u32 rows, u32 cols) per layer, then the values as
// little-endian 64-bit floats.
std::size_t serialized_header_bytes(std::size_t layer_count);
std::vector<std::uint8_t> serialize(const ParamVector& params);
ParamVector deserialize(std::span<const std::uint8_t> bytes);

void write_param_file(const std::filesystem::path& path, const ParamVector& params);
ParamVector read_param_file(const std::filesystem::path& path);

}  // namespace fedfleet
