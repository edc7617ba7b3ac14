#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace rmeta::ad {

// One named block of a flat parameter vector (a weight matrix or a bias),
// tagged with the network layer it belongs to.
struct SegmentSpec {
  std::string name;
  std::int32_t rows = 1;
  std::int32_t cols = 1;
  std::int32_t layer = 0;

  std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
};

// Immutable segment layout shared between a parameter vector and every
// gradient aligned with it.
class Layout {
 public:
  explicit Layout(std::vector<SegmentSpec> segments);

  std::size_t total_size() const { return total_; }
  std::size_t segment_count() const { return segments_.size(); }
  const SegmentSpec& segment(std::size_t i) const { return segments_[i]; }
  std::size_t offset(std::size_t i) const { return offsets_[i]; }
  std::int32_t layer_count() const { return layer_count_; }

  // Index of the segment with the given name; throws if absent.
  std::size_t index_of(const std::string& name) const;

  bool operator==(const Layout& o) const;

 private:
  std::vector<SegmentSpec> segments_;
  std::vector<std::size_t> offsets_;
  std::size_t total_ = 0;
  std::int32_t layer_count_ = 0;
};

using LayoutPtr = std::shared_ptr<const Layout>;

// Flat parameter storage with named, layer-tagged segments.
struct ParamVector {
  LayoutPtr layout;
  std::vector<double> values;

  ParamVector() = default;
  explicit ParamVector(LayoutPtr lay)
      : layout(std::move(lay)), values(layout ? layout->total_size() : 0, 0.0) {}
  ParamVector(LayoutPtr lay, std::vector<double> vals);

  std::size_t size() const { return values.size(); }
  std::span<double> segment_span(std::size_t i);
  std::span<const double> segment_span(std::size_t i) const;
};

// A derivative aligned, element for element, with a ParamVector.
struct Gradient {
  LayoutPtr layout;
  std::vector<double> values;

  Gradient() = default;
  explicit Gradient(LayoutPtr lay)
      : layout(std::move(lay)), values(layout ? layout->total_size() : 0, 0.0) {}
  Gradient(LayoutPtr lay, std::vector<double> vals);

  std::size_t size() const { return values.size(); }
  std::span<double> segment_span(std::size_t i);
  std::span<const double> segment_span(std::size_t i) const;
};

// Largest absolute entry (0 for an empty vector).
double max_abs(std::span<const double> v);

}  // namespace rmeta::ad
