#include "rmeta/param_vector.hpp"

#include <algorithm>
#include <cmath>

#include "rmeta/errors.hpp"

namespace rmeta::ad {

Layout::Layout(std::vector<SegmentSpec> segments) : segments_(std::move(segments)) {
  offsets_.reserve(segments_.size());
  std::int32_t max_layer = -1;
  for (const SegmentSpec& s : segments_) {
    if (s.rows < 1 || s.cols < 1) {
      throw ShapeError("layout segment '" + s.name + "' has non-positive shape");
    }
    if (s.layer < 0) {
      throw ShapeError("layout segment '" + s.name + "' has negative layer id");
    }
    offsets_.push_back(total_);
    total_ += s.size();
    max_layer = std::max(max_layer, s.layer);
  }
  layer_count_ = max_layer + 1;
}

std::size_t Layout::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    if (segments_[i].name == name) return i;
  }
  throw ShapeError("no segment named '" + name + "' in layout");
}

bool Layout::operator==(const Layout& o) const {
  if (segments_.size() != o.segments_.size()) return false;
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const SegmentSpec& a = segments_[i];
    const SegmentSpec& b = o.segments_[i];
    if (a.name != b.name || a.rows != b.rows || a.cols != b.cols || a.layer != b.layer) return false;
  }
  return true;
}

ParamVector::ParamVector(LayoutPtr lay, std::vector<double> vals)
    : layout(std::move(lay)), values(std::move(vals)) {
  if (!layout || values.size() != layout->total_size()) {
    throw ShapeError("parameter vector length does not match its layout");
  }
}

std::span<double> ParamVector::segment_span(std::size_t i) {
  return {values.data() + layout->offset(i), layout->segment(i).size()};
}
std::span<const double> ParamVector::segment_span(std::size_t i) const {
  return {values.data() + layout->offset(i), layout->segment(i).size()};
}

Gradient::Gradient(LayoutPtr lay, std::vector<double> vals)
    : layout(std::move(lay)), values(std::move(vals)) {
  if (!layout || values.size() != layout->total_size()) {
    throw ShapeError("gradient length does not match its layout");
  }
}

std::span<double> Gradient::segment_span(std::size_t i) {
  return {values.data() + layout->offset(i), layout->segment(i).size()};
}
std::span<const double> Gradient::segment_span(std::size_t i) const {
  return {values.data() + layout->offset(i), layout->segment(i).size()};
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

}  // namespace rmeta::ad
