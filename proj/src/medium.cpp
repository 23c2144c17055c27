#include "layermp/medium.hpp"

#include <algorithm>
#include <cmath>

#include "layermp/error.hpp"

namespace layermp {

LayeredMedium::LayeredMedium(std::vector<double> interfaces, std::vector<double> potential_weight,
                             std::vector<double> flux_weight)
    : interfaces_(std::move(interfaces)),
      potential_weight_(std::move(potential_weight)),
      flux_weight_(std::move(flux_weight)) {
  const std::size_t layers = interfaces_.size() + 1;
  if (potential_weight_.size() != layers || flux_weight_.size() != layers)
    throw InvalidMedium("expected " + std::to_string(layers) + " potential and flux weights");
  for (std::size_t i = 0; i < interfaces_.size(); ++i) {
    if (!std::isfinite(interfaces_[i])) throw InvalidMedium("interface height is not finite");
    if (i > 0 && !(interfaces_[i] < interfaces_[i - 1]))
      throw InvalidMedium("interfaces must be strictly decreasing");
  }
  for (std::size_t i = 0; i < layers; ++i) {
    if (!(potential_weight_[i] > 0.0) || !(flux_weight_[i] > 0.0) ||
        !std::isfinite(potential_weight_[i]) || !std::isfinite(flux_weight_[i]))
      throw InvalidMedium("layer weights must be positive and finite");
  }
  double scale = 0.0;
  for (double d : interfaces_) scale = std::max(scale, std::abs(d));
  tolerance_ = 1e-14 * (scale + 1.0);
}

LayeredMedium LayeredMedium::dielectric(std::vector<double> interfaces,
                                        std::vector<double> permittivity) {
  std::vector<double> ones(permittivity.size(), 1.0);
  return LayeredMedium(std::move(interfaces), std::move(ones), std::move(permittivity));
}

double LayeredMedium::interface(int index) const {
  const int L = num_interfaces();
  if (L == 0) throw IndexOutOfRange("homogeneous medium has no interfaces");
  if (index < -1 || index > L) throw IndexOutOfRange("interface index out of range");
  return interfaces_[std::clamp(index, 0, L - 1)];
}

double LayeredMedium::thickness(int layer) const {
  check_layer(layer);
  if (num_interfaces() == 0) return 0.0;
  return interface(layer - 1) - interface(layer);
}

double LayeredMedium::potential_weight(int layer) const {
  check_layer(layer);
  return potential_weight_[layer];
}

double LayeredMedium::flux_weight(int layer) const {
  check_layer(layer);
  return flux_weight_[layer];
}

void LayeredMedium::check_layer(int layer) const {
  if (layer < 0 || layer > num_interfaces())
    throw IndexOutOfRange("layer index " + std::to_string(layer) + " out of range");
}

int LayeredMedium::layer_of(double z) const {
  for (std::size_t i = 0; i < interfaces_.size(); ++i) {
    if (std::abs(z - interfaces_[i]) <= tolerance_)
      throw PointOnInterface("height " + std::to_string(z) + " lies on interface " +
                             std::to_string(i));
    if (z > interfaces_[i]) return static_cast<int>(i);
  }
  return num_interfaces();
}

bool LayeredMedium::contains(int layer, double z) const {
  check_layer(layer);
  const int L = num_interfaces();
  if (L == 0) return std::isfinite(z);
  if (layer < L && !(z > interfaces_[layer] + tolerance_)) return false;
  if (layer > 0 && !(z < interfaces_[layer - 1] - tolerance_)) return false;
  return true;
}

LayerPoint::LayerPoint(const LayeredMedium& medium, const Vec3& position)
    : position_(position), layer_(medium.layer_of(position.z)) {}

LayerPoint::LayerPoint(const LayeredMedium& medium, const Vec3& position, int layer)
    : position_(position), layer_(layer) {
  if (!medium.contains(layer, position.z)) {
    medium.layer_of(position.z);  // raises PointOnInterface when applicable
    throw LayerMismatch("point is not inside layer " + std::to_string(layer));
  }
}

std::string Component::label() const {
  return std::to_string(static_cast<int>(target_side)) +
         std::to_string(static_cast<int>(source_side));
}

Component parse_component(const std::string& label, int target_layer, int source_layer) {
  auto side = [&](char ch) {
    if (ch == '1') return Side::lower;
    if (ch == '2') return Side::upper;
    throw ConfigError("component label must be one of 11, 12, 21, 22: " + label);
  };
  if (label.size() != 2) throw ConfigError("component label must be one of 11, 12, 21, 22: " + label);
  return {side(label[0]), side(label[1]), target_layer, source_layer};
}

std::vector<Component> all_components(int target_layer, int source_layer) {
  std::vector<Component> out;
  for (Side a : {Side::lower, Side::upper})
    for (Side b : {Side::lower, Side::upper}) out.push_back({a, b, target_layer, source_layer});
  return out;
}

bool component_exists(const LayeredMedium& medium, const Component& c) {
  const int L = medium.num_interfaces();
  if (c.target_layer < 0 || c.target_layer > L || c.source_layer < 0 || c.source_layer > L)
    return false;
  if (L == 0) return false;
  if (c.target_side == Side::lower && c.target_layer == L) return false;
  if (c.target_side == Side::upper && c.target_layer == 0) return false;
  if (c.source_side == Side::lower && c.source_layer == L) return false;
  if (c.source_side == Side::upper && c.source_layer == 0) return false;
  return true;
}

void require_component(const LayeredMedium& medium, const Component& c) {
  medium.check_layer(c.target_layer);
  medium.check_layer(c.source_layer);
  if (!component_exists(medium, c))
    throw ComponentAbsent("component " + c.label() + " absent for layers (" +
                          std::to_string(c.target_layer) + "," + std::to_string(c.source_layer) +
                          ")");
}

namespace {

// Height of the interface the target-side field is attached to.
double target_anchor(const LayeredMedium& m, const Component& c) {
  return c.target_side == Side::lower ? m.interface(c.target_layer)
                                      : m.interface(c.target_layer - 1);
}

// Signed depth of the source below (or above) its own anchoring interface.
double source_depth(const LayeredMedium& m, const Component& c, double zp) {
  return c.source_side == Side::lower ? zp - m.interface(c.source_layer)
                                      : m.interface(c.source_layer - 1) - zp;
}

}  // namespace

Vec3 tau_map(const LayeredMedium& medium, const Component& c, const Vec3& r, const Vec3& rp) {
  require_component(medium, c);
  const double anchor = target_anchor(medium, c);
  const double target_depth = c.target_side == Side::lower ? r.z - anchor : anchor - r.z;
  return {r.x - rp.x, r.y - rp.y, target_depth + source_depth(medium, c, rp.z)};
}

Vec3 polarization_source(const LayeredMedium& medium, const Component& c, const Vec3& rp) {
  require_component(medium, c);
  const double anchor = target_anchor(medium, c);
  const double depth = source_depth(medium, c, rp.z);
  const double z = c.target_side == Side::lower ? anchor - depth : anchor + depth;
  return {rp.x, rp.y, z};
}

Vec3 polarization_offset(const Component& c, const Vec3& r, const Vec3& image) {
  const Vec3 diff = r - image;
  return c.target_side == Side::lower ? diff : reflect_z(diff);
}

bool image_center_admissible(const LayeredMedium& medium, const Component& c, const Vec3& center) {
  require_component(medium, c);
  const double anchor = target_anchor(medium, c);
  return c.target_side == Side::lower ? center.z < anchor : center.z > anchor;
}

}  // namespace layermp
