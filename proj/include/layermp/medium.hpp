#pragma once

#include <string>
#include <vector>

#include "layermp/vec3.hpp"

namespace layermp {

//! Piecewise-constant stratified medium. Layer 0 lies above the first
//! interface, layer L below the last one.
class LayeredMedium {
 public:
  //! Heights must be strictly decreasing; one potential and one flux weight
  //! per layer, all positive.
  LayeredMedium(std::vector<double> interfaces, std::vector<double> potential_weight,
                std::vector<double> flux_weight);

  //! Classical dielectric stack: unit potential weights, permittivities as flux weights.
  static LayeredMedium dielectric(std::vector<double> interfaces, std::vector<double> permittivity);

  int num_interfaces() const { return static_cast<int>(interfaces_.size()); }
  int num_layers() const { return num_interfaces() + 1; }

  //! Interface height with the clamped conventions d(-1) = d(0) and
  //! d(L) = d(L-1), so the outermost layers have zero thickness.
  double interface(int index) const;
  //! Thickness d(l-1) - d(l); zero for the outermost layers.
  double thickness(int layer) const;

  double potential_weight(int layer) const;
  double flux_weight(int layer) const;

  const std::vector<double>& interfaces() const { return interfaces_; }
  const std::vector<double>& potential_weights() const { return potential_weight_; }
  const std::vector<double>& flux_weights() const { return flux_weight_; }

  double interface_tolerance() const { return tolerance_; }

  //! Layer holding height z. Throws PointOnInterface near an interface.
  int layer_of(double z) const;
  //! True when z lies strictly inside the layer, away from its interfaces.
  bool contains(int layer, double z) const;

  void check_layer(int layer) const;

 private:
  std::vector<double> interfaces_;
  std::vector<double> potential_weight_;
  std::vector<double> flux_weight_;
  double tolerance_ = 0.0;
};

//! Point tagged with the layer it lives in.
class LayerPoint {
 public:
  LayerPoint(const LayeredMedium& medium, const Vec3& position);
  LayerPoint(const LayeredMedium& medium, const Vec3& position, int layer);

  const Vec3& position() const { return position_; }
  int layer() const { return layer_; }

 private:
  Vec3 position_;
  int layer_;
};

//! Which bounding interface of a layer a reaction field is attached to.
enum class Side { lower = 1, upper = 2 };

//! One reaction component: the target-side and source-side orientations
//! together with the target and source layers.
struct Component {
  Side target_side = Side::lower;
  Side source_side = Side::lower;
  int target_layer = 0;
  int source_layer = 0;

  std::string label() const;
  friend bool operator==(const Component&, const Component&) = default;
};

//! Parses "11", "12", "21" or "22".
Component parse_component(const std::string& label, int target_layer, int source_layer);

//! The four orientation pairs in the order 11, 12, 21, 22.
std::vector<Component> all_components(int target_layer, int source_layer);

bool component_exists(const LayeredMedium& medium, const Component& c);
void require_component(const LayeredMedium& medium, const Component& c);

//! Vertical offset whose positivity makes the reaction kernel decay.
Vec3 tau_map(const LayeredMedium& medium, const Component& c, const Vec3& r, const Vec3& rp);

//! Equivalent polarization position of a source at rp.
Vec3 polarization_source(const LayeredMedium& medium, const Component& c, const Vec3& rp);

//! Offset between a point and a polarization image, oriented so that its
//! vertical component is the kernel decay depth.
Vec3 polarization_offset(const Component& c, const Vec3& r, const Vec3& image);

//! True when a polarization center lies strictly on the admissible side of
//! the target layer.
bool image_center_admissible(const LayeredMedium& medium, const Component& c, const Vec3& center);

}  // namespace layermp
