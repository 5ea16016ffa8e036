#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wmbench/scene.hpp"

namespace wmbench {

inline constexpr double kMaxRangeM = 20.0;
inline constexpr double kDefaultFovDeg = 90.0;
inline constexpr int kDefaultEgoWidth = 64;
inline constexpr int kDefaultPanoramaWidth = 256;
/// Depth difference at which the geometric part of view_distance saturates.
inline constexpr double kDepthScaleM = 2.0;
inline constexpr double kClassWeight = 0.5;

struct Column {
  float depth_m = static_cast<float>(kMaxRangeM);
  int class_id = 0;
  int instance_id = 0;
  friend bool operator==(const Column&, const Column&) = default;
};

enum class ObservationKind { Ego, Panorama };

std::string to_string(ObservationKind k);
ObservationKind observation_kind_from_string(const std::string& s);

/// A column scan. Ego views span `fov_deg` with column i looking along
/// heading + fov/2 - (i + 0.5) * fov/width. Panoramas span 360 degrees with
/// column j looking along heading - (j + 0.5) * 360/width, so column 0 starts
/// at the agent heading and the scan wraps around.
struct Observation {
  ObservationKind kind = ObservationKind::Ego;
  double fov_deg = kDefaultFovDeg;
  std::vector<Column> columns;
  std::optional<Pose> pose;

  int width() const { return static_cast<int>(columns.size()); }
  /// Ray bearing of a column, degrees counter-clockwise from the heading.
  double column_offset_deg(double column) const;

  /// Equal in everything except the optional pose.
  bool same_content(const Observation& o) const {
    return kind == o.kind && fov_deg == o.fov_deg && columns == o.columns;
  }
  friend bool operator==(const Observation&, const Observation&) = default;
};

using EgoView = Observation;
using Panorama = Observation;

struct PredictedRollout {
  std::vector<Observation> frames;
  std::string source;
  ActionSequence aligned_actions;
  int horizon() const { return static_cast<int>(frames.size()); }
};

class RenderError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Traverses the grid from (x, y) along `bearing_rad` until the first occupied
/// cell. Returns the column record for that hit.
Column cast_ray(const GridScene& scene, double x, double y, double bearing_rad);

EgoView raycast_view(const GridScene& scene, const Pose& pose, double fov_deg = kDefaultFovDeg,
                     int width = kDefaultEgoWidth);
Panorama render_panorama(const GridScene& scene, const Pose& pose, int width = kDefaultPanoramaWidth);
Observation render(const GridScene& scene, const Pose& pose, ObservationKind kind);

/// Splits a panorama into `n_views` contiguous ego views of 360/n degrees;
/// view k is centred on heading - k * 360/n.
std::vector<EgoView> panorama_to_views(const Panorama& p, int n_views);
/// Inverse of panorama_to_views.
Panorama stitch_views(const std::vector<EgoView>& views);
/// The view centred on the heading with the default field of view.
EgoView front_view(const Panorama& p, double fov_deg = kDefaultFovDeg);

/// Panorama rotated by `steps` turns (positive = TurnLeft). Requires 16 | width.
Panorama rotate_panorama(const Panorama& p, int steps);

/// Column-wise observation distance in [0, 1]: mean of
/// 0.5 * [class differs] + 0.5 * min(1, |depth difference| / 2 m).
double view_distance(const Observation& a, const Observation& b);

/// Fraction of a's columns whose hit point, seen from b's pose, falls inside
/// b's field of view and agrees with b's depth within two cells.
double overlap_ratio(const EgoView& a, const Pose& pose_a, const EgoView& b, const Pose& pose_b,
                     double cell_size);
double overlap_ratio(const EgoView& a, const EgoView& b, double cell_size);

/// Fraction of columns inside the central `fov_deg` of the frame that carry
/// `instance_id`.
double central_visibility(const Observation& o, int instance_id, double fov_deg = kDefaultFovDeg);

}  // namespace wmbench
