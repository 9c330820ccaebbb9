//
// Copyright (C) 2026 The clod Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <filesystem>
#include <vector>

namespace clod {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Pinhole camera. Right-handed world frame; the camera looks down its local
/// -z axis with +y up, image rows grow downwards.
struct Camera {
  Vec3 position = Vec3::Zero();
  Mat3 rotation = Mat3::Identity();  ///< world-from-camera
  double focal = 1.0;                ///< pixels
  Vec2 principal_point = Vec2::Zero();
  int width = 1;
  int height = 1;

  /// Throws InvalidInput unless the rotation is proper orthonormal (1e-6),
  /// focal > 0 and both resolution components are >= 1.
  void validate() const;

  /// Same pose, intrinsics rescaled to a new resolution.
  Camera resized(int new_width, int new_height) const;

  Vec3 forward() const { return -rotation.col(2); }
};

/// Ray in Plücker coordinates: unit direction d and moment o x d.
struct PluckerRay {
  Vec3 direction = Vec3::UnitZ();
  Vec3 moment = Vec3::Zero();

  /// Network input layout (d.x, d.y, d.z, m.x, m.y, m.z).
  std::array<double, 6> features() const {
    return {direction.x(), direction.y(), direction.z(), moment.x(), moment.y(), moment.z()};
  }
};

/// Normalizes `direction` and forms (d, o x d). Throws InvalidInput for a
/// zero-length direction.
PluckerRay plucker(const Vec3& origin, const Vec3& direction);

/// Ray through continuous pixel position `px`. No half-pixel offset is added:
/// callers pass (x + 0.5, y + 0.5) for pixel centers.
PluckerRay ray_for_pixel(const Camera& camera, const Vec2& px);

/// Camera sets as JSON: array of {position, rotation (row-major 9), focal,
/// principal_point, resolution}.
std::vector<Camera> load_cameras(const std::filesystem::path& path);
void save_cameras(const std::filesystem::path& path, const std::vector<Camera>& cameras);

}  // namespace clod
