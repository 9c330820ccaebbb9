//
// Copyright (C) 2026 The clod Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <vector>

#include "clod/geometry.hpp"
#include "clod/image.hpp"

namespace clod {

struct Sphere {
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
  Vec3 albedo = Vec3::Constant(0.8);
  bool emissive = false;  ///< shows its albedo unshaded
};

struct SceneSpec {
  std::vector<Sphere> spheres;
  Vec3 light_direction = Vec3(0.4, 1.0, 0.6);  ///< towards the light, need not be unit
  double ambient = 0.2;
  std::vector<std::size_t> salient;  ///< indices into `spheres`

  /// Throws InvalidInput for non-positive radii, albedo outside [0, 1],
  /// a zero light direction or an out-of-range salient index.
  void validate() const;
};

/// A large sphere at the origin with two small satellites, one of them
/// salient. Used by the CLI and the training tests.
SceneSpec default_scene();

struct RigSpec {
  int count_azimuth = 40;
  int count_elevation = 6;
  double radius = 4.0;
  Vec3 look_at = Vec3::Zero();
  double min_elevation_deg = -10.0;
  double max_elevation_deg = 35.0;
  double fov_deg = 40.0;  ///< horizontal
  int width = 64;
  int height = 64;
};

/// Cameras on a sphere section of `radius` around look_at, azimuth-major
/// order, every one aimed at look_at with world +y as up. Elevation rows sit
/// at bin centers of [min, max]. Throws InvalidInput for counts < 1.
std::vector<Camera> generate_rig(const RigSpec& rig);
std::vector<Camera> generate_rig(int count_azimuth, int count_elevation, double radius, const Vec3& look_at);

/// World-from-camera rotation looking from `eye` at `target`.
Mat3 look_at_rotation(const Vec3& eye, const Vec3& target, const Vec3& up = Vec3::UnitY());

struct GroundTruth {
  Image rgba;      ///< straight alpha, alpha in {0, 1}
  Image saliency;  ///< 1 channel, max 1 when any salient sphere is visible
};

/// Nearest ray/sphere hit per pixel center at the camera's resolution.
/// Lambert shading with the scene's ambient term; saliency is a Gaussian
/// splat around each salient sphere's projected center, kept only where that
/// sphere is the visible surface, then normalized to peak 1. Throws
/// InvalidInput below 8x8.
GroundTruth render_ground_truth(const SceneSpec& scene, const Camera& camera);

/// Parallel over cameras.
std::vector<GroundTruth> render_ground_truth(const SceneSpec& scene, const std::vector<Camera>& cameras);

/// Nearest hit distance along a unit ray, or a negative value when it misses;
/// `index` receives the sphere hit.
double intersect(const SceneSpec& scene, const Vec3& origin, const Vec3& direction, std::size_t* index = nullptr);

}  // namespace clod
