//
// Copyright (C) 2026 The clod Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "clod/synth.hpp"

#include <cmath>
#include <numbers>

#include "clod/error.hpp"

namespace clod {

void SceneSpec::validate() const {
  for (const auto& s : spheres) {
    if (!(s.radius > 0.0)) throw_invalid("sphere radius must be positive");
    if ((s.albedo.array() < 0.0).any() || (s.albedo.array() > 1.0).any())
      throw_invalid("sphere albedo must lie in [0, 1]");
  }
  if (!(light_direction.norm() > 0.0)) throw_invalid("light direction must be non-zero");
  for (std::size_t i : salient)
    if (i >= spheres.size()) throw_invalid("salient sphere index out of range");
}

SceneSpec default_scene() {
  SceneSpec scene;
  scene.spheres = {
      {Vec3(0.0, -0.1, 0.0), 0.8, Vec3(0.85, 0.55, 0.25), false},
      {Vec3(0.55, 0.5, 0.3), 0.3, Vec3(0.9, 0.2, 0.2), false},
      {Vec3(-0.6, 0.25, 0.35), 0.25, Vec3(0.2, 0.5, 0.9), false},
  };
  scene.salient = {1};
  return scene;
}

Mat3 look_at_rotation(const Vec3& eye, const Vec3& target, const Vec3& up) {
  const Vec3 f = (target - eye).normalized();
  Vec3 x = f.cross(up);
  if (x.norm() < 1e-9) x = f.cross(Vec3::UnitZ());
  x.normalize();
  const Vec3 z = -f;
  const Vec3 y = z.cross(x);
  Mat3 r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  return r;
}

std::vector<Camera> generate_rig(const RigSpec& rig) {
  if (rig.count_azimuth < 1 || rig.count_elevation < 1) throw_invalid("rig counts must be at least 1");
  if (!(rig.radius > 0.0)) throw_invalid("rig radius must be positive");
  if (!(rig.fov_deg > 0.0 && rig.fov_deg < 180.0)) throw_invalid("field of view must lie in (0, 180)");
  if (rig.width < 1 || rig.height < 1) throw_invalid("rig resolution must be positive");

  constexpr double deg = std::numbers::pi / 180.0;
  const double focal = 0.5 * rig.width / std::tan(0.5 * rig.fov_deg * deg);
  std::vector<Camera> cams;
  cams.reserve(static_cast<std::size_t>(rig.count_azimuth) * rig.count_elevation);
  for (int a = 0; a < rig.count_azimuth; ++a) {
    const double az = 2.0 * std::numbers::pi * a / rig.count_azimuth;
    for (int e = 0; e < rig.count_elevation; ++e) {
      const double t = (e + 0.5) / rig.count_elevation;
      const double el = (rig.min_elevation_deg + t * (rig.max_elevation_deg - rig.min_elevation_deg)) * deg;
      const Vec3 offset(std::cos(el) * std::sin(az), std::sin(el), std::cos(el) * std::cos(az));
      Camera cam;
      cam.position = rig.look_at + rig.radius * offset;
      cam.rotation = look_at_rotation(cam.position, rig.look_at);
      cam.focal = focal;
      cam.principal_point = Vec2(0.5 * rig.width, 0.5 * rig.height);
      cam.width = rig.width;
      cam.height = rig.height;
      cams.push_back(cam);
    }
  }
  return cams;
}

std::vector<Camera> generate_rig(int count_azimuth, int count_elevation, double radius, const Vec3& look_at) {
  RigSpec rig;
  rig.count_azimuth = count_azimuth;
  rig.count_elevation = count_elevation;
  rig.radius = radius;
  rig.look_at = look_at;
  return generate_rig(rig);
}

double intersect(const SceneSpec& scene, const Vec3& origin, const Vec3& direction, std::size_t* index) {
  double best = -1.0;
  for (std::size_t i = 0; i < scene.spheres.size(); ++i) {
    const Sphere& s = scene.spheres[i];
    const Vec3 oc = origin - s.center;
    const double b = oc.dot(direction);
    const double c = oc.squaredNorm() - s.radius * s.radius;
    const double disc = b * b - c;
    if (disc < 0.0) continue;
    const double root = std::sqrt(disc);
    double t = -b - root;
    if (t <= 0.0) t = -b + root;
    if (t <= 0.0) continue;
    if (best < 0.0 || t < best) {
      best = t;
      if (index) *index = i;
    }
  }
  return best;
}

GroundTruth render_ground_truth(const SceneSpec& scene, const Camera& camera) {
  scene.validate();
  camera.validate();
  if (camera.width < 8 || camera.height < 8) throw_invalid("ground-truth resolution must be at least 8x8");

  const Vec3 light = scene.light_direction.normalized();
  GroundTruth gt{Image(camera.width, camera.height, 4), Image(camera.width, camera.height, 1)};

  struct Splat {
    std::size_t sphere;
    Vec2 center;
    double sigma;
  };
  std::vector<Splat> splats;
  for (std::size_t i : scene.salient) {
    const Sphere& s = scene.spheres[i];
    const Vec3 p = camera.rotation.transpose() * (s.center - camera.position);
    const double depth = -p.z();
    if (depth <= s.radius) continue;
    const Vec2 center(camera.principal_point.x() + camera.focal * p.x() / depth,
                      camera.principal_point.y() - camera.focal * p.y() / depth);
    const double d = p.norm();
    const double radius_px = camera.focal * s.radius / std::sqrt(d * d - s.radius * s.radius);
    splats.push_back({i, center, std::max(0.5 * radius_px, 0.5)});
  }

  for (int y = 0; y < camera.height; ++y)
    for (int x = 0; x < camera.width; ++x) {
      const Vec2 px(x + 0.5, y + 0.5);
      const Vec3 dir = ray_for_pixel(camera, px).direction;
      std::size_t hit = 0;
      const double t = intersect(scene, camera.position, dir, &hit);
      if (t < 0.0) continue;
      const Sphere& s = scene.spheres[hit];
      Vec3 rgb = s.albedo;
      if (!s.emissive) {
        const Vec3 n = (camera.position + t * dir - s.center).normalized();
        rgb *= scene.ambient + (1.0 - scene.ambient) * std::max(0.0, n.dot(light));
      }
      auto p = gt.rgba.pixel(y, x);
      for (int c = 0; c < 3; ++c) p[c] = static_cast<float>(rgb[c]);
      p[3] = 1.0f;
      for (const auto& sp : splats) {
        if (sp.sphere != hit) continue;
        const double r2 = (px - sp.center).squaredNorm();
        gt.saliency.at(y, x, 0) += static_cast<float>(std::exp(-r2 / (2.0 * sp.sigma * sp.sigma)));
      }
    }

  float peak = 0.0f;
  for (float v : gt.saliency.pixels) peak = std::max(peak, v);
  if (peak > 0.0f)
    for (float& v : gt.saliency.pixels) v /= peak;
  return gt;
}

std::vector<GroundTruth> render_ground_truth(const SceneSpec& scene, const std::vector<Camera>& cameras) {
  scene.validate();
  for (const auto& cam : cameras) {
    cam.validate();
    if (cam.width < 8 || cam.height < 8) throw_invalid("ground-truth resolution must be at least 8x8");
  }
  std::vector<GroundTruth> out(cameras.size());
  const auto n = static_cast<std::ptrdiff_t>(cameras.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = render_ground_truth(scene, cameras[i]);
  return out;
}

}  // namespace clod
