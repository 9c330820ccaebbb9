//
// Copyright (C) 2026 The clod Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "clod/geometry.hpp"

#include <Eigen/LU>

#include <cmath>
#include <fstream>

#include "clod/error.hpp"
#include "json.hpp"

namespace clod {

void Camera::validate() const {
  constexpr double kTol = 1e-6;
  if ((rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff() > kTol ||
      std::abs(rotation.determinant() - 1.0) > kTol)
    throw_invalid("camera rotation must be orthonormal with determinant +1");
  if (!(focal > 0.0)) throw_invalid("camera focal length must be positive");
  if (width < 1 || height < 1) throw_invalid("camera resolution must be at least 1x1");
}

Camera Camera::resized(int new_width, int new_height) const {
  if (new_width < 1 || new_height < 1) throw_invalid("camera resolution must be at least 1x1");
  Camera out = *this;
  const double sx = static_cast<double>(new_width) / width;
  const double sy = static_cast<double>(new_height) / height;
  // Square pixels: focal follows the horizontal scale.
  out.focal = focal * sx;
  out.principal_point = Vec2(principal_point.x() * sx, principal_point.y() * sy);
  out.width = new_width;
  out.height = new_height;
  return out;
}

PluckerRay plucker(const Vec3& origin, const Vec3& direction) {
  const double norm = direction.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) throw_invalid("ray direction must be non-zero");
  PluckerRay ray;
  ray.direction = direction / norm;
  ray.moment = origin.cross(ray.direction);
  return ray;
}

PluckerRay ray_for_pixel(const Camera& camera, const Vec2& px) {
  const Vec3 local((px.x() - camera.principal_point.x()) / camera.focal,
                   -(px.y() - camera.principal_point.y()) / camera.focal, -1.0);
  return plucker(camera.position, camera.rotation * local);
}

namespace {

using nlohmann::json;

template <int N>
Eigen::Matrix<double, N, 1> vec_from(const json& j, const char* key) {
  const auto& arr = j.at(key);
  if (!arr.is_array() || arr.size() != N) throw FormatError(std::string("camera field '") + key + "' has wrong size");
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) v[i] = arr[i].get<double>();
  return v;
}

}  // namespace

std::vector<Camera> load_cameras(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError("invalid camera JSON: " + std::string(e.what()));
  }
  if (!doc.is_array()) throw FormatError("camera JSON must be an array");

  std::vector<Camera> cameras;
  cameras.reserve(doc.size());
  for (const auto& entry : doc) {
    try {
      Camera cam;
      cam.position = vec_from<3>(entry, "position");
      const auto r = vec_from<9>(entry, "rotation");
      for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) cam.rotation(i, k) = r[3 * i + k];
      cam.focal = entry.at("focal").get<double>();
      cam.principal_point = vec_from<2>(entry, "principal_point");
      const auto res = entry.at("resolution");
      cam.width = res.at(0).get<int>();
      cam.height = res.at(1).get<int>();
      cam.validate();
      cameras.push_back(cam);
    } catch (const json::exception& e) {
      throw FormatError("invalid camera entry: " + std::string(e.what()));
    }
  }
  return cameras;
}

void save_cameras(const std::filesystem::path& path, const std::vector<Camera>& cameras) {
  json doc = json::array();
  for (const auto& cam : cameras) {
    json rotation = json::array();
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) rotation.push_back(cam.rotation(i, k));
    doc.push_back({{"position", {cam.position.x(), cam.position.y(), cam.position.z()}},
                   {"rotation", rotation},
                   {"focal", cam.focal},
                   {"principal_point", {cam.principal_point.x(), cam.principal_point.y()}},
                   {"resolution", {cam.width, cam.height}}});
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

}  // namespace clod
