#pragma once

#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lumiedit/camera.hpp"
#include "lumiedit/error.hpp"
#include "lumiedit/lights.hpp"
#include "lumiedit/pfm.hpp"
#include "lumiedit/raster.hpp"

namespace lumiedit {

using json = nlohmann::json;

struct Scene {
  CameraIntrinsics camera;
  Raster depth;      // 1 channel, meters (z-depth)
  Raster normal;     // 3 channels, unit, camera space
  Raster albedo;     // 3 channels, [0, 1]
  Raster roughness;  // 1 channel, [0, 1]
  std::map<std::string, Raster> masks;  // keyed by light id
  std::vector<Light<double>> lights;
  std::optional<Raster> input_image;  // linear RGB [0, 1]
  bool depth_normalized = false;
  FootprintModel footprint = FootprintModel::kParaxial;

  const Raster* mask(const std::string& id) const {
    auto it = masks.find(id);
    return it == masks.end() ? nullptr : &it->second;
  }

  Vec3d position(int row, int col) const { return camera.unproject(row, col, depth.at(row, col)); }
  Vec3d normal_at(int row, int col) const { return normal.rgb(row, col); }

  int find_light(const std::string& id) const {
    for (std::size_t i = 0; i < lights.size(); ++i)
      if (light_id(lights[i]) == id) return static_cast<int>(i);
    return -1;
  }
};

inline constexpr double kDepthMean = 3.0;

// Scales depth by a single factor so that its arithmetic mean is 3.
inline Raster normalize_depth(const Raster& depth) {
  if (depth.channels() != 1) throw Error(ErrorKind::kInvalidArgument, "depth", "depth must have one channel");
  double sum = 0.0;
  for (float v : depth.data()) {
    if (!(v > 0.0f) || !std::isfinite(v)) {
      throw Error(ErrorKind::kOutOfRange, "depth", "depth must be finite and strictly positive");
    }
    sum += v;
  }
  const double mean = sum / static_cast<double>(depth.size());
  if (mean == kDepthMean) return depth;
  const double scale = kDepthMean / mean;
  Raster out = depth;
  for (float& v : out.data()) v = static_cast<float>(v * scale);
  return out;
}

inline void validate_scene(const Scene& s) {
  s.camera.validate();
  const auto check = [&](const Raster& r, int channels, const std::string& name) {
    if (r.empty()) throw Error(ErrorKind::kMalformed, name, "raster missing");
    if (r.width() != s.camera.width || r.height() != s.camera.height) {
      throw Error(ErrorKind::kDimensionMismatch, name,
                  std::to_string(r.width()) + "x" + std::to_string(r.height()) + " does not match camera " +
                      std::to_string(s.camera.width) + "x" + std::to_string(s.camera.height));
    }
    if (r.channels() != channels) {
      throw Error(ErrorKind::kDimensionMismatch, name, "expected " + std::to_string(channels) + " channels");
    }
    if (!r.all_finite()) throw Error(ErrorKind::kNonFinite, name, "raster contains NaN or Inf");
  };
  check(s.depth, 1, "rasters.depth");
  check(s.normal, 3, "rasters.normal");
  check(s.albedo, 3, "rasters.albedo");
  check(s.roughness, 1, "rasters.roughness");
  if (s.input_image) check(*s.input_image, 3, "rasters.image");
  for (const auto& [id, m] : s.masks) check(m, 1, "masks." + id);
  for (float v : s.depth.data())
    if (!(v > 0.0f)) throw Error(ErrorKind::kOutOfRange, "rasters.depth", "depth must be > 0 everywhere");
  for (int r = 0; r < s.camera.height; ++r)
    for (int c = 0; c < s.camera.width; ++c) {
      if (std::abs(length(s.normal_at(r, c)) - 1.0) > 1e-4) {
        throw Error(ErrorKind::kOutOfRange, "rasters.normal",
                    "normal at (" + std::to_string(r) + "," + std::to_string(c) + ") is not unit length");
      }
    }
  for (float v : s.albedo.data())
    if (v < 0.0f || v > 1.0f) throw Error(ErrorKind::kOutOfRange, "rasters.albedo", "albedo must lie in [0, 1]");
  for (float v : s.roughness.data())
    if (v < 0.0f || v > 1.0f) {
      throw Error(ErrorKind::kOutOfRange, "rasters.roughness", "roughness must lie in [0, 1]");
    }
}

// ---------------------------------------------------------------------------
// JSON light schema
// ---------------------------------------------------------------------------

namespace detail {

inline Vec3d vec_from_json(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorKind::kMalformed, field, "expected a 3-element array");
  Vec3d v;
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_number()) throw Error(ErrorKind::kMalformed, field, "expected numbers");
    v[i] = j[i].get<double>();
  }
  if (!all_finite(v)) throw Error(ErrorKind::kNonFinite, field, "non-finite value");
  return v;
}

inline json vec_to_json(const Vec3d& v) { return json::array({v.x, v.y, v.z}); }

inline const json& require(const json& j, const char* key, const std::string& field) {
  if (!j.is_object() || !j.contains(key)) {
    throw Error(ErrorKind::kMalformed, field.empty() ? key : field + "." + key, "required field missing");
  }
  return j.at(key);
}

inline bool get_bool(const json& j, const char* key, bool fallback, const std::string& field) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) throw Error(ErrorKind::kMalformed, field + "." + key, "expected a boolean");
  return j.at(key).get<bool>();
}

inline double get_number(const json& j, const char* key, const std::string& field) {
  const json& v = require(j, key, field);
  if (!v.is_number()) throw Error(ErrorKind::kMalformed, field + "." + key, "expected a number");
  return v.get<double>();
}

}  // namespace detail

inline SphericalGaussian<double> lobe_from_json(const json& j, const std::string& field) {
  SphericalGaussian<double> g;
  g.w = detail::vec_from_json(detail::require(j, "w", field), field + ".w");
  g.lambda = detail::get_number(j, "lambda", field);
  g.d = detail::vec_from_json(detail::require(j, "d", field), field + ".d");
  if (g.w.x < 0 || g.w.y < 0 || g.w.z < 0) throw Error(ErrorKind::kOutOfRange, field + ".w", "intensity must be >= 0");
  if (!(g.lambda >= 0.0) || !std::isfinite(g.lambda)) {
    throw Error(ErrorKind::kOutOfRange, field + ".lambda", "bandwidth must be finite and >= 0");
  }
  const double n = length(g.d);
  if (!(n > 0.0)) throw Error(ErrorKind::kOutOfRange, field + ".d", "direction must be non-zero");
  // Already-unit directions are kept verbatim so save/load is bit-exact.
  if (std::abs(n - 1.0) > 1e-12) g.d = g.d / n;
  return g;
}

inline json lobe_to_json(const SphericalGaussian<double>& g) {
  return {{"w", detail::vec_to_json(g.w)}, {"lambda", g.lambda}, {"d", detail::vec_to_json(g.d)}};
}

inline void check_intensity(const Vec3d& w, const std::string& field) {
  if (w.x < 0 || w.y < 0 || w.z < 0) throw Error(ErrorKind::kOutOfRange, field, "intensity must be >= 0");
}

// Parses one light. Visible lamps need the scene rasters and their mask.
inline Light<double> light_from_json(const json& j, const Scene& scene, const std::string& field) {
  if (!j.is_object()) throw Error(ErrorKind::kMalformed, field, "expected an object");
  const json& idj = detail::require(j, "id", field);
  if (!idj.is_string()) throw Error(ErrorKind::kMalformed, field + ".id", "expected a string");
  const std::string id = idj.get<std::string>();
  const json& typej = detail::require(j, "type", field);
  if (!typej.is_string()) throw Error(ErrorKind::kMalformed, field + ".type", "expected a string");
  const std::string type = typej.get<std::string>();
  const bool enabled = detail::get_bool(j, "enabled", true, field);
  const std::string mask_id = j.contains("mask_id") && j["mask_id"].is_string() ? j["mask_id"].get<std::string>() : "";

  if (type == "window") {
    WindowLight<double> w;
    w.id = id;
    w.enabled = enabled;
    w.visible = detail::get_bool(j, "visible", false, field);
    w.mask_id = mask_id;
    w.c = detail::vec_from_json(detail::require(j, "c", field), field + ".c");
    w.x = detail::vec_from_json(detail::require(j, "x", field), field + ".x");
    w.y = detail::vec_from_json(detail::require(j, "y", field), field + ".y");
    if (!(length(w.x) > 0.0) || !(length(w.y) > 0.0)) {
      throw Error(ErrorKind::kOutOfRange, field + ".x", "window axes must have positive length");
    }
    if (std::abs(dot(normalize(w.x), normalize(w.y))) > 1e-4) {
      throw Error(ErrorKind::kOutOfRange, field + ".y", "window axes must be orthogonal");
    }
    const json& rad = detail::require(j, "radiance", field);
    w.radiance.sun = lobe_from_json(detail::require(rad, "sun", field + ".radiance"), field + ".radiance.sun");
    w.radiance.sky = lobe_from_json(detail::require(rad, "sky", field + ".radiance"), field + ".radiance.sky");
    w.radiance.ground =
        lobe_from_json(detail::require(rad, "ground", field + ".radiance"), field + ".radiance.ground");
    if (!(w.radiance.sun.lambda > 0.0)) {
      throw Error(ErrorKind::kOutOfRange, field + ".radiance.sun.lambda", "sun bandwidth must be > 0");
    }
    return w;
  }
  if (type == "box_lamp") {
    BoxLamp<double> b;
    b.id = id;
    b.enabled = enabled;
    b.c = detail::vec_from_json(detail::require(j, "c", field), field + ".c");
    b.x = detail::vec_from_json(detail::require(j, "x", field), field + ".x");
    b.y = detail::vec_from_json(detail::require(j, "y", field), field + ".y");
    b.z = detail::vec_from_json(detail::require(j, "z", field), field + ".z");
    b.w = detail::vec_from_json(detail::require(j, "w", field), field + ".w");
    check_intensity(b.w, field + ".w");
    const Vec3d axes[3] = {b.x, b.y, b.z};
    for (int i = 0; i < 3; ++i) {
      if (!(length(axes[i]) > 0.0)) throw Error(ErrorKind::kOutOfRange, field, "box axes must have positive length");
      for (int k = i + 1; k < 3; ++k)
        if (std::abs(dot(normalize(axes[i]), normalize(axes[k]))) > 1e-4) {
          throw Error(ErrorKind::kOutOfRange, field, "box axes must be pairwise orthogonal");
        }
    }
    return b;
  }
  if (type == "surfel_lamp") {
    if (mask_id.empty()) throw Error(ErrorKind::kMalformed, field + ".mask_id", "visible lamps need a mask");
    const Raster* mask = scene.mask(mask_id);
    if (!mask) throw Error(ErrorKind::kNotFound, field + ".mask_id", "no mask named '" + mask_id + "'");
    Vec3d c = j.contains("c") ? detail::vec_from_json(j["c"], field + ".c")
                              : initial_center(scene.camera, scene.depth, *mask, CenterKind::kLamp).c;
    LampBuildOptions opt;
    opt.footprint = scene.footprint;
    opt.point_reflection = detail::get_bool(j, "point_reflection", false, field);
    SurfelLamp<double> lamp = build_visible_lamp(scene.camera, scene.depth, scene.normal, *mask, c, opt);
    lamp.id = id;
    lamp.mask_id = mask_id;
    lamp.enabled = enabled;
    lamp.w = detail::vec_from_json(detail::require(j, "w", field), field + ".w");
    check_intensity(lamp.w, field + ".w");
    return lamp;
  }
  throw Error(ErrorKind::kMalformed, field + ".type", "unknown light type '" + type + "'");
}

// Editing-time limits: bandwidths inside the per-lobe clamp ranges.
inline void check_light_ranges(const Light<double>& light, const std::string& field) {
  const auto* w = std::get_if<WindowLight<double>>(&light);
  if (!w) return;
  for (int k = 0; k < 3; ++k) {
    const Lobe lobe = static_cast<Lobe>(k);
    const double lambda = w->radiance.lobe(k).lambda;
    if (lambda < bandwidth_min(lobe) || lambda > bandwidth_max(lobe)) {
      throw Error(ErrorKind::kOutOfRange, field + ".radiance." + lobe_name(k) + ".lambda",
                  "bandwidth outside [" + std::to_string(bandwidth_min(lobe)) + ", " +
                      std::to_string(bandwidth_max(lobe)) + "]");
    }
  }
}

inline json light_to_json(const Light<double>& light) {
  json j;
  j["id"] = light_id(light);
  j["type"] = light_type_name(light);
  j["enabled"] = light_enabled(light);
  j["visible"] = light_visible(light);
  if (const auto* w = std::get_if<WindowLight<double>>(&light)) {
    j["c"] = detail::vec_to_json(w->c);
    j["x"] = detail::vec_to_json(w->x);
    j["y"] = detail::vec_to_json(w->y);
    j["radiance"] = {{"sun", lobe_to_json(w->radiance.sun)},
                     {"sky", lobe_to_json(w->radiance.sky)},
                     {"ground", lobe_to_json(w->radiance.ground)}};
    if (!w->mask_id.empty()) j["mask_id"] = w->mask_id;
  } else if (const auto* b = std::get_if<BoxLamp<double>>(&light)) {
    j["c"] = detail::vec_to_json(b->c);
    j["x"] = detail::vec_to_json(b->x);
    j["y"] = detail::vec_to_json(b->y);
    j["z"] = detail::vec_to_json(b->z);
    j["w"] = detail::vec_to_json(b->w);
  } else {
    const auto& s = std::get<SurfelLamp<double>>(light);
    j["c"] = detail::vec_to_json(s.center());
    j["w"] = detail::vec_to_json(s.w);
    j["mask_id"] = s.mask_id;
    if (s.geometry->point_reflection) j["point_reflection"] = true;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Scene descriptor IO
// ---------------------------------------------------------------------------

inline Scene scene_from_json(const json& desc, const std::filesystem::path& base_dir) {
  if (!desc.is_object()) throw Error(ErrorKind::kMalformed, "", "scene descriptor must be a JSON object");
  Scene s;
  const json& cam = detail::require(desc, "camera", "");
  s.camera.fov_short_axis = detail::get_number(cam, "fov_deg", "camera") * kPi / 180.0;
  s.camera.width = static_cast<int>(detail::get_number(cam, "width", "camera"));
  s.camera.height = static_cast<int>(detail::get_number(cam, "height", "camera"));
  s.camera.validate();
  if (detail::get_bool(desc, "depth_free_footprint", false, "")) s.footprint = FootprintModel::kDepthFree;

  const json& rasters = detail::require(desc, "rasters", "");
  const auto load = [&](const char* key, bool required) -> std::optional<Raster> {
    const std::string field = std::string("rasters.") + key;
    if (!rasters.contains(key) || rasters[key].is_null()) {
      if (required) throw Error(ErrorKind::kMalformed, field, "required raster missing");
      return std::nullopt;
    }
    if (!rasters[key].is_string()) throw Error(ErrorKind::kMalformed, field, "expected a file path");
    return read_pfm(base_dir / rasters[key].get<std::string>(), field);
  };
  s.depth = *load("depth", true);
  s.normal = *load("normal", true);
  s.albedo = *load("albedo", true);
  auto rough = load("roughness", false);
  s.roughness = rough ? *rough : Raster(s.camera.width, s.camera.height, 1, 1.0f);
  s.input_image = load("image", false);

  if (desc.contains("masks")) {
    const json& masks = desc["masks"];
    if (!masks.is_array()) throw Error(ErrorKind::kMalformed, "masks", "expected an array");
    for (std::size_t i = 0; i < masks.size(); ++i) {
      const std::string field = "masks[" + std::to_string(i) + "]";
      const json& m = masks[i];
      const json& idj = detail::require(m, "light_id", field);
      const json& pathj = detail::require(m, "path", field);
      if (!idj.is_string() || !pathj.is_string()) throw Error(ErrorKind::kMalformed, field, "expected strings");
      s.masks[idj.get<std::string>()] = read_pfm(base_dir / pathj.get<std::string>(), field + ".path");
    }
  }
  validate_scene(s);
  if (detail::get_bool(desc, "normalize_depth", false, "")) {
    s.depth = normalize_depth(s.depth);
    s.depth_normalized = true;
  }

  if (desc.contains("lights")) {
    const json& lights = desc["lights"];
    if (!lights.is_array()) throw Error(ErrorKind::kMalformed, "lights", "expected an array");
    for (std::size_t i = 0; i < lights.size(); ++i) {
      const std::string field = "lights[" + std::to_string(i) + "]";
      Light<double> l = light_from_json(lights[i], s, field);
      if (s.find_light(light_id(l)) >= 0) throw Error(ErrorKind::kMalformed, field + ".id", "duplicate light id");
      s.lights.push_back(std::move(l));
    }
  }
  return s;
}

inline json read_json_file(const std::filesystem::path& path, const std::string& field = "") {
  const std::string text = read_file_bytes(path, field.empty() ? path.string() : field);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kMalformed, field.empty() ? path.string() : field, e.what());
  }
}

inline Scene load_scene(const std::filesystem::path& path) {
  return scene_from_json(read_json_file(path), path.parent_path());
}

inline json lights_to_json(const Scene& s) {
  json arr = json::array();
  for (const auto& l : s.lights) arr.push_back(light_to_json(l));
  return arr;
}

// Writes <dir>/<stem>.json plus PFM rasters beside it. Depth is written as
// stored (already normalized), so the descriptor never re-normalizes.
inline std::filesystem::path save_scene(const Scene& s, const std::filesystem::path& descriptor_path) {
  namespace fs = std::filesystem;
  const fs::path dir = descriptor_path.parent_path().empty() ? fs::path(".") : descriptor_path.parent_path();
  fs::create_directories(dir);
  const std::string stem = descriptor_path.stem().string();
  json desc;
  desc["camera"] = {{"fov_deg", s.camera.fov_short_axis * 180.0 / kPi},
                    {"width", s.camera.width},
                    {"height", s.camera.height}};
  json rasters;
  const auto put = [&](const char* key, const Raster& r) {
    const std::string name = stem + "_" + key + ".pfm";
    write_pfm(dir / name, r);
    rasters[key] = name;
  };
  put("depth", s.depth);
  put("normal", s.normal);
  put("albedo", s.albedo);
  put("roughness", s.roughness);
  if (s.input_image) put("image", *s.input_image);
  desc["rasters"] = rasters;
  json masks = json::array();
  for (const auto& [id, m] : s.masks) {
    const std::string name = stem + "_mask_" + id + ".pfm";
    write_pfm(dir / name, m);
    masks.push_back({{"light_id", id}, {"path", name}});
  }
  desc["masks"] = masks;
  desc["lights"] = lights_to_json(s);
  desc["normalize_depth"] = false;
  if (s.footprint == FootprintModel::kDepthFree) desc["depth_free_footprint"] = true;
  write_file_bytes(descriptor_path, desc.dump(2) + "\n");
  return descriptor_path;
}

}  // namespace lumiedit
