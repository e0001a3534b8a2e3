#pragma once

// Command-line front end. Needs CLI11 and cpp-httplib on the include path.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lumiedit/compose.hpp"
#include "lumiedit/fit.hpp"
#include "lumiedit/http.hpp"
#include "lumiedit/losses.hpp"
#include "lumiedit/png.hpp"
#include "lumiedit/refine.hpp"
#include "lumiedit/service.hpp"

namespace lumiedit::cli {

namespace fs = std::filesystem;

namespace detail {

inline Vec3d parse_vec3(const std::string& text, const std::string& field) {
  std::stringstream ss(text);
  std::string item;
  std::vector<double> v;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorKind::kMalformed, field, "expected three comma-separated numbers");
    }
  }
  if (v.size() != 3) throw Error(ErrorKind::kMalformed, field, "expected three comma-separated numbers");
  return {v[0], v[1], v[2]};
}

// Value of --set: JSON when it parses, a vector for "a,b,c", else a string.
inline json parse_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
  }
  if (std::count(text.begin(), text.end(), ',') == 2) {
    try {
      const Vec3d v = parse_vec3(text, "value");
      return json::array({v.x, v.y, v.z});
    } catch (const Error&) {
    }
  }
  return text;
}

inline json& light_by_id(json& desc, const std::string& id, const std::string& field) {
  if (!desc.contains("lights") || !desc["lights"].is_array()) desc["lights"] = json::array();
  for (auto& l : desc["lights"])
    if (l.is_object() && l.value("id", std::string()) == id) return l;
  throw Error(ErrorKind::kNotFound, field, "no light with id '" + id + "'");
}

// lights[id].a.b=value
inline void apply_set(json& desc, const std::string& expr) {
  static const std::regex pattern(R"(^lights\[([^\]]+)\]\.([A-Za-z0-9_.]+)=(.*)$)");
  std::smatch m;
  if (!std::regex_match(expr, m, pattern)) {
    throw Error(ErrorKind::kMalformed, "--set", "expected lights[id].field=value, got '" + expr + "'");
  }
  json* node = &light_by_id(desc, m[1].str(), "--set");
  std::stringstream path(m[2].str());
  std::string key;
  std::vector<std::string> keys;
  while (std::getline(path, key, '.')) keys.push_back(key);
  if (keys.front() == "id") throw Error(ErrorKind::kInvalidArgument, "--set", "ids cannot be renamed");
  for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
    if (!node->contains(keys[i]) || !(*node)[keys[i]].is_object()) {
      throw Error(ErrorKind::kNotFound, "--set", "light has no field '" + m[2].str() + "'");
    }
    node = &(*node)[keys[i]];
  }
  (*node)[keys.back()] = parse_value(m[3].str());
}

// Rewrites raster paths so the descriptor stays valid from its new folder.
inline void rebase_paths(json& desc, const fs::path& from, const fs::path& to) {
  const auto rebase = [&](json& p) {
    if (!p.is_string()) return;
    const fs::path abs = fs::absolute(from / p.get<std::string>()).lexically_normal();
    p = fs::relative(abs, fs::absolute(to)).generic_string();
  };
  if (desc.contains("rasters") && desc["rasters"].is_object())
    for (auto& [k, v] : desc["rasters"].items()) rebase(v);
  if (desc.contains("masks") && desc["masks"].is_array())
    for (auto& m : desc["masks"])
      if (m.is_object() && m.contains("path")) rebase(m["path"]);
}

inline void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_file_bytes(path, j.dump(2) + "\n");
}

inline std::string format_scalar(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace detail

struct Edits {
  std::vector<std::string> set, disable, enable, add, remove;
};

// Pure descriptor transform; the result is validated by loading it.
inline json edit_descriptor(const json& desc_in, const fs::path& scene_dir, const Edits& e) {
  json desc = desc_in;
  for (const auto& id : e.remove) {
    auto& lights = desc["lights"];
    detail::light_by_id(desc, id, "--remove");
    for (auto it = lights.begin(); it != lights.end(); ++it)
      if (it->value("id", std::string()) == id) {
        lights.erase(it);
        break;
      }
  }
  for (const auto& path : e.add) {
    json l = read_json_file(path, "--add");
    if (!desc.contains("lights")) desc["lights"] = json::array();
    desc["lights"].push_back(l);
  }
  for (const auto& expr : e.set) detail::apply_set(desc, expr);
  for (const auto& id : e.disable) detail::light_by_id(desc, id, "--disable")["enabled"] = false;
  for (const auto& id : e.enable) detail::light_by_id(desc, id, "--enable")["enabled"] = true;
  const Scene s = scene_from_json(desc, scene_dir);
  for (std::size_t i = 0; i < s.lights.size(); ++i) check_light_ranges(s.lights[i], "lights[" + std::to_string(i) + "]");
  return desc;
}

inline void write_shading_set(const Scene& scene, const ShadingSet& set, const RenderConfig& cfg, const fs::path& dir) {
  fs::create_directories(dir);
  for (std::size_t j = 0; j < set.ids.size(); ++j) {
    write_pfm(dir / ("E_" + set.ids[j] + ".pfm"), set.E_j[j]);
    write_pfm(dir / ("S_" + set.ids[j] + ".pfm"), set.S_j[j]);
  }
  write_pfm(dir / "M_S.pfm", set.M_S);
  write_pfm(dir / "E_d.pfm", set.E_d);
  write_pfm(dir / "E_ind.pfm", set.E_ind);
  write_pfm(dir / "E.pfm", set.E);
  const Raster ldr = ldr_image(set.E, scene.albedo);
  write_pfm(dir / "ldr.pfm", ldr);
  write_file_bytes(dir / "ldr.png", encode_png(ldr));
  json manifest = render_manifest(set, cfg);
  manifest.erase("timings");  // keeps the manifest byte-identical across runs
  detail::write_json(dir / "manifest.json", manifest);
  detail::write_json(dir / "timings.json", set.timings);
}

// Runs one subcommand; returns the process exit code. Failures print one
// JSON line on `err`.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Light-transport engine for single-view indoor relighting", "lumiedit"};
  app.require_subcommand(1, 1);
  app.fallthrough();  // --threads may follow the subcommand
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (falls back to LUMIEDIT_THREADS)");

  std::string scene_path, out_path, components = "direct,shadow,indirect", strategy = "mis";
  int spp = 16, iters = -1, shadow_spp = 16, gather = 32;
  std::uint64_t seed = 0;
  double tau = MeshOptions{}.tau_rel, lr = 0.0;

  const auto add_render_flags = [&](CLI::App* c) {
    c->add_option("--spp", spp, "Samples per pixel per strategy")->check(CLI::PositiveNumber);
    c->add_option("--seed", seed, "Random seed");
    c->add_option("--strategy", strategy, "Window strategy: area, angular or mis");
    c->add_option("--shadow-spp", shadow_spp, "Shadow rays per pixel")->check(CLI::PositiveNumber);
    c->add_option("--gather-samples", gather, "Indirect gather samples per pixel")->check(CLI::PositiveNumber);
    c->add_option("--tau", tau, "Relative log-depth threshold of the depth mesh")->check(CLI::PositiveNumber);
  };

  auto* render = app.add_subcommand("render", "Render all shading layers");
  render->add_option("--scene", scene_path)->required();
  render->add_option("--out", out_path, "Output directory")->required();
  render->add_option("--components", components, "Comma list of direct, shadow, indirect");
  add_render_flags(render);

  std::string light_id_opt, component = "direct";
  auto* render_component = app.add_subcommand("render-component", "Render one light's direct shading or shadow");
  render_component->add_option("--scene", scene_path)->required();
  render_component->add_option("--light", light_id_opt)->required();
  render_component->add_option("--component", component, "direct or shadow");
  render_component->add_option("--out", out_path, "Output PFM")->required();
  add_render_flags(render_component);

  std::string target_path, sun_hint;
  auto* fit = app.add_subcommand("fit-window", "Fit window radiance to a direct-shading target");
  fit->add_option("--scene", scene_path)->required();
  fit->add_option("--target", target_path)->required();
  fit->add_option("--light", light_id_opt)->required();
  fit->add_option("--sun-hint", sun_hint, "x,y,z")->required();
  fit->add_option("--out", out_path)->required();
  fit->add_option("--iters", iters);
  fit->add_option("--lr", lr);
  add_render_flags(fit);

  std::string image_path, history_path;
  bool unfreeze_sun = false, no_geometry = false;
  int shadow_refresh = 0;
  auto* refine = app.add_subcommand("refine", "Refine lights against an input image");
  refine->add_option("--scene", scene_path)->required();
  refine->add_option("--image", image_path, "Linear RGB PFM in [0, 1]");
  refine->add_option("--iters", iters);
  refine->add_option("--out", out_path, "Refined scene descriptor")->required();
  refine->add_option("--history", history_path, "CSV loss history");
  refine->add_option("--components", components);
  refine->add_option("--lr", lr);
  refine->add_option("--shadow-refresh", shadow_refresh);
  refine->add_flag("--unfreeze-sun", unfreeze_sun);
  refine->add_flag("--no-geometry", no_geometry);
  add_render_flags(refine);

  Edits edits;
  auto* edit = app.add_subcommand("edit", "Transform a scene descriptor");
  edit->add_option("--scene", scene_path)->required();
  edit->add_option("--set", edits.set, "lights[id].field=value");
  edit->add_option("--disable", edits.disable);
  edit->add_option("--enable", edits.enable);
  edit->add_option("--add", edits.add, "Light JSON file");
  edit->add_option("--remove", edits.remove);
  edit->add_option("--out", out_path)->required();

  std::string a_path, b_path, metric = "l1";
  auto* diff = app.add_subcommand("diff", "Compare two PFM rasters");
  diff->add_option("a", a_path)->required();
  diff->add_option("b", b_path)->required();
  diff->add_option("--metric", metric, "l1, l2 or sig");

  int port = 8080;
  std::string host = "127.0.0.1", static_dir;
  auto* serve = app.add_subcommand("serve", "Serve the editing API over HTTP");
  serve->add_option("--scene", scene_path)->required();
  serve->add_option("--port", port);
  serve->add_option("--host", host);
  serve->add_option("--static", static_dir, "Directory of the editor bundle");
  add_render_flags(serve);

  const auto fail = [&](const std::string& kind, const std::string& field, const std::string& message) {
    err << json{{"error", {{"kind", kind}, {"field", field}, {"message", message}}}}.dump() << "\n";
    return 1;
  };

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    return fail("usage", "", e.what());
  }

  const auto render_config = [&] {
    RenderConfig cfg;
    cfg.direct.spp = spp;
    cfg.direct.seed = seed;
    cfg.direct.strategy = parse_strategy(strategy);
    cfg.shadow_spp = shadow_spp;
    cfg.gather_samples = gather;
    cfg.mesh.tau_rel = tau;
    cfg.threads = threads;
    set_components(cfg, components);
    return cfg;
  };

  try {
    if (*render) {
      const Scene scene = load_scene(scene_path);
      const RenderConfig cfg = render_config();
      write_shading_set(scene, render_scene(scene, cfg), cfg, out_path);
    } else if (*render_component) {
      const Scene scene = load_scene(scene_path);
      const int idx = scene.find_light(light_id_opt);
      if (idx < 0) throw Error(ErrorKind::kNotFound, "--light", "no light with id '" + light_id_opt + "'");
      const RenderConfig cfg = render_config();
      const Light<double>& light = scene.lights[idx];
      if (component == "direct") {
        write_pfm(out_path, render_direct(scene, light, cfg.direct, threads));
      } else if (component == "shadow") {
        const DepthMesh mesh = build_depth_mesh(scene.camera, scene.depth, cfg.mesh);
        ShadowOptions so;
        so.spp = shadow_spp;
        so.seed = seed;
        write_pfm(out_path, shadow_raster(scene, mesh, light, so, threads));
      } else {
        throw Error(ErrorKind::kInvalidArgument, "--component", "expected direct or shadow");
      }
    } else if (*fit) {
      const Scene scene = load_scene(scene_path);
      const int idx = scene.find_light(light_id_opt);
      if (idx < 0) throw Error(ErrorKind::kNotFound, "--light", "no light with id '" + light_id_opt + "'");
      const auto* window = std::get_if<WindowLight<double>>(&scene.lights[idx]);
      if (!window) throw Error(ErrorKind::kInvalidArgument, "--light", "fit-window needs a window");
      FitConfig cfg;
      cfg.direct = render_config().direct;
      cfg.optim.seed = seed;
      if (iters >= 0) cfg.optim.max_iters = iters;
      if (lr > 0.0) cfg.optim.lr = lr;
      cfg.threads = threads;
      const FitResult r =
          fit_window(scene, read_pfm(target_path, "--target"), *window, detail::parse_vec3(sun_hint, "--sun-hint"), cfg);
      WindowLight<double> fitted = *window;
      fitted.radiance = r.radiance;
      detail::write_json(out_path, {{"light", light_to_json(fitted)},
                                    {"best_loss", r.best_loss},
                                    {"best_iteration", r.best_iteration},
                                    {"history", r.history}});
    } else if (*refine) {
      Scene scene = load_scene(scene_path);
      if (!image_path.empty()) scene.input_image = read_pfm(image_path, "--image");
      if (!scene.input_image) throw Error(ErrorKind::kMalformed, "--image", "no input image given");
      RefineConfig cfg;
      cfg.render = render_config();
      cfg.optim.spp = spp;
      cfg.optim.seed = seed;
      if (iters >= 0) cfg.optim.max_iters = iters;
      if (lr > 0.0) cfg.optim.lr = lr;
      cfg.unfreeze_sun = unfreeze_sun;
      cfg.optimize_geometry = !no_geometry;
      cfg.shadow_refresh = shadow_refresh;
      const RefineResult r = refine_lights(scene, *scene.input_image, cfg);
      scene.lights = r.lights;
      save_scene(scene, out_path);
      if (!history_path.empty()) {
        std::string csv = "iteration,loss\n";
        for (std::size_t i = 0; i < r.history.size(); ++i) csv += std::to_string(i) + "," + detail::format_scalar(r.history[i]) + "\n";
        write_file_bytes(history_path, csv);
      }
    } else if (*edit) {
      const fs::path src(scene_path);
      const fs::path dst(out_path);
      json desc = edit_descriptor(read_json_file(src), src.parent_path(), edits);
      const fs::path dst_dir = dst.parent_path().empty() ? fs::path(".") : dst.parent_path();
      fs::create_directories(dst_dir);
      detail::rebase_paths(desc, src.parent_path(), dst_dir);
      detail::write_json(dst, desc);
    } else if (*diff) {
      const Raster a = read_pfm(a_path, "a"), b = read_pfm(b_path, "b");
      double v;
      if (metric == "l1") v = loss_l1(a, b);
      else if (metric == "l2") v = loss_l2(a, b);
      else if (metric == "sig") v = sig_loss(a, b);
      else throw Error(ErrorKind::kInvalidArgument, "--metric", "expected l1, l2 or sig");
      out << detail::format_scalar(v) << "\n";
    } else if (*serve) {
      ServiceOptions opt;
      opt.default_spp = spp;
      opt.default_seed = seed;
      opt.render = render_config();
      opt.threads = threads;
      opt.save_path = scene_path;
      Service service(load_scene(scene_path), opt);
      httplib::Server server;
      if (!static_dir.empty() && !server.set_mount_point("/", static_dir)) {
        throw Error(ErrorKind::kMissingFile, "--static", "cannot serve " + static_dir);
      }
      bind_service(server, service);
      out << json{{"listening", host + ":" + std::to_string(port)}}.dump() << std::endl;
      if (!server.listen(host, port)) throw Error(ErrorKind::kInvalidArgument, "--port", "cannot listen");
    }
  } catch (const Error& e) {
    return fail(to_string(e.kind()), e.field(), e.what());
  } catch (const std::exception& e) {
    return fail("internal", "", e.what());
  }
  return 0;
}

}  // namespace lumiedit::cli
