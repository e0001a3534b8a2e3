#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lumiedit/compose.hpp"
#include "lumiedit/png.hpp"
#include "lumiedit/refine.hpp"
#include "lumiedit/scene.hpp"

namespace lumiedit {

// Transport-neutral request and response. The HTTP adapter maps onto these,
// so every endpoint is testable without sockets.
struct Request {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::map<std::string, std::string> headers;
  std::string body;
};

struct Response {
  int status = 200;
  std::string content_type = "application/json";
  std::map<std::string, std::string> headers;
  std::string body;

  json json_body() const { return json::parse(body); }
};

struct ServiceOptions {
  int default_spp = 16;
  std::uint64_t default_seed = 0;
  std::string default_components = "direct,shadow,indirect";
  RenderConfig render;  // mesh, shadow and gather settings
  std::string cors_origin = "*";
  std::string save_path;  // default target of POST /scene/save
  int threads = 0;
};

inline constexpr const char* kManifestHeader = "X-Lumiedit-Manifest";
inline constexpr const char* kRevisionHeader = "X-Lumiedit-Revision";

namespace detail {

inline int status_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::kNotFound: return 404;
    case ErrorKind::kOutOfRange:
    case ErrorKind::kDegenerate:
    case ErrorKind::kNonFinite:
    case ErrorKind::kDisabledLight:
    case ErrorKind::kDivergence:
    case ErrorKind::kSaturated: return 422;
    default: return 400;
  }
}

inline Response json_response(int status, const json& body) {
  Response r;
  r.status = status;
  r.body = body.dump();
  return r;
}

inline Response error_response(int status, const std::string& kind, const std::string& field,
                               const std::string& message) {
  return json_response(status, {{"error", {{"kind", kind}, {"field", field}, {"message", message}}}});
}

inline Response error_response(const Error& e) {
  return error_response(status_for(e.kind()), to_string(e.kind()), e.field(), e.what());
}

inline std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start < path.size()) {
    const std::size_t end = std::min(path.find('/', start), path.size());
    if (end > start) parts.push_back(path.substr(start, end - start));
    start = end + 1;
  }
  return parts;
}

inline json parse_body(const Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kMalformed, "body", e.what());
  }
}

inline json lobe_schema(Lobe lobe) {
  return {{"type", "object"},
          {"required", {"w", "lambda", "d"}},
          {"properties",
           {{"w", {{"$ref", "#/definitions/intensity"}}},
            {"lambda", {{"type", "number"}, {"minimum", bandwidth_min(lobe)}, {"maximum", bandwidth_max(lobe)}}},
            {"d", {{"$ref", "#/definitions/vec3"}}}}}};
}

}  // namespace detail

// JSON schema of light descriptors; the server enforces the same ranges.
inline json light_schema() {
  const json vec3 = {{"type", "array"}, {"items", {{"type", "number"}}}, {"minItems", 3}, {"maxItems", 3}};
  const json intensity = {
      {"type", "array"}, {"items", {{"type", "number"}, {"minimum", 0.0}}}, {"minItems", 3}, {"maxItems", 3}};
  const json common = {{"id", {{"type", "string"}}}, {"enabled", {{"type", "boolean"}}}};
  json window = {{"type", "object"}, {"required", {"id", "type", "c", "x", "y", "radiance"}}};
  window["properties"] = common;
  window["properties"]["type"] = {{"const", "window"}};
  window["properties"]["visible"] = {{"type", "boolean"}};
  window["properties"]["mask_id"] = {{"type", "string"}};
  for (const char* k : {"c", "x", "y"}) window["properties"][k] = {{"$ref", "#/definitions/vec3"}};
  window["properties"]["radiance"] = {
      {"type", "object"},
      {"required", {"sun", "sky", "ground"}},
      {"properties",
       {{"sun", detail::lobe_schema(Lobe::kSun)},
        {"sky", detail::lobe_schema(Lobe::kSky)},
        {"ground", detail::lobe_schema(Lobe::kGround)}}}};
  json box = {{"type", "object"}, {"required", {"id", "type", "c", "x", "y", "z", "w"}}};
  box["properties"] = common;
  box["properties"]["type"] = {{"const", "box_lamp"}};
  for (const char* k : {"c", "x", "y", "z"}) box["properties"][k] = {{"$ref", "#/definitions/vec3"}};
  box["properties"]["w"] = {{"$ref", "#/definitions/intensity"}};
  json surfel = {{"type", "object"}, {"required", {"id", "type", "mask_id", "w"}}};
  surfel["properties"] = common;
  surfel["properties"]["type"] = {{"const", "surfel_lamp"}};
  surfel["properties"]["mask_id"] = {{"type", "string"}};
  surfel["properties"]["c"] = {{"$ref", "#/definitions/vec3"}};
  surfel["properties"]["w"] = {{"$ref", "#/definitions/intensity"}};
  surfel["properties"]["point_reflection"] = {{"type", "boolean"}};
  return {{"$schema", "http://json-schema.org/draft-07/schema#"},
          {"title", "lumiedit light"},
          {"definitions",
           {{"vec3", vec3}, {"intensity", intensity}, {"window", window}, {"box_lamp", box}, {"surfel_lamp", surfel}}},
          {"oneOf",
           {{{"$ref", "#/definitions/window"}},
            {{"$ref", "#/definitions/box_lamp"}},
            {{"$ref", "#/definitions/surfel_lamp"}}}},
          {"render",
           {{"components", {"direct", "shadow", "indirect"}},
            {"formats", {"png", "pfm"}},
            {"outputs", {"ldr", "E", "E_d", "E_ind"}}}}};
}

// Single-scene editing session. Mutations are serialized behind one mutex
// and bump the revision; renders work on an immutable snapshot.
class Service {
 public:
  using Sink = std::function<bool(const std::string&)>;

  explicit Service(Scene scene, ServiceOptions opt = {})
      : scene_(std::make_shared<const Scene>(std::move(scene))), opt_(std::move(opt)) {
    validate_scene(*scene_);
  }

  std::uint64_t revision() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return revision_;
  }

  std::shared_ptr<const Scene> snapshot() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return scene_;
  }

  Response handle(const Request& req) {
    std::string streamed;
    Response r = dispatch(req, [&](const std::string& chunk) {
      streamed += chunk;
      return true;
    });
    if (r.status == 200 && r.content_type == "application/x-ndjson") r.body = streamed;
    add_cors(r);
    return r;
  }

  // Like handle, but /refine progress lines go to `sink` as they happen and
  // the returned body is empty for streamed responses.
  Response handle_streaming(const Request& req, const Sink& sink) {
    Response r = dispatch(req, sink);
    add_cors(r);
    return r;
  }

  static bool is_streaming(const Request& req) { return req.method == "POST" && req.path == "/refine"; }

  // Checks a streaming request before any bytes are sent, so transport
  // errors keep their status codes. A 200 result can still fail later.
  Response preflight(const Request& req) {
    Response r = guard([&] {
      const json body = detail::parse_body(req);
      if (busy_.load()) return busy_response();
      std::lock_guard<std::mutex> lock(mutex_);
      check_expected(req, body);
      if (!scene_->input_image) {
        throw Error(ErrorKind::kMalformed, "rasters.image", "scene has no input image to refine against");
      }
      return Response{};
    });
    add_cors(r);
    return r;
  }

 private:
  struct CachedRender {
    std::uint64_t revision = 0;
    int spp = 0;
    std::uint64_t seed = 0;
    std::string components;
    ShadingSet set;
    Raster ldr;
    json manifest;
  };

  struct BusyGuard {
    std::atomic<bool>& flag;
    bool owned;
    explicit BusyGuard(std::atomic<bool>& f) : flag(f), owned(!f.exchange(true)) {}
    ~BusyGuard() {
      if (owned) flag.store(false);
    }
  };

  void add_cors(Response& r) const {
    r.headers["Access-Control-Allow-Origin"] = opt_.cors_origin;
    r.headers["Access-Control-Allow-Methods"] = "GET, POST, PUT, DELETE, OPTIONS";
    r.headers["Access-Control-Allow-Headers"] = "Content-Type, If-Match";
    r.headers["Access-Control-Expose-Headers"] = std::string(kManifestHeader) + ", " + kRevisionHeader;
  }

  template <class F>
  Response guard(F&& f) {
    try {
      return f();
    } catch (const Conflict& c) {
      return conflict(c.current);
    } catch (const Error& e) {
      return detail::error_response(e);
    } catch (const json::exception& e) {
      return detail::error_response(400, "malformed", "body", e.what());
    }
  }

  Response dispatch(const Request& req, const Sink& sink) {
    return guard([&]() -> Response {
      if (req.method == "OPTIONS") {
        Response r;
        r.status = 204;
        return r;
      }
      const auto parts = detail::split_path(req.path);
      const std::string& m = req.method;
      if (parts.size() == 1 && parts[0] == "scene" && m == "GET") return get_scene();
      if (parts.size() == 1 && parts[0] == "schema" && m == "GET") return detail::json_response(200, light_schema());
      if (parts.size() == 1 && parts[0] == "pixel" && m == "GET") return get_pixel(req);
      if (parts.size() == 1 && parts[0] == "render" && m == "POST") return post_render(req);
      if (parts.size() == 1 && parts[0] == "refine" && m == "POST") return post_refine(req, sink);
      if (parts.size() == 2 && parts[0] == "scene" && parts[1] == "save" && m == "POST") return post_save(req);
      if (parts.size() == 1 && parts[0] == "lights" && m == "POST") return post_light(req);
      if (parts.size() == 2 && parts[0] == "lights" && m == "PUT") return put_light(req, parts[1]);
      if (parts.size() == 2 && parts[0] == "lights" && m == "DELETE") return delete_light(req, parts[1]);
      if (parts.size() == 3 && parts[0] == "lights" && parts[2] == "enabled" && m == "POST") {
        return post_enabled(req, parts[1]);
      }
      return detail::error_response(404, "not_found", "path", "no route for " + m + " " + req.path);
    });
  }

  // ---- read endpoints ----------------------------------------------------

  Response get_scene() const {
    std::shared_ptr<const Scene> s;
    std::uint64_t rev;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      s = scene_;
      rev = revision_;
    }
    json masks = json::array();
    for (const auto& [id, m] : s->masks) masks.push_back(id);
    json scene = {{"camera",
                   {{"fov_deg", s->camera.fov_short_axis * 180.0 / kPi},
                    {"width", s->camera.width},
                    {"height", s->camera.height}}},
                  {"lights", lights_to_json(*s)},
                  {"masks", masks},
                  {"has_image", s->input_image.has_value()},
                  {"depth_normalized", s->depth_normalized}};
    if (s->footprint == FootprintModel::kDepthFree) scene["depth_free_footprint"] = true;
    Response r = detail::json_response(200, {{"revision", rev}, {"scene", scene}});
    r.headers[kRevisionHeader] = std::to_string(rev);
    return r;
  }

  Response get_pixel(const Request& req) {
    const auto coord = [&](const char* key) {
      auto it = req.query.find(key);
      if (it == req.query.end()) throw Error(ErrorKind::kMalformed, key, "query parameter required");
      std::size_t used = 0;
      int v = 0;
      try {
        v = std::stoi(it->second, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != it->second.size()) throw Error(ErrorKind::kMalformed, key, "expected an integer");
      return v;
    };
    const int x = coord("x"), y = coord("y");
    RenderParams p = defaults();
    if (req.query.count("spp") || req.query.count("seed") || req.query.count("components")) {
      json body = json::object();
      if (req.query.count("spp")) body["spp"] = std::stoi(req.query.at("spp"));
      if (req.query.count("seed")) body["seed"] = std::stoull(req.query.at("seed"));
      if (req.query.count("components")) body["components"] = req.query.at("components");
      p = render_params(body);
    } else if (auto last = last_settings()) {
      p = *last;
    }
    std::shared_ptr<const Snapshot> c;
    if (auto hit = cache_lookup(p)) {
      c = hit;
    } else {
      BusyGuard busy(busy_);
      if (!busy.owned) return busy_response();
      c = render_cached(p);
    }
    const Scene& s = *c->snapshot;
    if (x < 0 || x >= s.camera.width) throw Error(ErrorKind::kOutOfRange, "x", "outside the image");
    if (y < 0 || y >= s.camera.height) throw Error(ErrorKind::kOutOfRange, "y", "outside the image");
    const auto px = [&](const Raster& r) { return json::array({r.at(y, x, 0), r.at(y, x, 1), r.at(y, x, 2)}); };
    Response r = detail::json_response(200, {{"x", x},
                                             {"y", y},
                                             {"revision", c->render.revision},
                                             {"E", px(c->render.set.E)},
                                             {"E_d", px(c->render.set.E_d)},
                                             {"E_ind", px(c->render.set.E_ind)},
                                             {"ldr", px(c->render.ldr)},
                                             {"albedo", px(s.albedo)},
                                             {"depth", s.depth.at(y, x)}});
    r.headers[kRevisionHeader] = std::to_string(c->render.revision);
    return r;
  }

  // ---- rendering ---------------------------------------------------------

  struct RenderParams {
    int spp = 16;
    std::uint64_t seed = 0;
    std::string components;
  };

  struct Snapshot {
    std::shared_ptr<const Scene> snapshot;
    CachedRender render;
  };

  RenderParams defaults() const {
    RenderParams p;
    p.spp = opt_.default_spp;
    p.seed = opt_.default_seed;
    RenderConfig cfg;
    set_components(cfg, opt_.default_components);
    p.components = components_string(cfg);
    return p;
  }

  RenderParams render_params(const json& body) const {
    RenderParams p = defaults();
    if (body.contains("spp")) {
      if (!body["spp"].is_number_integer() || body["spp"].get<long long>() < 1) {
        throw Error(ErrorKind::kMalformed, "spp", "spp must be a positive integer");
      }
      p.spp = body["spp"].get<int>();
    }
    if (body.contains("seed")) {
      if (!body["seed"].is_number_unsigned()) throw Error(ErrorKind::kMalformed, "seed", "seed must be unsigned");
      p.seed = body["seed"].get<std::uint64_t>();
    }
    if (body.contains("components")) {
      const json& c = body["components"];
      std::string list;
      if (c.is_string()) {
        list = c.get<std::string>();
      } else if (c.is_array()) {
        for (const auto& item : c) {
          if (!item.is_string()) throw Error(ErrorKind::kMalformed, "components", "expected strings");
          list += (list.empty() ? "" : ",") + item.get<std::string>();
        }
      } else {
        throw Error(ErrorKind::kMalformed, "components", "expected a string or an array");
      }
      RenderConfig cfg;
      set_components(cfg, list);
      p.components = components_string(cfg);
    }
    return p;
  }

  RenderConfig config_for(const RenderParams& p) const {
    RenderConfig cfg = opt_.render;
    cfg.direct.spp = p.spp;
    cfg.direct.seed = p.seed;
    cfg.threads = opt_.threads;
    set_components(cfg, p.components);
    return cfg;
  }

  std::optional<RenderParams> last_settings() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return last_params_;
  }

  std::shared_ptr<const Snapshot> cache_lookup(const RenderParams& p) const {
    std::lock_guard<std::mutex> lock(mutex_);
    if (cache_ && cache_->render.revision == revision_ && cache_->render.spp == p.spp &&
        cache_->render.seed == p.seed && cache_->render.components == p.components) {
      return cache_;
    }
    return nullptr;
  }

  std::shared_ptr<const Snapshot> render_cached(const RenderParams& p) {
    std::shared_ptr<const Scene> s;
    std::uint64_t rev;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      s = scene_;
      rev = revision_;
    }
    const RenderConfig cfg = config_for(p);
    auto snap = std::make_shared<Snapshot>();
    snap->snapshot = s;
    snap->render.revision = rev;
    snap->render.spp = p.spp;
    snap->render.seed = p.seed;
    snap->render.components = p.components;
    snap->render.set = render_scene(*s, cfg);
    snap->render.ldr = ldr_image(snap->render.set.E, s->albedo);
    snap->render.manifest = render_manifest(snap->render.set, cfg);
    snap->render.manifest["revision"] = rev;
    std::lock_guard<std::mutex> lock(mutex_);
    last_params_ = p;
    if (revision_ == rev) cache_ = snap;
    return snap;
  }

  static Response busy_response() {
    return detail::error_response(429, "busy", "", "another render or refinement is running");
  }

  Response post_render(const Request& req) {
    const json body = detail::parse_body(req);
    const RenderParams p = render_params(body);
    const std::string format = body.value("format", std::string("png"));
    if (format != "png" && format != "pfm") throw Error(ErrorKind::kMalformed, "format", "expected png or pfm");
    const std::string output = body.value("output", std::string(format == "png" ? "ldr" : "E"));
    std::shared_ptr<const Snapshot> c = cache_lookup(p);
    if (!c) {
      BusyGuard busy(busy_);
      if (!busy.owned) return busy_response();
      c = render_cached(p);
    } else {
      std::lock_guard<std::mutex> lock(mutex_);
      last_params_ = p;
    }
    const Raster* img = nullptr;
    if (output == "ldr") img = &c->render.ldr;
    else if (output == "E") img = &c->render.set.E;
    else if (output == "E_d") img = &c->render.set.E_d;
    else if (output == "E_ind") img = &c->render.set.E_ind;
    else throw Error(ErrorKind::kMalformed, "output", "expected one of ldr, E, E_d, E_ind");
    Response r;
    if (format == "png") {
      r.content_type = "image/png";
      r.body = output == "ldr" ? encode_png(*img) : encode_png(ldr_image(*img, c->snapshot->albedo));
    } else {
      r.content_type = "application/x-pfm";
      r.body = encode_pfm(*img);
    }
    json manifest = c->render.manifest;
    manifest["format"] = format;
    manifest["output"] = output;
    r.headers[kManifestHeader] = manifest.dump();
    r.headers[kRevisionHeader] = std::to_string(c->render.revision);
    return r;
  }

  Response post_refine(const Request& req, const Sink& sink) {
    const json body = detail::parse_body(req);
    BusyGuard busy(busy_);
    if (!busy.owned) return busy_response();
    std::shared_ptr<const Scene> s;
    std::uint64_t rev;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      check_expected(req, body);
      s = scene_;
      rev = revision_;
    }
    if (!s->input_image) throw Error(ErrorKind::kMalformed, "rasters.image", "scene has no input image to refine against");
    RefineConfig cfg;
    cfg.render = config_for(render_params(body));
    cfg.optim.spp = cfg.render.direct.spp;
    cfg.optim.seed = cfg.render.direct.seed;
    if (body.contains("iters")) {
      if (!body["iters"].is_number_integer() || body["iters"].get<long long>() < 0) {
        throw Error(ErrorKind::kMalformed, "iters", "iters must be a non-negative integer");
      }
      cfg.optim.max_iters = body["iters"].get<int>();
    }
    if (body.contains("lr")) {
      if (!body["lr"].is_number()) throw Error(ErrorKind::kMalformed, "lr", "expected a number");
      cfg.optim.lr = body["lr"].get<double>();
    }
    cfg.unfreeze_sun = body.value("unfreeze_sun", false);
    cfg.optimize_geometry = body.value("optimize_geometry", true);

    Response r;
    r.content_type = "application/x-ndjson";
    bool open = true;
    const auto emit = [&](const json& line) {
      if (open) open = sink(line.dump() + "\n");
    };
    RefineResult result;
    try {
      result = refine_lights(*s, *s->input_image, cfg,
                             [&](int it, double loss) { emit({{"iteration", it}, {"loss", loss}}); });
    } catch (const Error& e) {
      // Progress may already be streamed; failures become the last line.
      const Response err = detail::error_response(e);
      emit({{"done", true}, {"status", err.status}, {"error", err.json_body()["error"]}});
      return r;
    }
    std::uint64_t new_rev;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      if (revision_ != rev) {
        emit({{"done", true},
              {"status", 409},
              {"error", {{"kind", "conflict"}, {"field", "revision"}, {"message", "scene changed during refinement"}}}});
        return r;
      }
      auto next = std::make_shared<Scene>(*scene_);
      next->lights = result.lights;
      scene_ = std::move(next);
      new_rev = ++revision_;
    }
    Scene tmp;
    tmp.lights = result.lights;
    emit({{"done", true},
          {"status", 200},
          {"revision", new_rev},
          {"initial_loss", result.initial_loss},
          {"best_loss", result.best_loss},
          {"best_iteration", result.best_iteration},
          {"history", result.history},
          {"lights", lights_to_json(tmp)}});
    r.headers[kRevisionHeader] = std::to_string(new_rev);
    return r;
  }

  // ---- mutations ---------------------------------------------------------

  // Must hold mutex_.
  void check_expected(const Request& req, const json& body) const {
    std::optional<std::uint64_t> expected;
    if (body.is_object() && body.contains("expected_revision")) {
      if (!body["expected_revision"].is_number_unsigned()) {
        throw Error(ErrorKind::kMalformed, "expected_revision", "expected an unsigned integer");
      }
      expected = body["expected_revision"].get<std::uint64_t>();
    } else if (auto it = req.query.find("expected_revision"); it != req.query.end()) {
      expected = std::stoull(it->second);
    } else if (auto h = req.headers.find("If-Match"); h != req.headers.end()) {
      expected = std::stoull(h->second);
    }
    if (expected && *expected != revision_) throw Conflict{revision_};
  }

  struct Conflict {
    std::uint64_t current;
  };

  Response conflict(std::uint64_t current) const {
    Response r = detail::json_response(409, {{"error",
                                              {{"kind", "conflict"},
                                               {"field", "expected_revision"},
                                               {"message", "stale revision"},
                                               {"current_revision", current}}}});
    r.headers[kRevisionHeader] = std::to_string(current);
    return r;
  }

  // Applies `edit` to a copy of the scene under the writer lock.
  template <class Edit>
  Response mutate(const Request& req, const json& body, int status, Edit&& edit) {
    std::lock_guard<std::mutex> lock(mutex_);
    check_expected(req, body);
    auto next = std::make_shared<Scene>(*scene_);
    json payload = edit(*next);
    scene_ = std::move(next);
    payload["revision"] = ++revision_;
    Response r = detail::json_response(status, payload);
    r.headers[kRevisionHeader] = std::to_string(revision_);
    return r;
  }

  static json light_payload(const json& body) {
    if (body.is_object() && body.contains("light")) return body["light"];
    json l = body;
    if (l.is_object()) l.erase("expected_revision");
    return l;
  }

  Response put_light(const Request& req, const std::string& id) {
    const json body = detail::parse_body(req);
    json lj = light_payload(body);
    if (!lj.is_object()) throw Error(ErrorKind::kMalformed, "body", "expected a light object");
    if (lj.contains("id") && lj["id"] != id) throw Error(ErrorKind::kMalformed, "id", "id does not match the path");
    lj["id"] = id;
    return mutate(req, body, 200, [&](Scene& s) {
      const int idx = s.find_light(id);
      if (idx < 0) throw Error(ErrorKind::kNotFound, "lights." + id, "no such light");
      Light<double> l = light_from_json(lj, s, "light");
      check_light_ranges(l, "light");
      s.lights[idx] = std::move(l);
      return json{{"light", light_to_json(s.lights[idx])}};
    });
  }

  Response post_light(const Request& req) {
    const json body = detail::parse_body(req);
    const json lj = light_payload(body);
    return mutate(req, body, 201, [&](Scene& s) {
      Light<double> l = light_from_json(lj, s, "light");
      check_light_ranges(l, "light");
      if (s.find_light(light_id(l)) >= 0) throw Error(ErrorKind::kMalformed, "light.id", "duplicate light id");
      s.lights.push_back(std::move(l));
      return json{{"light", light_to_json(s.lights.back())}};
    });
  }

  Response delete_light(const Request& req, const std::string& id) {
    const json body = detail::parse_body(req);
    return mutate(req, body, 200, [&](Scene& s) {
      const int idx = s.find_light(id);
      if (idx < 0) throw Error(ErrorKind::kNotFound, "lights." + id, "no such light");
      s.lights.erase(s.lights.begin() + idx);
      return json{{"deleted", id}};
    });
  }

  Response post_enabled(const Request& req, const std::string& id) {
    const json body = detail::parse_body(req);
    bool on;
    if (body.is_boolean()) on = body.get<bool>();
    else if (body.is_object() && body.contains("enabled") && body["enabled"].is_boolean()) on = body["enabled"].get<bool>();
    else throw Error(ErrorKind::kMalformed, "enabled", "expected true or false");
    return mutate(req, body, 200, [&](Scene& s) {
      const int idx = s.find_light(id);
      if (idx < 0) throw Error(ErrorKind::kNotFound, "lights." + id, "no such light");
      set_light_enabled(s.lights[idx], on);
      return json{{"light", light_to_json(s.lights[idx])}};
    });
  }

  Response post_save(const Request& req) const {
    const json body = detail::parse_body(req);
    std::string path = body.value("path", opt_.save_path);
    if (path.empty()) throw Error(ErrorKind::kMalformed, "path", "no save path given");
    std::shared_ptr<const Scene> s;
    std::uint64_t rev;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      s = scene_;
      rev = revision_;
    }
    save_scene(*s, path);
    return detail::json_response(200, {{"path", path}, {"revision", rev}});
  }

  mutable std::mutex mutex_;
  std::shared_ptr<const Scene> scene_;
  std::uint64_t revision_ = 0;
  std::shared_ptr<const Snapshot> cache_;
  std::optional<RenderParams> last_params_;
  std::atomic<bool> busy_{false};
  ServiceOptions opt_;
};

}  // namespace lumiedit
