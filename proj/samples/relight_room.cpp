// Loads a scene, renders it, switches the first light off, dims the rest and
// writes before/after previews:
//
//   relight_room out/room.json out/
//
// Every render uses the same seed, so the difference between the two images
// is exactly the edited lights' contribution.

#include <filesystem>
#include <iostream>

#include "lumiedit/compose.hpp"
#include "lumiedit/png.hpp"

int main(int argc, char** argv) {
  using namespace lumiedit;
  if (argc < 3) {
    std::cerr << "usage: relight_room <descriptor.json> <out_dir>\n";
    return 1;
  }
  try {
    Scene scene = load_scene(argv[1]);
    const std::filesystem::path out = argv[2];
    std::filesystem::create_directories(out);

    RenderConfig cfg;
    cfg.direct.spp = 32;
    cfg.direct.seed = 7;
    const ShadingSet before = render_scene(scene, cfg);
    write_file_bytes(out / "before.png", encode_png(ldr_image(before.E, scene.albedo)));

    if (scene.lights.empty()) throw Error(ErrorKind::kInvalidArgument, "lights", "scene has no lights");
    set_light_enabled(scene.lights.front(), false);
    for (std::size_t i = 1; i < scene.lights.size(); ++i) {
      if (auto* lamp = std::get_if<BoxLamp<double>>(&scene.lights[i])) lamp->w = lamp->w * 0.5;
    }
    const ShadingSet after = render_scene(scene, cfg);
    write_file_bytes(out / "after.png", encode_png(ldr_image(after.E, scene.albedo)));
    std::cout << render_manifest(after, cfg).dump(2) << "\n";
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 0;
}
