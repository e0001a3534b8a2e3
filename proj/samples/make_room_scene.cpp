// Writes a synthetic room (depth, normals, albedo, one window and one lamp)
// as a scene descriptor that the lumiedit tool can load:
//
//   make_room_scene out/room.json 96
//   lumiedit render --scene out/room.json --out out/render --spp 32
//
// The descriptor also carries an input image rendered from the same lights,
// so `lumiedit refine` has something to fit.

#include <cstdlib>
#include <iostream>

#include "lumiedit/compose.hpp"
#include "lumiedit/synthetic.hpp"

int main(int argc, char** argv) {
  using namespace lumiedit;
  if (argc < 2) {
    std::cerr << "usage: make_room_scene <descriptor.json> [size]\n";
    return 1;
  }
  const int size = argc > 2 ? std::atoi(argv[2]) : 96;
  try {
    Scene scene = synthetic::room_scene(size, size);
    scene.lights.push_back(synthetic::left_window());
    scene.lights.push_back(synthetic::ceiling_lamp());

    RenderConfig cfg;
    cfg.direct.spp = 64;
    scene.input_image = ldr_image(render_scene(scene, cfg).E, scene.albedo);
    std::cout << save_scene(scene, argv[1]).string() << "\n";
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 0;
}
