#pragma once

#include <string>
#include <vector>

#include "geofield/energy.hpp"
#include "geofield/solids.hpp"

namespace geofield {

TriangleMesh make_box(const Vec3& min, const Vec3& max);
// level 3 gives 1280 faces
TriangleMesh make_icosphere(int level, double radius, const Vec3& center = Vec3::Zero());
// Prism over a simple counterclockwise loop, caps by ear clipping.
TriangleMesh make_extrusion(const std::vector<Vec2>& loop, double z0, double z1);
TriangleMesh make_l_bracket();
Polygon2 make_rectangle(double x0, double y0, double x1, double y1);
// ear-clipping triangulation of a simple CCW loop, as index triples
std::vector<std::array<std::uint32_t, 3>> triangulate(const std::vector<Vec2>& loop);

struct Scene {
    std::string id;
    std::string description;
    Solid fixed;
    Solid moving;
    std::size_t n = 0;
    double spacing = 0;
    Configuration snap;   // nominal assembled pose
    Configuration start;  // initial far-apart pose
};

std::vector<std::string> scene_ids();
Scene builtin_scene(const std::string& id);

}  // namespace geofield
