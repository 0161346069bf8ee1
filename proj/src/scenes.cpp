#include "geofield/scenes.hpp"

#include <cmath>
#include <map>

namespace geofield {

TriangleMesh make_box(const Vec3& lo, const Vec3& hi) {
    TriangleMesh m;
    for (int i = 0; i < 8; ++i)
        m.vertices.emplace_back(i & 1 ? hi.x() : lo.x(), i & 2 ? hi.y() : lo.y(), i & 4 ? hi.z() : lo.z());
    // quads listed counterclockwise seen from outside
    const int quads[6][4] = {{0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4}, {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5}};
    for (const auto& q : quads) {
        m.faces.push_back({std::uint32_t(q[0]), std::uint32_t(q[1]), std::uint32_t(q[2])});
        m.faces.push_back({std::uint32_t(q[0]), std::uint32_t(q[2]), std::uint32_t(q[3])});
    }
    m.compute_face_data();
    return m;
}

TriangleMesh make_icosphere(int level, double radius, const Vec3& center) {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> v = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                           {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    for (auto& p : v) p.normalize();
    std::vector<std::array<std::uint32_t, 3>> f = {
        {0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
        {11, 10, 2}, {10, 7, 6}, {7, 1, 8}, {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8},
        {3, 8, 9}, {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1}};
    for (int l = 0; l < level; ++l) {
        std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> mid;
        auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
            auto key = std::minmax(a, b);
            auto it = mid.find({key.first, key.second});
            if (it != mid.end()) return it->second;
            v.push_back((v[a] + v[b]).normalized());
            std::uint32_t idx = std::uint32_t(v.size() - 1);
            mid[{key.first, key.second}] = idx;
            return idx;
        };
        std::vector<std::array<std::uint32_t, 3>> nf;
        nf.reserve(f.size() * 4);
        for (const auto& tri : f) {
            std::uint32_t a = midpoint(tri[0], tri[1]), b = midpoint(tri[1], tri[2]), c = midpoint(tri[2], tri[0]);
            nf.push_back({tri[0], a, c});
            nf.push_back({tri[1], b, a});
            nf.push_back({tri[2], c, b});
            nf.push_back({a, b, c});
        }
        f.swap(nf);
    }
    TriangleMesh m;
    for (const auto& p : v) m.vertices.push_back(center + radius * p);
    m.faces = std::move(f);
    m.compute_face_data();
    return m;
}

std::vector<std::array<std::uint32_t, 3>> triangulate(const std::vector<Vec2>& loop) {
    std::vector<std::uint32_t> idx(loop.size());
    for (std::size_t i = 0; i < loop.size(); ++i) idx[i] = std::uint32_t(i);
    auto cross = [](const Vec2& a, const Vec2& b, const Vec2& c) {
        return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
    };
    std::vector<std::array<std::uint32_t, 3>> tris;
    std::size_t guard = 0;
    while (idx.size() > 3) {
        bool clipped = false;
        for (std::size_t i = 0; i < idx.size(); ++i) {
            std::uint32_t ia = idx[(i + idx.size() - 1) % idx.size()], ib = idx[i], ic = idx[(i + 1) % idx.size()];
            const Vec2 &a = loop[ia], &b = loop[ib], &c = loop[ic];
            if (cross(a, b, c) <= 0) continue;  // reflex
            bool empty = true;
            for (std::uint32_t j : idx) {
                if (j == ia || j == ib || j == ic) continue;
                const Vec2& p = loop[j];
                if (cross(a, b, p) >= 0 && cross(b, c, p) >= 0 && cross(c, a, p) >= 0) {
                    empty = false;
                    break;
                }
            }
            if (!empty) continue;
            tris.push_back({ia, ib, ic});
            idx.erase(idx.begin() + long(i));
            clipped = true;
            break;
        }
        if (!clipped || ++guard > loop.size() * loop.size()) throw Error("triangulate: loop is not simple and counterclockwise");
    }
    tris.push_back({idx[0], idx[1], idx[2]});
    return tris;
}

TriangleMesh make_extrusion(const std::vector<Vec2>& loop, double z0, double z1) {
    const std::uint32_t n = std::uint32_t(loop.size());
    TriangleMesh m;
    for (const auto& p : loop) m.vertices.emplace_back(p.x(), p.y(), z0);
    for (const auto& p : loop) m.vertices.emplace_back(p.x(), p.y(), z1);
    for (const auto& t : triangulate(loop)) {
        m.faces.push_back({t[0], t[2], t[1]});              // bottom faces -z
        m.faces.push_back({t[0] + n, t[1] + n, t[2] + n});  // top faces +z
    }
    for (std::uint32_t i = 0; i < n; ++i) {
        std::uint32_t j = (i + 1) % n;
        m.faces.push_back({i, j, j + n});
        m.faces.push_back({i, j + n, i + n});
    }
    m.compute_face_data();
    return m;
}

TriangleMesh make_l_bracket() {
    std::vector<Vec2> loop = {{0, 0}, {1, 0}, {1, 0.25}, {0.25, 0.25}, {0.25, 1}, {0, 1}};
    return make_extrusion(loop, 0.0, 0.5);
}

Polygon2 make_rectangle(double x0, double y0, double x1, double y1) {
    Polygon2 p;
    p.loops.push_back({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}});
    return p;
}

namespace {

std::vector<Vec2> slot_block_loop() {
    return {{-1, -0.5}, {1, -0.5}, {1, 0.5}, {0.25, 0.5}, {0.25, 0}, {-0.25, 0}, {-0.25, 0.5}, {-1, 0.5}};
}

Scene peg2d(const std::string& id, std::size_t n, double h) {
    Scene s;
    s.id = id;
    s.description = "2D peg (0.48 x 0.6) into a 0.5 x 0.5 slot of a 2 x 1 block";
    Polygon2 block;
    block.loops.push_back(slot_block_loop());
    s.fixed = Solid::from_polygon(block);
    s.moving = Solid::from_polygon(make_rectangle(-0.24, -0.3, 0.24, 0.3));
    s.n = n;
    s.spacing = h;
    s.snap = Configuration::planar(0.0, 0.0, 0.3);
    s.start = Configuration::planar(0.0, 0.0, 1.2);
    return s;
}

}  // namespace

std::vector<std::string> scene_ids() { return {"peg2d", "peg2d-small", "peg3d"}; }

Scene builtin_scene(const std::string& id) {
    if (id == "peg2d") return peg2d(id, 512, 1.0 / 160.0);
    if (id == "peg2d-small") return peg2d(id, 128, 1.0 / 40.0);
    if (id == "peg3d") {
        Scene s;
        s.id = id;
        s.description = "3D extruded slot block with a prismatic peg";
        s.fixed = Solid::from_mesh(make_extrusion(slot_block_loop(), -0.5, 0.5));
        s.moving = Solid::from_mesh(make_box(Vec3(-0.24, -0.3, -0.4), Vec3(0.24, 0.3, 0.4)));
        s.n = 64;
        s.spacing = 0.075;
        s.snap = Configuration::spatial(Mat3::Identity(), Vec3(0, 0.3, 0));
        s.start = Configuration::spatial(Mat3::Identity(), Vec3(0, 1.2, 0));
        return s;
    }
    throw Error("unknown scene '" + id + "'");
}

}  // namespace geofield
