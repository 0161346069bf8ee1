#include <doctest.h>

#include <random>
#include <sstream>

#include "geofield/scenes.hpp"
#include "geofield/solids.hpp"
#include "test_support.hpp"

using namespace geofield;

namespace {

TriangleMesh torus(int nu, int nv, double R, double r) {
    TriangleMesh m;
    for (int i = 0; i < nu; ++i)
        for (int j = 0; j < nv; ++j) {
            double u = kTwoPi * i / nu, v = kTwoPi * j / nv;
            m.vertices.push_back(Vec3((R + r * std::cos(v)) * std::cos(u), (R + r * std::cos(v)) * std::sin(u),
                                      r * std::sin(v)));
        }
    auto id = [&](int i, int j) { return std::uint32_t(((i + nu) % nu) * nv + (j + nv) % nv); };
    for (int i = 0; i < nu; ++i)
        for (int j = 0; j < nv; ++j) {
            m.faces.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            m.faces.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    return m;
}

double brute_distance(const Solid& s, const Vec3& p) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& e : s.elements()) {
        Vec3 q = s.dimension() == 3 ? closest_on_triangle(p, e.a, e.b, e.c) : closest_on_segment(p, e.a, e.b);
        best = std::min(best, (q - p).norm());
    }
    return best;
}

}  // namespace

TEST_SUITE("solids") {
    TEST_CASE("box mesh is a valid genus-0 solid with the expected volume") {
        Solid s = Solid::from_mesh(make_box(Vec3(0, 0, 0), Vec3(2, 1, 0.5)));
        CHECK(s.dimension() == 3);
        CHECK(s.signed_measure() == doctest::Approx(1.0));
        CHECK(s.euler_characteristic() == 2);
        CHECK(s.genus() == 0);
        CHECK(s.bbox().max.x() == doctest::Approx(2.0));
        CHECK(s.elements().size() == 12);
    }

    TEST_CASE("inward-oriented mesh is flipped") {
        TriangleMesh m = make_box(Vec3(0, 0, 0), Vec3(1, 1, 1));
        for (auto& f : m.faces) std::swap(f[1], f[2]);
        Solid s = Solid::from_mesh(m);
        CHECK(s.signed_measure() == doctest::Approx(1.0));
        for (const auto& e : s.elements()) CHECK((e.normal.dot(e.a - Vec3(0.5, 0.5, 0.5))) > 0);
    }

    TEST_CASE("torus reports genus 1") {
        Solid s = Solid::from_mesh(torus(24, 12, 1.0, 0.3));
        CHECK(s.euler_characteristic() == 0);
        CHECK(s.genus() == 1);
    }

    TEST_CASE("icosphere volume approaches the ball") {
        Solid s = Solid::from_mesh(make_icosphere(3, 1.0));
        CHECK(s.mesh().faces.size() == 1280);
        CHECK(s.signed_measure() == doctest::Approx(4.0 / 3.0 * kPi).epsilon(0.02));
    }

    TEST_CASE("mesh invariant violations name the element") {
        TriangleMesh open = make_box(Vec3(0, 0, 0), Vec3(1, 1, 1));
        open.faces.pop_back();
        CHECK_THROWS_AS(Solid::from_mesh(open), InvariantError);

        TriangleMesh flipped = make_box(Vec3(0, 0, 0), Vec3(1, 1, 1));
        std::swap(flipped.faces[3][1], flipped.faces[3][2]);
        try {
            Solid::from_mesh(flipped);
            FAIL("expected InvariantError");
        } catch (const InvariantError& e) {
            CHECK(std::string(e.what()).find("orientation") != std::string::npos);
        }

        TriangleMesh degenerate = make_box(Vec3(0, 0, 0), Vec3(1, 1, 1));
        degenerate.faces[5] = {degenerate.faces[5][0], degenerate.faces[5][0], degenerate.faces[5][1]};
        CHECK_THROWS_AS(Solid::from_mesh(degenerate), InvariantError);

        TriangleMesh bad_index = make_box(Vec3(0, 0, 0), Vec3(1, 1, 1));
        bad_index.faces[2][0] = 99;
        try {
            Solid::from_mesh(bad_index);
            FAIL("expected InvariantError");
        } catch (const InvariantError& e) {
            CHECK(e.element() == 2);
        }
    }

    TEST_CASE("polygon orientation is normalized and holes are kept") {
        Polygon2 p;
        p.loops.push_back({{0, 0}, {0, 2}, {2, 2}, {2, 0}});          // clockwise outer
        p.loops.push_back({{0.5, 0.5}, {1.5, 0.5}, {1.5, 1.5}, {0.5, 1.5}});  // counterclockwise hole
        Solid s = Solid::from_polygon(p);
        CHECK(s.signed_measure() == doctest::Approx(3.0));
        CHECK(s.polygon().loops[0].size() == 4);
        double total = 0;
        for (const auto& e : s.elements()) total += e.measure;
        CHECK(total == doctest::Approx(12.0));
        for (const auto& e : s.elements()) CHECK(e.normal.z() == 0.0);
    }

    TEST_CASE("repeated closing vertex is dropped") {
        Polygon2 p = make_rectangle(0, 0, 1, 1);
        p.loops[0].push_back(p.loops[0].front());
        CHECK(Solid::from_polygon(p).polygon().loops[0].size() == 4);
    }

    TEST_CASE("polygon invariant violations") {
        Polygon2 bow;
        bow.loops.push_back({{0, 0}, {1, 1}, {1, 0}, {0, 1}});
        CHECK_THROWS_AS(Solid::from_polygon(bow), InvariantError);

        Polygon2 two;
        two.loops.push_back({{0, 0}, {1, 0}});
        CHECK_THROWS_AS(Solid::from_polygon(two), InvariantError);

        Polygon2 fold;
        fold.loops.push_back({{0, 0}, {2, 0}, {1, 0}, {1, 1}});
        CHECK_THROWS_AS(Solid::from_polygon(fold), InvariantError);

        Polygon2 crossing;
        crossing.loops.push_back({{0, 0}, {2, 0}, {2, 2}, {0, 2}});
        crossing.loops.push_back({{1, 1}, {3, 1}, {3, 1.5}, {1, 1.5}});
        CHECK_THROWS_AS(Solid::from_polygon(crossing), InvariantError);
    }

    TEST_CASE("distance matches a brute-force minimum over elements") {
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> u(-1.5, 1.5);
        Solid mesh = Solid::from_mesh(make_icosphere(2, 1.0));
        Solid poly = Solid::from_polygon(test_support::random_star(rng, 11, 1.0));
        for (int i = 0; i < 200; ++i) {
            Vec3 p(u(rng), u(rng), u(rng));
            CHECK(mesh.distance(p) == doctest::Approx(brute_distance(mesh, p)).epsilon(1e-12));
            Vec3 q(u(rng), u(rng), 0);
            CHECK(poly.distance(q) == doctest::Approx(brute_distance(poly, q)).epsilon(1e-12));
        }
    }

    TEST_CASE("closest point on a triangle covers vertex, edge and face regions") {
        Vec3 a(0, 0, 0), b(1, 0, 0), c(0, 1, 0);
        CHECK((closest_on_triangle(Vec3(-1, -1, 0), a, b, c) - a).norm() < 1e-15);
        CHECK((closest_on_triangle(Vec3(0.5, -1, 0), a, b, c) - Vec3(0.5, 0, 0)).norm() < 1e-15);
        CHECK((closest_on_triangle(Vec3(0.2, 0.2, 3), a, b, c) - Vec3(0.2, 0.2, 0)).norm() < 1e-15);
        CHECK((closest_on_triangle(Vec3(1, 1, 0), a, b, c) - Vec3(0.5, 0.5, 0)).norm() < 1e-15);
    }

    TEST_CASE("transformed solid moves its bbox and keeps its measure") {
        Solid s = Solid::from_mesh(make_l_bracket());
        Mat3 R = Eigen::AngleAxisd(0.7, Vec3(1, 2, 3).normalized()).toRotationMatrix();
        Solid t = s.transformed(R, Vec3(1, -2, 0.5));
        CHECK(t.signed_measure() == doctest::Approx(s.signed_measure()));
        Vec3 p(0.1, 0.1, 0.2);
        CHECK(t.distance(R * p + Vec3(1, -2, 0.5)) == doctest::Approx(s.distance(p)));
    }

    TEST_CASE("OBJ parsing: quads, negative indices, normals and texture refs") {
        std::istringstream in(
            "# unit square pyramid\n"
            "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nv 0.5 0.5 1\n"
            "vn 0 0 1\n"
            "f 1//1 4//1 3//1 2//1\n"
            "f 1 2 5\nf 2 3 5\nf -3 -2 -1\nf 4 1 5\n");
        TriangleMesh m = parse_obj(in);
        CHECK(m.faces.size() == 6);
        Solid s = Solid::from_mesh(m);
        CHECK(s.signed_measure() == doctest::Approx(1.0 / 3.0));
    }

    TEST_CASE("OBJ parse errors carry the element index") {
        std::istringstream in("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2\n");
        CHECK_THROWS_AS(parse_obj(in), ParseError);
        std::istringstream bad("v 0 0 x\n");
        CHECK_THROWS_AS(parse_obj(bad), ParseError);
    }

    TEST_CASE("STL round trip welds shared vertices") {
        TriangleMesh box = make_box(Vec3(0, 0, 0), Vec3(1, 2, 3));
        std::ostringstream out;
        write_stl(box, out);
        TriangleMesh back = parse_stl(out.str());
        CHECK(back.vertices.size() == 8);
        CHECK(Solid::from_mesh(back).signed_measure() == doctest::Approx(6.0));
        CHECK_THROWS_AS(parse_stl(out.str().substr(0, 100)), ParseError);
    }

    TEST_CASE("poly-json round trip") {
        Scene s = builtin_scene("peg2d-small");
        std::string text = write_poly_json(s.fixed.polygon());
        Solid back = Solid::from_polygon(parse_poly_json(text));
        CHECK(back.signed_measure() == doctest::Approx(s.fixed.signed_measure()));
        CHECK_THROWS_AS(parse_poly_json("{\"loops\": [[[0, 0], [1]]]}"), ParseError);
        CHECK_THROWS_AS(parse_poly_json("not json"), ParseError);
    }

    TEST_CASE("format names and extensions") {
        CHECK(parse_format("obj") == SolidFormat::Obj);
        CHECK(parse_format("stl") == SolidFormat::Stl);
        CHECK(parse_format("poly-json") == SolidFormat::PolyJson);
        CHECK(format_from_path("a/b/c.STL") == SolidFormat::Stl);
        CHECK_THROWS_AS(parse_format("ply"), Error);
    }

    TEST_CASE("ear clipping covers the loop area") {
        std::vector<Vec2> loop = {{0, 0}, {1, 0}, {1, 0.25}, {0.25, 0.25}, {0.25, 1}, {0, 1}};
        auto tris = triangulate(loop);
        CHECK(tris.size() == loop.size() - 2);
        double area = 0;
        for (auto& t : tris) {
            Vec2 a = loop[t[0]], b = loop[t[1]], c = loop[t[2]];
            double cr = (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x();
            CHECK(cr > 0);
            area += 0.5 * cr;
        }
        CHECK(area == doctest::Approx(0.4375));
    }
}
