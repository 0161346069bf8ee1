#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "geofield/common.hpp"

namespace geofield {

struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<std::uint32_t, 3>> faces;
    std::vector<double> areas;
    std::vector<Vec3> normals;

    void compute_face_data();
    double signed_volume() const;
};

struct Polygon2 {
    // outer loops counterclockwise, holes clockwise, no repeated closing vertex
    std::vector<std::vector<Vec2>> loops;

    double signed_area() const;
};

// Triangle (3D) or segment (2D, points at z = 0, c unused). normal is the unit
// outward normal, measure the area or length.
struct BoundaryElement {
    Vec3 a, b, c;
    Vec3 normal;
    double measure = 0.0;
};

enum class SolidFormat { Obj, Stl, PolyJson };

class Solid {
public:
    // Validate and normalize. Throws InvariantError naming the offending element.
    static Solid from_mesh(TriangleMesh mesh);
    static Solid from_polygon(Polygon2 poly);

    int dimension() const;
    const Aabb& bbox() const;
    const std::vector<BoundaryElement>& elements() const;
    const TriangleMesh& mesh() const;     // 3D only
    const Polygon2& polygon() const;      // 2D only
    double signed_measure() const;        // volume in 3D, area in 2D
    int euler_characteristic() const;     // 3D only, V - E + F
    int genus() const;                    // 3D only, summed over shells

    // Exact distance to the discrete boundary. 2D points use z = 0.
    double distance(const Vec3& p) const;

    Solid transformed(const Mat3& R, const Vec3& t) const;

private:
    struct Impl;
    std::shared_ptr<const Impl> impl_;
};

double unsigned_distance(const Solid& solid, const Vec3& p);
Aabb bounding_box(const Solid& solid);

SolidFormat parse_format(const std::string& name);
SolidFormat format_from_path(const std::string& path);
Solid load_solid(const std::string& path, SolidFormat format);
Solid load_solid(const std::string& path);

TriangleMesh parse_obj(std::istream& in);
TriangleMesh parse_stl(const std::string& bytes);
Polygon2 parse_poly_json(const std::string& text);

void write_obj(const TriangleMesh& mesh, std::ostream& out);
void write_stl(const TriangleMesh& mesh, std::ostream& out);
std::string write_poly_json(const Polygon2& poly);
void save_solid(const Solid& solid, const std::string& path);

// Closest point on triangle abc to p.
Vec3 closest_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);
Vec3 closest_on_segment(const Vec3& p, const Vec3& a, const Vec3& b);

}  // namespace geofield
