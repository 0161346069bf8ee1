#include "geofield/solids.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace geofield {

namespace {

// BVH over boundary elements for nearest-distance queries.
class Bvh {
public:
    struct Node {
        Aabb box;
        std::uint32_t left = 0, right = 0;  // children, valid when count == 0
        std::uint32_t first = 0, count = 0;
    };

    void build(const std::vector<BoundaryElement>& elems, int dim) {
        elems_ = &elems;
        dim_ = dim;
        order_.resize(elems.size());
        std::iota(order_.begin(), order_.end(), 0u);
        boxes_.resize(elems.size());
        centers_.resize(elems.size());
        for (std::size_t i = 0; i < elems.size(); ++i) {
            Aabb b;
            b.extend(elems[i].a);
            b.extend(elems[i].b);
            if (dim == 3) b.extend(elems[i].c);
            boxes_[i] = b;
            centers_[i] = b.center();
        }
        nodes_.clear();
        nodes_.reserve(2 * elems.size());
        if (!elems.empty()) build_node(0, static_cast<std::uint32_t>(elems.size()));
    }

    double distance(const Vec3& p) const {
        if (nodes_.empty()) return std::numeric_limits<double>::infinity();
        double best = std::numeric_limits<double>::infinity();
        std::uint32_t stack[128];
        int sp = 0;
        stack[sp++] = 0;
        while (sp > 0) {
            const Node& n = nodes_[stack[--sp]];
            if (n.box.sq_distance(p) >= best) continue;
            if (n.count > 0) {
                for (std::uint32_t k = n.first; k < n.first + n.count; ++k) {
                    const BoundaryElement& e = (*elems_)[order_[k]];
                    Vec3 q = dim_ == 3 ? closest_on_triangle(p, e.a, e.b, e.c)
                                       : closest_on_segment(p, e.a, e.b);
                    best = std::min(best, (q - p).squaredNorm());
                }
                continue;
            }
            const Node& l = nodes_[n.left];
            const Node& r = nodes_[n.right];
            double dl = l.box.sq_distance(p), dr = r.box.sq_distance(p);
            // push the farther child first so the nearer one is visited next
            if (dl < dr) {
                stack[sp++] = n.right;
                stack[sp++] = n.left;
            } else {
                stack[sp++] = n.left;
                stack[sp++] = n.right;
            }
        }
        return std::sqrt(best);
    }

private:
    std::uint32_t build_node(std::uint32_t first, std::uint32_t count) {
        std::uint32_t idx = static_cast<std::uint32_t>(nodes_.size());
        nodes_.emplace_back();
        Aabb box, cbox;
        for (std::uint32_t k = first; k < first + count; ++k) {
            box.extend(boxes_[order_[k]]);
            cbox.extend(centers_[order_[k]]);
        }
        nodes_[idx].box = box;
        if (count <= 4) {
            nodes_[idx].first = first;
            nodes_[idx].count = count;
            return idx;
        }
        Vec3 ext = cbox.extent();
        int axis = 0;
        if (ext[1] > ext[axis]) axis = 1;
        if (ext[2] > ext[axis]) axis = 2;
        std::uint32_t mid = first + count / 2;
        std::nth_element(order_.begin() + first, order_.begin() + mid, order_.begin() + first + count,
                         [&](std::uint32_t a, std::uint32_t b) {
                             return centers_[a][axis] < centers_[b][axis];
                         });
        std::uint32_t l = build_node(first, mid - first);
        std::uint32_t r = build_node(mid, first + count - mid);
        nodes_[idx].left = l;
        nodes_[idx].right = r;
        return idx;
    }

    const std::vector<BoundaryElement>* elems_ = nullptr;
    int dim_ = 3;
    std::vector<std::uint32_t> order_;
    std::vector<Aabb> boxes_;
    std::vector<Vec3> centers_;
    std::vector<Node> nodes_;
};

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

double orient(const Vec2& a, const Vec2& b, const Vec2& c) { return cross2(b - a, c - a); }

bool on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
    return std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) &&
           std::min(a.y(), b.y()) <= p.y() && p.y() <= std::max(a.y(), b.y());
}

bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
    double d1 = orient(q1, q2, p1), d2 = orient(q1, q2, p2);
    double d3 = orient(p1, p2, q1), d4 = orient(p1, p2, q2);
    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
        return true;
    if (d1 == 0 && on_segment(q1, q2, p1)) return true;
    if (d2 == 0 && on_segment(q1, q2, p2)) return true;
    if (d3 == 0 && on_segment(p1, p2, q1)) return true;
    if (d4 == 0 && on_segment(p1, p2, q2)) return true;
    return false;
}

bool point_in_loop(const Vec2& p, const std::vector<Vec2>& loop) {
    bool in = false;
    for (std::size_t i = 0, j = loop.size() - 1; i < loop.size(); j = i++) {
        const Vec2& a = loop[i];
        const Vec2& b = loop[j];
        if ((a.y() > p.y()) != (b.y() > p.y())) {
            double x = a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
            if (p.x() < x) in = !in;
        }
    }
    return in;
}

double loop_area(const std::vector<Vec2>& loop) {
    double s = 0;
    for (std::size_t i = 0; i < loop.size(); ++i) s += cross2(loop[i], loop[(i + 1) % loop.size()]);
    return 0.5 * s;
}

struct UnionFind {
    std::vector<std::uint32_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0u); }
    std::uint32_t find(std::uint32_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(std::uint32_t a, std::uint32_t b) { parent[find(a)] = find(b); }
};

}  // namespace

struct Solid::Impl {
    int dim = 3;
    TriangleMesh mesh;
    Polygon2 poly;
    Aabb box;
    std::vector<BoundaryElement> elements;
    Bvh bvh;
    double measure = 0;
    int euler = 0;
    int genus = 0;

    void finish() {
        box = Aabb{};
        if (dim == 3) {
            for (const auto& v : mesh.vertices) box.extend(v);
        } else {
            for (const auto& l : poly.loops)
                for (const auto& v : l) box.extend(Vec3(v.x(), v.y(), 0.0));
        }
        bvh.build(elements, dim);
    }
};

void TriangleMesh::compute_face_data() {
    areas.resize(faces.size());
    normals.resize(faces.size());
    for (std::size_t i = 0; i < faces.size(); ++i) {
        const auto& f = faces[i];
        Vec3 n = (vertices[f[1]] - vertices[f[0]]).cross(vertices[f[2]] - vertices[f[0]]);
        double len = n.norm();
        areas[i] = 0.5 * len;
        normals[i] = len > 0 ? Vec3(n / len) : Vec3::Zero();
    }
}

double TriangleMesh::signed_volume() const {
    double v = 0;
    for (const auto& f : faces)
        v += vertices[f[0]].dot(vertices[f[1]].cross(vertices[f[2]]));
    return v / 6.0;
}

double Polygon2::signed_area() const {
    double s = 0;
    for (const auto& l : loops) s += loop_area(l);
    return s;
}

Solid Solid::from_mesh(TriangleMesh mesh) {
    const std::size_t nv = mesh.vertices.size();
    if (mesh.faces.empty()) throw InvariantError("mesh has no faces", 0);
    for (std::size_t i = 0; i < nv; ++i)
        if (!mesh.vertices[i].allFinite()) throw InvariantError("non-finite vertex", i);
    for (std::size_t i = 0; i < mesh.faces.size(); ++i)
        for (auto v : mesh.faces[i])
            if (v >= nv) throw InvariantError("face index out of range", i);

    Aabb box;
    for (const auto& f : mesh.faces)
        for (auto v : f) box.extend(mesh.vertices[v]);
    const double diag = box.diagonal();
    mesh.compute_face_data();
    for (std::size_t i = 0; i < mesh.faces.size(); ++i)
        if (!(mesh.areas[i] > 1e-12 * diag * diag)) throw InvariantError("degenerate face", i);

    // each undirected edge must be used once in each direction
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::array<std::int64_t, 2>> edges;
    for (std::size_t i = 0; i < mesh.faces.size(); ++i) {
        const auto& f = mesh.faces[i];
        for (int k = 0; k < 3; ++k) {
            std::uint32_t a = f[k], b = f[(k + 1) % 3];
            auto key = std::minmax(a, b);
            auto it = edges.try_emplace({key.first, key.second}, std::array<std::int64_t, 2>{-1, -1}).first;
            int slot = a < b ? 0 : 1;
            if (it->second[slot] >= 0) {
                // same directed edge twice: either flipped faces or a non-manifold fan
                throw InvariantError("inconsistent face orientation or non-manifold edge", i);
            }
            it->second[slot] = static_cast<std::int64_t>(i);
        }
    }
    for (const auto& [key, uses] : edges) {
        if (uses[0] < 0 || uses[1] < 0)
            throw InvariantError("open mesh: boundary edge", static_cast<std::size_t>(std::max(uses[0], uses[1])));
    }

    double vol = mesh.signed_volume();
    if (!(std::abs(vol) > 1e-12 * diag * diag * diag)) throw InvariantError("mesh encloses no volume", 0);
    if (vol < 0) {
        for (auto& f : mesh.faces) std::swap(f[1], f[2]);
        mesh.compute_face_data();
        vol = -vol;
    }

    std::vector<char> used(nv, 0);
    UnionFind uf(nv);
    for (const auto& f : mesh.faces) {
        for (auto v : f) used[v] = 1;
        uf.unite(f[0], f[1]);
        uf.unite(f[1], f[2]);
    }
    long V = 0, shells = 0;
    for (std::size_t i = 0; i < nv; ++i) {
        if (!used[i]) continue;
        ++V;
        if (uf.find(static_cast<std::uint32_t>(i)) == i) ++shells;
    }
    const long E = static_cast<long>(edges.size());
    const long F = static_cast<long>(mesh.faces.size());
    const long chi = V - E + F;
    if (chi % 2 != 0 || chi > 2 * shells) throw InvariantError("Euler characteristic inconsistent with a closed surface", 0);

    auto impl = std::make_shared<Impl>();
    impl->dim = 3;
    impl->measure = vol;
    impl->euler = static_cast<int>(chi);
    impl->genus = static_cast<int>((2 * shells - chi) / 2);
    impl->elements.reserve(mesh.faces.size());
    for (std::size_t i = 0; i < mesh.faces.size(); ++i) {
        const auto& f = mesh.faces[i];
        impl->elements.push_back({mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]],
                                  mesh.normals[i], mesh.areas[i]});
    }
    impl->mesh = std::move(mesh);
    impl->finish();
    Solid s;
    s.impl_ = std::move(impl);
    return s;
}

Solid Solid::from_polygon(Polygon2 poly) {
    if (poly.loops.empty()) throw InvariantError("polygon has no loops", 0);
    Aabb box;
    for (auto& loop : poly.loops) {
        if (loop.size() > 1 && loop.front() == loop.back()) loop.pop_back();
        for (const auto& v : loop) box.extend(Vec3(v.x(), v.y(), 0.0));
    }
    const double diag = box.diagonal();

    struct Seg {
        Vec2 a, b;
        std::size_t loop, index, global;
    };
    std::vector<Seg> segs;
    std::size_t global = 0;
    for (std::size_t li = 0; li < poly.loops.size(); ++li) {
        const auto& loop = poly.loops[li];
        if (loop.size() < 3) throw InvariantError("loop has fewer than 3 vertices", global);
        for (std::size_t i = 0; i < loop.size(); ++i, ++global) {
            if (!loop[i].allFinite()) throw InvariantError("non-finite vertex", global);
            const Vec2& a = loop[i];
            const Vec2& b = loop[(i + 1) % loop.size()];
            if (!((b - a).norm() > 1e-12 * diag)) throw InvariantError("zero-length segment", global);
            segs.push_back({a, b, li, i, global});
        }
    }

    // sweep over x extents; adjacent segments may only share their common vertex
    std::vector<std::size_t> order(segs.size());
    std::iota(order.begin(), order.end(), 0u);
    auto minx = [&](std::size_t i) { return std::min(segs[i].a.x(), segs[i].b.x()); };
    auto maxx = [&](std::size_t i) { return std::max(segs[i].a.x(), segs[i].b.x()); };
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return minx(a) < minx(b); });
    for (std::size_t oi = 0; oi < order.size(); ++oi) {
        const Seg& s = segs[order[oi]];
        for (std::size_t oj = oi + 1; oj < order.size() && minx(order[oj]) <= maxx(order[oi]); ++oj) {
            const Seg& t = segs[order[oj]];
            bool adjacent = false;
            if (s.loop == t.loop) {
                std::size_t n = poly.loops[s.loop].size();
                adjacent = (s.index + 1) % n == t.index || (t.index + 1) % n == s.index;
            }
            if (adjacent) {
                // shared vertex is fine; collinear fold-back is not
                const Seg& first = (s.index + 1) % poly.loops[s.loop].size() == t.index ? s : t;
                const Seg& second = &first == &s ? t : s;
                Vec2 u = first.b - first.a, v = second.b - second.a;
                if (std::abs(cross2(u, v)) <= 1e-14 * u.norm() * v.norm() && u.dot(v) < 0)
                    throw InvariantError("self-intersecting loop", std::max(s.global, t.global));
                continue;
            }
            if (segments_intersect(s.a, s.b, t.a, t.b))
                throw InvariantError("self-intersecting loop", std::max(s.global, t.global));
        }
    }

    // nesting depth decides the expected orientation
    for (std::size_t li = 0; li < poly.loops.size(); ++li) {
        int depth = 0;
        for (std::size_t lj = 0; lj < poly.loops.size(); ++lj)
            if (lj != li && point_in_loop(poly.loops[li][0], poly.loops[lj])) ++depth;
        bool hole = depth % 2 == 1;
        double a = loop_area(poly.loops[li]);
        if ((hole && a > 0) || (!hole && a < 0)) std::reverse(poly.loops[li].begin(), poly.loops[li].end());
    }
    const double area = poly.signed_area();
    if (!(area > 0)) throw InvariantError("polygon encloses no area", 0);

    auto impl = std::make_shared<Impl>();
    impl->dim = 2;
    impl->measure = area;
    for (const auto& loop : poly.loops) {
        for (std::size_t i = 0; i < loop.size(); ++i) {
            Vec2 a = loop[i], b = loop[(i + 1) % loop.size()];
            Vec2 e = b - a;
            double len = e.norm();
            // right-hand normal is outward for CCW outers and CW holes
            Vec3 n(e.y() / len, -e.x() / len, 0.0);
            impl->elements.push_back({Vec3(a.x(), a.y(), 0), Vec3(b.x(), b.y(), 0), Vec3::Zero(), n, len});
        }
    }
    impl->poly = std::move(poly);
    impl->finish();
    Solid s;
    s.impl_ = std::move(impl);
    return s;
}

int Solid::dimension() const { return impl_->dim; }
const Aabb& Solid::bbox() const { return impl_->box; }
const std::vector<BoundaryElement>& Solid::elements() const { return impl_->elements; }
const TriangleMesh& Solid::mesh() const {
    if (impl_->dim != 3) throw Error("solid is not a mesh");
    return impl_->mesh;
}
const Polygon2& Solid::polygon() const {
    if (impl_->dim != 2) throw Error("solid is not a polygon");
    return impl_->poly;
}
double Solid::signed_measure() const { return impl_->measure; }
int Solid::euler_characteristic() const { return impl_->euler; }
int Solid::genus() const { return impl_->genus; }
double Solid::distance(const Vec3& p) const { return impl_->bvh.distance(p); }

Solid Solid::transformed(const Mat3& R, const Vec3& t) const {
    if (impl_->dim == 3) {
        TriangleMesh m;
        m.faces = impl_->mesh.faces;
        m.vertices.reserve(impl_->mesh.vertices.size());
        for (const auto& v : impl_->mesh.vertices) m.vertices.push_back(R * v + t);
        return from_mesh(std::move(m));
    }
    Polygon2 p;
    for (const auto& loop : impl_->poly.loops) {
        std::vector<Vec2> out;
        out.reserve(loop.size());
        for (const auto& v : loop) {
            Vec3 w = R * Vec3(v.x(), v.y(), 0.0) + t;
            out.emplace_back(w.x(), w.y());
        }
        p.loops.push_back(std::move(out));
    }
    return from_polygon(std::move(p));
}

double unsigned_distance(const Solid& solid, const Vec3& p) { return solid.distance(p); }

Aabb bounding_box(const Solid& solid) { return solid.bbox(); }

Vec3 closest_on_segment(const Vec3& p, const Vec3& a, const Vec3& b) {
    Vec3 ab = b - a;
    double t = (p - a).dot(ab) / ab.squaredNorm();
    t = std::clamp(t, 0.0, 1.0);
    return a + t * ab;
}

// Ericson, Real-Time Collision Detection, 5.1.5
Vec3 closest_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    Vec3 ab = b - a, ac = c - a, ap = p - a;
    double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0 && d2 <= 0) return a;
    Vec3 bp = p - b;
    double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0 && d4 <= d3) return b;
    double vc = d1 * d4 - d3 * d2;
    if (vc <= 0 && d1 >= 0 && d3 <= 0) return a + ab * (d1 / (d1 - d3));
    Vec3 cp = p - c;
    double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0 && d5 <= d6) return c;
    double vb = d5 * d2 - d1 * d6;
    if (vb <= 0 && d2 >= 0 && d6 <= 0) return a + ac * (d2 / (d2 - d6));
    double va = d3 * d6 - d5 * d4;
    if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0)
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    double denom = 1.0 / (va + vb + vc);
    return a + ab * (vb * denom) + ac * (vc * denom);
}

// ---- file formats ----

SolidFormat parse_format(const std::string& name) {
    if (name == "obj") return SolidFormat::Obj;
    if (name == "stl") return SolidFormat::Stl;
    if (name == "poly-json" || name == "json") return SolidFormat::PolyJson;
    throw Error("unknown solid format '" + name + "'");
}

SolidFormat format_from_path(const std::string& path) {
    auto dot = path.rfind('.');
    std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return parse_format(ext);
}

TriangleMesh parse_obj(std::istream& in) {
    TriangleMesh m;
    std::string line;
    std::size_t lineno = 0;
    std::vector<long> poly;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag) || tag[0] == '#') continue;
        if (tag == "v") {
            double x, y, z;
            if (!(ls >> x >> y >> z)) throw ParseError("malformed vertex record at line " + std::to_string(lineno), m.vertices.size());
            m.vertices.emplace_back(x, y, z);
        } else if (tag == "f") {
            poly.clear();
            std::string tok;
            while (ls >> tok) {
                // v, v/vt, v//vn, v/vt/vn
                long idx;
                try {
                    idx = std::stol(tok.substr(0, tok.find('/')));
                } catch (const std::exception&) {
                    throw ParseError("malformed face record at line " + std::to_string(lineno), m.faces.size());
                }
                if (idx < 0) idx = static_cast<long>(m.vertices.size()) + idx + 1;
                if (idx < 1) throw ParseError("invalid vertex index at line " + std::to_string(lineno), m.faces.size());
                poly.push_back(idx - 1);
            }
            if (poly.size() < 3) throw ParseError("face with fewer than 3 vertices at line " + std::to_string(lineno), m.faces.size());
            for (std::size_t k = 1; k + 1 < poly.size(); ++k)
                m.faces.push_back({static_cast<std::uint32_t>(poly[0]), static_cast<std::uint32_t>(poly[k]),
                                   static_cast<std::uint32_t>(poly[k + 1])});
        }
    }
    return m;
}

TriangleMesh parse_stl(const std::string& bytes) {
    if (bytes.size() < 84) throw ParseError("binary STL shorter than header", 0);
    std::uint32_t n;
    std::memcpy(&n, bytes.data() + 80, 4);
    if (bytes.size() != 84 + 50ull * n)
        throw ParseError("binary STL size does not match triangle count " + std::to_string(n), 0);
    TriangleMesh m;
    // weld bit-identical vertices
    std::map<std::array<float, 3>, std::uint32_t> weld;
    for (std::uint32_t i = 0; i < n; ++i) {
        const char* rec = bytes.data() + 84 + 50ull * i;
        std::array<std::uint32_t, 3> f;
        for (int k = 0; k < 3; ++k) {
            std::array<float, 3> v;
            std::memcpy(v.data(), rec + 12 + 12 * k, 12);
            if (!std::isfinite(v[0]) || !std::isfinite(v[1]) || !std::isfinite(v[2]))
                throw ParseError("non-finite STL vertex", i);
            auto [it, fresh] = weld.try_emplace(v, static_cast<std::uint32_t>(m.vertices.size()));
            if (fresh) m.vertices.emplace_back(v[0], v[1], v[2]);
            f[k] = it->second;
        }
        m.faces.push_back(f);
    }
    return m;
}

Polygon2 parse_poly_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("poly-json: ") + e.what(), 0);
    }
    if (!j.is_object() || !j.contains("loops") || !j["loops"].is_array())
        throw ParseError("poly-json: missing 'loops' array", 0);
    Polygon2 p;
    std::size_t global = 0;
    for (const auto& loop : j["loops"]) {
        if (!loop.is_array()) throw ParseError("poly-json: loop is not an array", global);
        std::vector<Vec2> pts;
        for (const auto& v : loop) {
            if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
                throw ParseError("poly-json: vertex is not [x, y]", global);
            pts.emplace_back(v[0].get<double>(), v[1].get<double>());
            ++global;
        }
        p.loops.push_back(std::move(pts));
    }
    return p;
}

void write_obj(const TriangleMesh& mesh, std::ostream& out) {
    out.precision(17);
    for (const auto& v : mesh.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
    for (const auto& f : mesh.faces) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
}

void write_stl(const TriangleMesh& mesh, std::ostream& out) {
    char header[80] = {};
    std::strncpy(header, "geofield binary stl", sizeof(header) - 1);
    out.write(header, 80);
    std::uint32_t n = static_cast<std::uint32_t>(mesh.faces.size());
    out.write(reinterpret_cast<const char*>(&n), 4);
    for (const auto& f : mesh.faces) {
        Vec3 nrm = (mesh.vertices[f[1]] - mesh.vertices[f[0]]).cross(mesh.vertices[f[2]] - mesh.vertices[f[0]]).normalized();
        float rec[12];
        for (int k = 0; k < 3; ++k) rec[k] = static_cast<float>(nrm[k]);
        for (int v = 0; v < 3; ++v)
            for (int k = 0; k < 3; ++k) rec[3 + 3 * v + k] = static_cast<float>(mesh.vertices[f[v]][k]);
        out.write(reinterpret_cast<const char*>(rec), sizeof(rec));
        std::uint16_t attr = 0;
        out.write(reinterpret_cast<const char*>(&attr), 2);
    }
}

std::string write_poly_json(const Polygon2& poly) {
    nlohmann::json loops = nlohmann::json::array();
    for (const auto& l : poly.loops) {
        nlohmann::json jl = nlohmann::json::array();
        for (const auto& v : l) jl.push_back({v.x(), v.y()});
        loops.push_back(jl);
    }
    return nlohmann::json{{"loops", loops}}.dump();
}

Solid load_solid(const std::string& path, SolidFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    switch (format) {
    case SolidFormat::Obj:
        return Solid::from_mesh(parse_obj(in));
    case SolidFormat::Stl: {
        std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        return Solid::from_mesh(parse_stl(bytes));
    }
    case SolidFormat::PolyJson: {
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        return Solid::from_polygon(parse_poly_json(text));
    }
    }
    throw Error("unknown solid format");
}

Solid load_solid(const std::string& path) { return load_solid(path, format_from_path(path)); }

void save_solid(const Solid& solid, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    if (solid.dimension() == 2) {
        out << write_poly_json(solid.polygon());
    } else if (format_from_path(path) == SolidFormat::Stl) {
        write_stl(solid.mesh(), out);
    } else {
        write_obj(solid.mesh(), out);
    }
    if (!out) throw Error("write failed for '" + path + "'");
}

}  // namespace geofield
