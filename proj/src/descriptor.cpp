#include "geofield/descriptor.hpp"

#include <algorithm>
#include <cmath>

#include "geofield/parallel.hpp"

namespace geofield {

namespace {

double norm_const(int dim) { return dim == 3 ? 1.0 / (4.0 * kPi) : 1.0 / kTwoPi; }

struct Traversal {
    bool exhausted = false;
    double worst = 0;
    std::uint64_t samples = 0;
};

// Apparent size of a bounding sphere (radius^2 r2, centre at squared distance d2):
// cap solid angle in 3D, planar angle in 2D. Forces a split when p is inside it.
inline double subtended(int dim, double r2, double d2) {
    if (d2 <= r2) return dim == 3 ? 4.0 * kPi : kTwoPi;
    double x = r2 / d2;
    if (dim == 3) return kTwoPi * x / (1.0 + std::sqrt(1.0 - x));
    return 2.0 * std::asin(std::sqrt(x));
}

// Adaptive midpoint quadrature over the boundary. leaf(centroid, normal, measure)
// is called once per accepted sub-element in a fixed order.
template <class Leaf>
Traversal traverse(const Solid& solid, const Vec3& p, const IntegrationPolicy& pol, Leaf&& leaf) {
    Traversal tr;
    const double thr = pol.max_solid_angle;
    const int max_depth = pol.max_recursion_depth;
    const int dim = solid.dimension();
    struct Item {
        Vec3 a, b, c;
        int depth;
    };
    thread_local std::vector<Item> stack;
    for (const auto& e : solid.elements()) {
        stack.clear();
        stack.push_back({e.a, e.b, e.c, 0});
        while (!stack.empty()) {
            Item it = stack.back();
            stack.pop_back();
            Vec3 c;
            double r2;
            if (dim == 3) {
                c = (it.a + it.b + it.c) / 3.0;
                r2 = std::max({(it.a - c).squaredNorm(), (it.b - c).squaredNorm(), (it.c - c).squaredNorm()});
            } else {
                c = 0.5 * (it.a + it.b);
                r2 = (it.a - c).squaredNorm();
            }
            double m = subtended(dim, r2, (c - p).squaredNorm());
            if (m <= thr || it.depth >= max_depth) {
                if (m > thr) {
                    tr.exhausted = true;
                    tr.worst = std::max(tr.worst, m);
                }
                double scale = dim == 3 ? std::ldexp(1.0, -2 * it.depth) : std::ldexp(1.0, -it.depth);
                leaf(c, e.normal, e.measure * scale);
                ++tr.samples;
                continue;
            }
            int d = it.depth + 1;
            if (dim == 3) {
                Vec3 ab = 0.5 * (it.a + it.b), bc = 0.5 * (it.b + it.c), ca = 0.5 * (it.c + it.a);
                stack.push_back({ab, bc, ca, d});
                stack.push_back({ca, bc, it.c, d});
                stack.push_back({ab, it.b, bc, d});
                stack.push_back({it.a, ab, ca, d});
            } else {
                Vec3 mid = 0.5 * (it.a + it.b);
                stack.push_back({mid, it.b, Vec3::Zero(), d});
                stack.push_back({it.a, mid, Vec3::Zero(), d});
            }
        }
    }
    return tr;
}

struct Sums {
    double winding = 0;  // sum of dA_perp / eta^(d-1)
    double ann = 0;      // sum of g * dA_perp / eta^(d-1)
    cplx zin = 0, zout = 0;
};

struct NodeResult {
    cplx value;
    double winding = 0;
    Traversal tr;
};

NodeResult eval_node(const Solid& solid, const Vec3& p, double dist, const KernelSpec& spec,
                     const IntegrationPolicy& pol) {
    const int dim = solid.dimension();
    const bool skel = spec.family == KernelFamily::SkeletalDensity;
    const bool zeta = skel && spec.structure == KernelStructure::ZetaSquared;
    const double inv_dist = 1.0 / dist;
    const double sig = spec.sigma;
    Sums s;
    Traversal tr = traverse(solid, p, pol, [&](const Vec3& c, const Vec3& n, double area) {
        Vec3 r = c - p;
        double eta2 = r.squaredNorm();
        if (!(eta2 > 0)) return;
        double eta = std::sqrt(eta2);
        double dperp = n.dot(r) / eta * area;
        double w = dim == 3 ? dperp / eta2 : dperp / eta;
        s.winding += w;
        if (!skel) return;
        double g = gaussian(eta * inv_dist - 1.0, sig);
        if (!zeta) {
            s.ann += g * w;
            return;
        }
        cplx zi(-dist, eta), zo(dist, eta);
        double mag = dim == 3 ? 1.0 : std::sqrt(dist * dist + eta2);
        s.zin += g * mag * dperp / (zi * zi);
        s.zout += g * mag * dperp / (zo * zo);
    });
    NodeResult out;
    out.tr = tr;
    const double c = norm_const(dim);
    out.winding = c * s.winding;
    const bool inside = out.winding >= 0.5;
    if (!skel) {
        out.value = out.winding;
    } else if (!zeta) {
        out.value = cplx(0.0, c * (inside ? spec.lambda_in : spec.lambda_out) * s.ann);
    } else {
        out.value = inside ? c * spec.lambda_in * s.zin : -c * spec.lambda_out * s.zout;
    }
    return out;
}

std::size_t neighbor(const SampleGrid& g, std::size_t idx, int axis, int dir, bool& ok) {
    auto c = g.unravel(idx);
    long v = static_cast<long>(c[axis]) + dir;
    ok = v >= 0 && v < static_cast<long>(g.dims[axis]);
    if (!ok) return 0;
    c[axis] = static_cast<std::size_t>(v);
    return g.index(c[0], c[1], c[2]);
}

// Replace excluded nodes by the mean of their non-excluded face neighbours,
// sweeping inward until every excluded node has a value.
void fill_excluded(ComplexField& f, const std::vector<std::uint64_t>& excluded) {
    std::vector<char> pending(f.values.size(), 0);
    for (auto i : excluded) pending[i] = 1;
    std::vector<std::uint64_t> todo(excluded.begin(), excluded.end());
    std::vector<std::pair<std::uint64_t, cplx>> updates;
    while (!todo.empty()) {
        updates.clear();
        std::vector<std::uint64_t> rest;
        for (auto idx : todo) {
            cplx sum = 0;
            int cnt = 0;
            for (int a = 0; a < f.grid.dim; ++a) {
                for (int dir : {-1, 1}) {
                    bool ok;
                    std::size_t nb = neighbor(f.grid, idx, a, dir, ok);
                    if (ok && !pending[nb]) {
                        sum += f.values[nb];
                        ++cnt;
                    }
                }
            }
            if (cnt > 0)
                updates.emplace_back(idx, sum / double(cnt));
            else
                rest.push_back(idx);
        }
        if (updates.empty()) {
            for (auto idx : rest) f.values[idx] = 0;
            break;
        }
        for (auto& [idx, v] : updates) {
            f.values[idx] = v;
            pending[idx] = 0;
        }
        todo.swap(rest);
    }
}

}  // namespace

KernelSpec KernelSpec::skeletal(double sigma, double penalty, KernelStructure s) {
    KernelSpec k;
    k.family = KernelFamily::SkeletalDensity;
    k.structure = s;
    k.sigma = sigma;
    k.lambda_in = penalty;
    k.lambda_out = 1.0;
    k.validate();
    return k;
}

KernelSpec KernelSpec::winding() {
    KernelSpec k;
    k.family = KernelFamily::InverseSquare;
    k.lambda_in = 1.0;
    k.lambda_out = 1.0;
    return k;
}

void KernelSpec::validate() const {
    if (!(sigma > 0) || !std::isfinite(sigma)) throw Error("kernel sigma must be positive");
    if (!(lambda_in > 0) || !std::isfinite(lambda_in)) throw Error("kernel lambda_in must be positive");
    if (!(lambda_out > 0) || !std::isfinite(lambda_out)) throw Error("kernel lambda_out must be positive");
}

void IntegrationPolicy::validate() const {
    if (!(max_solid_angle > 0) || max_solid_angle > 4 * kPi) throw Error("max_solid_angle must be in (0, 4pi]");
    if (max_recursion_depth < 1 || max_recursion_depth > 24) throw Error("max_recursion_depth must be in [1, 24]");
    if (!(eta_floor > 0)) throw Error("eta_floor must be positive");
}

double gaussian(double x, double sigma) {
    double u = x / sigma;
    return std::exp(-0.5 * u * u) / (std::sqrt(kTwoPi) * sigma);
}

cplx kernel_eval(const KernelSpec& spec, const BoundaryProjection& proj, bool inside, int dim) {
    const double c = norm_const(dim);
    const double eta = std::max(proj.eta, std::numeric_limits<double>::min());
    const double flux = dim == 3 ? 1.0 / (eta * eta) : 1.0 / eta;
    if (spec.family == KernelFamily::InverseSquare) return c * flux;
    const double axi = std::abs(proj.xi);
    const double lambda = inside ? spec.lambda_in : -spec.lambda_out;
    const double g = gaussian(eta / axi - 1.0, spec.sigma);
    if (spec.structure == KernelStructure::AnnPhase) {
        double sgn = proj.xi > 0 ? 1.0 : proj.xi < 0 ? -1.0 : (inside ? -1.0 : 1.0);
        return c * lambda * g * flux * cplx(0.0, -sgn);
    }
    cplx z(proj.xi, eta);
    double mag = dim == 3 ? 1.0 : std::abs(z);
    return c * lambda * g * mag / (z * z);
}

double point_membership(const Solid& solid, const Vec3& p, const IntegrationPolicy& policy) {
    policy.validate();
    double dist = solid.distance(p);
    NodeResult r = eval_node(solid, p, std::max(dist, 1e-300), KernelSpec::winding(), policy);
    if (r.tr.exhausted) throw PmcError(r.tr.worst);
    return r.winding;
}

void require_margin(const Solid& solid, const SampleGrid& grid, double margin) {
    Aabb gb = grid.box();
    const Aabb& sb = solid.bbox();
    const double tol = 1e-9 * grid.spacing;
    for (int a = 0; a < grid.dim; ++a) {
        if (sb.min[a] - margin < gb.min[a] - tol || sb.max[a] + margin > gb.max[a] + tol)
            throw Error("grid does not contain the solid bounding box with a margin of " +
                        std::to_string(margin) + " on axis " + std::to_string(a));
    }
}

FieldResult affinity_field(const Solid& solid, const SampleGrid& grid, const KernelSpec& spec,
                           const IntegrationPolicy& policy, unsigned threads) {
    grid.validate();
    spec.validate();
    policy.validate();
    if (grid.dim != solid.dimension()) throw Error("grid and solid dimensions differ");
    require_margin(solid, grid, 2.0 * grid.spacing);
    if (threads == 0) threads = default_threads();

    const std::size_t m = grid.size();
    const double floor_dist = policy.eta_floor * grid.spacing;
    FieldResult res;
    res.field = ComplexField(grid);
    std::vector<char> excluded(m, 0);
    std::vector<double> residual(m, 0.0);
    std::vector<std::uint64_t> samples(m, 0);

    parallel_for(m, threads, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            Vec3 p = grid.node(i);
            double dist = solid.distance(p);
            if (dist < floor_dist) {
                excluded[i] = 1;
                continue;
            }
            NodeResult r = eval_node(solid, p, dist, spec, policy);
            res.field.values[i] = r.value;
            samples[i] = r.tr.samples;
            if (r.tr.exhausted) residual[i] = r.tr.worst;
        }
    });

    for (std::size_t i = 0; i < m; ++i) {
        res.stats.samples += samples[i];
        if (excluded[i]) res.field.flags.push_back(i);
        if (residual[i] > 0) {
            res.failures.push_back({i, residual[i]});
            res.stats.worst_residual = std::max(res.stats.worst_residual, residual[i]);
        }
    }
    res.stats.excluded_nodes = res.field.flags.size();
    fill_excluded(res.field, res.field.flags);
    return res;
}

FieldResult indicator_field(const Solid& solid, const SampleGrid& grid, const IntegrationPolicy& policy,
                            unsigned threads) {
    grid.validate();
    policy.validate();
    if (grid.dim != solid.dimension()) throw Error("grid and solid dimensions differ");
    if (threads == 0) threads = default_threads();

    const std::size_t m = grid.size();
    const double floor_dist = policy.eta_floor * grid.spacing;
    const KernelSpec wk = KernelSpec::winding();
    FieldResult res;
    res.field = ComplexField(grid);
    std::vector<double> residual(m, 0.0);
    std::vector<std::uint64_t> samples(m, 0);
    const Aabb& sb = solid.bbox();

    parallel_for(m, threads, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            Vec3 p = grid.node(i);
            // outside the bounding box the winding number is exactly zero
            if (sb.sq_distance(p) > 0) continue;
            double dist = solid.distance(p);
            NodeResult r = eval_node(solid, p, std::max(dist, 1e-300), wk, policy);
            res.field.values[i] = r.winding >= 0.5 ? 1.0 : 0.0;
            samples[i] = r.tr.samples;
            // near-boundary nodes are classified leniently
            if (r.tr.exhausted && dist >= floor_dist) residual[i] = r.tr.worst;
        }
    });
    for (std::size_t i = 0; i < m; ++i) {
        res.stats.samples += samples[i];
        if (residual[i] > 0) {
            res.failures.push_back({i, residual[i]});
            res.stats.worst_residual = std::max(res.stats.worst_residual, residual[i]);
        }
    }
    return res;
}

VectorField vector_density(const ComplexField& field) {
    VectorField vf;
    vf.grid = field.grid;
    for (int k = 0; k < field.grid.dim; ++k) {
        ComplexField c(field.grid);
        for (std::size_t i = 0; i < field.values.size(); ++i) c.values[i] = field.values[i] * field.grid.node(i)[k];
        vf.components.push_back(std::move(c));
    }
    return vf;
}

cplx affinity_at(const Solid& solid, const Vec3& p, const KernelSpec& spec, const IntegrationPolicy& policy,
                 double min_eta, std::vector<SampleRecord>* trace) {
    const int dim = solid.dimension();
    double dist = solid.distance(p);
    if (dist < min_eta) throw Error("query point lies inside the boundary exclusion radius");
    NodeResult w = eval_node(solid, p, dist, KernelSpec::winding(), policy);
    const bool inside = w.winding >= 0.5;
    const BoundaryProjection base{inside ? -dist : dist, 0.0};
    cplx acc = 0;
    traverse(solid, p, policy, [&](const Vec3& c, const Vec3& n, double area) {
        Vec3 r = c - p;
        double eta = r.norm();
        if (!(eta > 0)) return;
        double dperp = n.dot(r) / eta * area;
        BoundaryProjection proj{base.xi, eta};
        cplx k = kernel_eval(spec, proj, inside, dim);
        acc += k * dperp;
        if (trace) trace->push_back({proj, inside, k, dperp});
    });
    return acc;
}

}  // namespace geofield
