#include <doctest.h>

#include <random>

#include "geofield/assets.hpp"
#include "geofield/descriptor.hpp"
#include "geofield/oracle.hpp"
#include "geofield/scenes.hpp"
#include "test_support.hpp"

using namespace geofield;

namespace {

const double c3 = 1.0 / (4.0 * kPi);
const double c2 = 1.0 / (2.0 * kPi);

double g_ref(double x, double s) { return std::exp(-x * x / (2 * s * s)) / (s * std::sqrt(2 * kPi)); }

}  // namespace

TEST_SUITE("descriptor") {
    TEST_CASE("gaussian is the normalized bell") {
        CHECK(gaussian(0.0, 0.5) == doctest::Approx(1.0 / (0.5 * std::sqrt(2 * kPi))));
        CHECK(gaussian(0.3, 0.5) == doctest::Approx(gaussian(-0.3, 0.5)));
        CHECK(gaussian(1.0, 2.0) == doctest::Approx(g_ref(1.0, 2.0)));
    }

    TEST_CASE("kernel spec construction and validation") {
        KernelSpec k = KernelSpec::skeletal(0.5, 3.0);
        CHECK(k.lambda_in == 3.0);
        CHECK(k.lambda_out == 1.0);
        CHECK(k.penalty() == 3.0);
        CHECK_THROWS_AS(KernelSpec::skeletal(0.0, 3.0), Error);
        CHECK_THROWS_AS(KernelSpec::skeletal(0.5, -1.0), Error);
        IntegrationPolicy p;
        p.max_recursion_depth = 0;
        CHECK_THROWS_AS(p.validate(), Error);
    }

    TEST_CASE("inverse-square kernel is the normalized solid-angle kernel") {
        KernelSpec w = KernelSpec::winding();
        CHECK(kernel_eval(w, {0.2, 0.5}, false, 3).real() == doctest::Approx(c3 / 0.25));
        CHECK(kernel_eval(w, {0.2, 0.5}, false, 2).real() == doctest::Approx(c2 / 0.5));
        CHECK(kernel_eval(w, {0.2, 0.5}, true, 3).imag() == 0.0);
    }

    TEST_CASE("ann-phase kernel values and sign structure") {
        KernelSpec k = KernelSpec::skeletal(0.5, 3.0);
        cplx in = kernel_eval(k, {-0.1, 0.15}, true, 3);
        CHECK(in.real() == 0.0);
        CHECK(in.imag() == doctest::Approx(c3 * 3.0 * g_ref(0.5, 0.5) / (0.15 * 0.15)));
        cplx out = kernel_eval(k, {0.1, 0.15}, false, 3);
        CHECK(out.imag() == doctest::Approx(c3 * 1.0 * g_ref(0.5, 0.5) / (0.15 * 0.15)));
        cplx in2 = kernel_eval(k, {-0.1, 0.15}, true, 2);
        CHECK(in2.imag() == doctest::Approx(c2 * 3.0 * g_ref(0.5, 0.5) / 0.15));
    }

    TEST_CASE("zeta-squared kernel values") {
        KernelSpec k = KernelSpec::skeletal(0.5, 3.0, KernelStructure::ZetaSquared);
        cplx z(-0.1, 0.15);
        cplx in = kernel_eval(k, {-0.1, 0.15}, true, 3);
        cplx want = c3 * 3.0 * g_ref(0.5, 0.5) / (z * z);
        CHECK(std::abs(in - want) < 1e-12 * std::abs(want));
        cplx z2(0.1, 0.15);
        cplx out2 = kernel_eval(k, {0.1, 0.15}, false, 2);
        cplx want2 = -c2 * g_ref(0.5, 0.5) * std::abs(z2) / (z2 * z2);
        CHECK(std::abs(out2 - want2) < 1e-12 * std::abs(want2));
    }

    TEST_CASE("winding number of simple solids") {
        Solid cube = Solid::from_mesh(make_box(Vec3(-1, -1, -1), Vec3(1, 1, 1)));
        CHECK(point_membership(cube, Vec3(0, 0, 0)) == doctest::Approx(1.0).epsilon(1e-3));
        CHECK(point_membership(cube, Vec3(0.9, 0.2, -0.7)) == doctest::Approx(1.0).epsilon(1e-2));
        CHECK(std::abs(point_membership(cube, Vec3(3, 0, 0))) < 1e-3);
        Solid square = Solid::from_polygon(make_rectangle(-1, -1, 1, 1));
        CHECK(point_membership(square, Vec3(0.3, 0.1, 0)) == doctest::Approx(1.0).epsilon(1e-3));
        CHECK(std::abs(point_membership(square, Vec3(1.5, 0.1, 0))) < 1e-3);
        Scene peg = builtin_scene("peg2d-small");
        CHECK(std::abs(point_membership(peg.fixed, Vec3(0, 0.3, 0))) < 1e-2);  // inside the slot
    }

    TEST_CASE("exhausted recursion budget raises with the residual") {
        Solid cube = Solid::from_mesh(make_box(Vec3(-1, -1, -1), Vec3(1, 1, 1)));
        IntegrationPolicy tight;
        tight.max_solid_angle = 1e-4;
        tight.max_recursion_depth = 2;
        try {
            point_membership(cube, Vec3(0.99, 0, 0), tight);
            FAIL("expected PmcError");
        } catch (const PmcError& e) {
            CHECK(e.residual() > tight.max_solid_angle);
        }
    }

    TEST_CASE("every quadrature sample has eta >= |xi| and the class-consistent sign") {
        std::mt19937_64 rng(17);
        std::uniform_real_distribution<double> u(-1.3, 1.3);
        KernelSpec k = KernelSpec::skeletal(0.5, 3.0);
        Solid bracket = Solid::from_mesh(make_l_bracket());
        Solid star = Solid::from_polygon(test_support::random_star(rng, 9, 1.0));
        std::size_t samples = 0, positive = 0;
        for (int i = 0; i < 60; ++i) {
            const Solid& s = i % 2 ? bracket : star;
            Vec3 p(u(rng), u(rng), s.dimension() == 3 ? u(rng) : 0.0);
            if (s.distance(p) < 0.02) continue;
            std::vector<SampleRecord> trace;
            affinity_at(s, p, k, {}, 0.01, &trace);
            bool ray = oracle::raycast_pmc(s, p);
            for (const auto& r : trace) {
                CHECK(r.proj.eta >= std::abs(r.proj.xi) * (1 - 1e-12));
                CHECK(r.inside == ray);
                CHECK((r.proj.xi < 0) == r.inside);
                CHECK(r.kernel.imag() >= 0);  // zero only where the gaussian underflows
                CHECK(r.kernel.real() == 0.0);
                if (r.kernel.imag() > 0) ++positive;
                ++samples;
            }
        }
        CHECK(samples > 1000);
        CHECK(positive > samples / 2);
    }

    TEST_CASE("generic kernel path agrees with the fused field evaluation") {
        KernelSpec k = KernelSpec::skeletal(0.5, 3.0);
        Scene peg = builtin_scene("peg2d-small");
        SampleGrid g = SampleGrid::centered(2, 32, peg.fixed.bbox().center(), 0.1);
        FieldResult f = affinity_field(peg.fixed, g, k);
        for (std::size_t idx : {std::size_t(100), std::size_t(400), std::size_t(530), std::size_t(777)}) {
            if (std::find(f.field.flags.begin(), f.field.flags.end(), idx) != f.field.flags.end()) continue;
            cplx a = affinity_at(peg.fixed, g.node(idx), k, {}, 0.0);
            CHECK(std::abs(a - f.field.values[idx]) < 1e-12 * std::abs(a) + 1e-15);
        }
    }

    TEST_CASE("affinity field sign structure: interior +Im, exterior -Im") {
        KernelSpec k = KernelSpec::skeletal(0.5, 3.0);
        Scene peg = builtin_scene("peg2d-small");
        SampleGrid g = part_grid(peg.fixed, 64, 0.05);
        FieldResult f = affinity_field(peg.fixed, g, k);
        CHECK(f.field.all_finite());
        CHECK(f.failures.empty());
        std::size_t checked = 0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            Vec3 p = g.node(i);
            if (peg.fixed.distance(p) < g.spacing) continue;
            CHECK(f.field.values[i].real() == 0.0);
            bool in = oracle::raycast_pmc(peg.fixed, p);
            CHECK((f.field.values[i].imag() > 0) == in);
            ++checked;
        }
        CHECK(checked > 3000);
    }

    TEST_CASE("boundary-excluded nodes are flagged and filled") {
        Solid sq = Solid::from_polygon(make_rectangle(-0.5, -0.5, 0.5, 0.5));
        SampleGrid g = SampleGrid::cube(2, 16, Vec3(-0.8, -0.8, 0), 0.1);
        FieldResult f = affinity_field(sq, g, KernelSpec::skeletal(0.5, 3.0));
        CHECK(f.stats.excluded_nodes > 0);
        CHECK(f.field.flags.size() == f.stats.excluded_nodes);
        for (auto idx : f.field.flags) {
            CHECK(sq.distance(g.node(idx)) < 0.25 * g.spacing + 1e-12);
            CHECK(std::isfinite(f.field.values[idx].imag()));
        }
    }

    TEST_CASE("rigid invariance under lattice translation and quarter turns") {
        KernelSpec k = KernelSpec::skeletal(0.5, 3.0);
        std::mt19937_64 rng(3);
        Solid s = Solid::from_polygon(test_support::random_star(rng, 8, 0.7));
        const double h = 0.1;
        SampleGrid g = SampleGrid::cube(2, 32, Vec3(-1.6, -1.6, 0), h);
        FieldResult base = affinity_field(s, g, k);

        Vec3 shift(3 * h, -2 * h, 0);
        SampleGrid gs = g;
        gs.origin += shift;
        FieldResult moved = affinity_field(s.transformed(Mat3::Identity(), shift), gs, k);
        double worst = 0;
        for (std::size_t i = 0; i < g.size(); ++i) worst = std::max(worst, std::abs(moved.field.values[i] - base.field.values[i]));
        CHECK(worst < 1e-10);

        Mat3 R;
        R << 0, -1, 0, 1, 0, 0, 0, 0, 1;
        FieldResult rot = affinity_field(s.transformed(R, Vec3::Zero()), g, k);
        worst = 0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            Vec3 q = R * g.node(i);
            long a = std::lround((q.x() - g.origin.x()) / h), b = std::lround((q.y() - g.origin.y()) / h);
            if (a < 0 || b < 0 || a >= 32 || b >= 32) continue;
            worst = std::max(worst, std::abs(rot.field.values[g.index(a, b)] - base.field.values[i]));
        }
        CHECK(worst < 1e-10);
    }

    TEST_CASE("quadrature converges as the solid-angle budget shrinks") {
        KernelSpec k = KernelSpec::skeletal(0.5, 3.0);
        Solid s = Solid::from_mesh(make_icosphere(2, 1.0));
        Vec3 p(0.3, -0.2, 0.5);
        auto at = [&](double a) {
            IntegrationPolicy pol;
            pol.max_solid_angle = a;
            return affinity_at(s, p, k, pol, 0.0);
        };
        cplx ref = at(0.0005);
        double e1 = std::abs(at(0.08) - ref), e2 = std::abs(at(0.02) - ref), e3 = std::abs(at(0.005) - ref);
        CHECK(e2 < e1);
        CHECK(e3 < e2);
        CHECK(e3 < 1e-3 * std::abs(ref));
    }

    TEST_CASE("indicator field is binary and matches ray casting off the boundary") {
        Solid b = Solid::from_mesh(make_l_bracket());
        SampleGrid g = part_grid(b, 16, 0.1);
        FieldResult f = indicator_field(b, g);
        for (std::size_t i = 0; i < g.size(); ++i) {
            double v = f.field.values[i].real();
            CHECK((v == 0.0 || v == 1.0));
            if (b.distance(g.node(i)) > 0.01) CHECK((v == 1.0) == oracle::raycast_pmc(b, g.node(i)));
        }
    }

    TEST_CASE("vector density multiplies by node coordinates") {
        SampleGrid g = SampleGrid::cube(2, 8, Vec3(-0.35, 0.1, 0), 0.1);
        ComplexField f(g);
        for (std::size_t i = 0; i < g.size(); ++i) f.values[i] = cplx(double(i), 1.0);
        VectorField v = vector_density(f);
        REQUIRE(v.components.size() == 2);
        for (std::size_t i = 0; i < g.size(); ++i) {
            CHECK(v.components[0].values[i] == f.values[i] * g.node(i).x());
            CHECK(v.components[1].values[i] == f.values[i] * g.node(i).y());
        }
    }

    TEST_CASE("grid preconditions") {
        Solid sq = Solid::from_polygon(make_rectangle(-0.5, -0.5, 0.5, 0.5));
        KernelSpec k = KernelSpec::skeletal(0.5, 3.0);
        CHECK_THROWS_AS(affinity_field(sq, SampleGrid::cube(2, 8, Vec3(-0.5, -0.5, 0), 0.1), k), Error);
        SampleGrid odd = SampleGrid::cube(2, 8, Vec3(-1, -1, 0), 0.3);
        odd.dims[0] = 12;
        CHECK_THROWS_AS(affinity_field(sq, odd, k), Error);
        CHECK_THROWS_AS(affinity_field(sq, SampleGrid::cube(3, 8, Vec3(-1, -1, -1), 0.3), k), Error);
        CHECK_THROWS_AS(require_margin(sq, SampleGrid::cube(2, 8, Vec3(-0.6, -0.6, 0), 0.2), 0.4), Error);
    }
}
