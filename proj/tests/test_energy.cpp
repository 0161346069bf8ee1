#include <doctest.h>

#include <random>

#include "geofield/assets.hpp"
#include "geofield/oracle.hpp"
#include "geofield/scenes.hpp"
#include "geofield/session.hpp"

using namespace geofield;

namespace {

struct Fixture {
    Scene scene;
    BuiltAsset fixed, moving;
};

const Fixture& peg() {
    static const Fixture f = [] {
        Fixture x;
        x.scene = builtin_scene("peg2d-small");
        KernelSpec k = KernelSpec::skeletal(0.5, 3.0);
        x.fixed = build_asset("fixed", x.scene.fixed, part_grid(x.scene.fixed, x.scene.n, x.scene.spacing), k, {}, false);
        x.moving = build_asset("moving", x.scene.moving, part_grid(x.scene.moving, x.scene.n, x.scene.spacing), k, {}, true);
        return x;
    }();
    return f;
}

// Band-limited score with the moving spectrum evaluated exactly (direct DTFT)
// at the rotated frequencies, over the fixed part's centred window.
cplx exact_score(const PartAsset& fixed, const ComplexField& moving, std::size_t m_prime, const Configuration& c) {
    TruncatedSpectrum t = truncate(fixed.scalar, m_prime);
    const double dw = 1.0 / (double(fixed.grid.size()) * fixed.grid.cell_volume());
    const double dv = moving.grid.cell_volume();
    cplx acc = 0;
    for (std::size_t w = 0; w < t.amplitudes.size(); ++w) {
        Vec3 om = t.frequency(w);
        Vec3 nu = -(c.rotation.transpose() * om);
        cplx s2 = 0;
        for (std::size_t i = 0; i < moving.values.size(); ++i)
            s2 += moving.values[i] * std::polar(1.0, -kTwoPi * nu.dot(moving.grid.node(i)));
        acc += t.amplitudes[w] * dw * std::polar(1.0, kTwoPi * om.dot(c.translation)) * s2 * dv;
    }
    return acc;
}

}  // namespace

TEST_SUITE("energy") {
    TEST_CASE("configuration constructors and normalization") {
        Configuration c = Configuration::planar(0.4, 1, 2);
        CHECK(c.angle() == doctest::Approx(0.4));
        CHECK(c.dim == 2);
        Configuration q = Configuration::from_quaternion(2, 0, 0, 2, Vec3(1, 2, 3));
        CHECK((q.rotation - Eigen::AngleAxisd(kPi / 2, Vec3::UnitZ()).toRotationMatrix()).norm() < 1e-12);
        Configuration p = Configuration::spatial(Mat3::Identity(), Vec3::Zero());
        p.rotation(0, 1) = 1e-3;
        CHECK_THROWS_AS(p.validate(), Error);
        Configuration o = p.orthonormalized();
        o.validate();
        CHECK((o.rotation * o.rotation.transpose() - Mat3::Identity()).norm() < 1e-12);
        Configuration bad = Configuration::planar(0, 0, 0);
        bad.translation.z() = 1;
        CHECK_THROWS_AS(bad.validate(), Error);
        CHECK_THROWS_AS(Configuration::from_quaternion(0, 0, 0, 0, Vec3::Zero()), Error);
    }

    TEST_CASE("single-configuration score equals the score field on nodes") {
        const auto& f = peg();
        for (std::size_t m : {std::size_t(0), std::size_t(16 * 16)}) {
            for (double theta : {0.0, 0.3}) {
                Mat3 R = Configuration::planar(theta, 0, 0).rotation;
                ScoreField sf = score_field(f.fixed.asset, f.moving.asset, R, m);
                const SampleGrid& g = sf.values.grid;
                for (std::size_t idx : {g.index(64, 76), g.index(60, 90), g.index(70, 100)}) {
                    Configuration c{2, R, g.node(idx)};
                    cplx a = score_at(f.fixed.asset, f.moving.asset, c, m);
                    CHECK(std::abs(a - sf.values.values[idx]) < 1e-10 * (std::abs(a) + 1e-3));
                }
            }
        }
    }

    TEST_CASE("evaluate bundles energy, force and torque consistently") {
        const auto& f = peg();
        PairEvaluator ev(f.fixed.asset, f.moving.asset, 32 * 32);
        Configuration c = Configuration::planar(0.2, 0.13, 0.61);
        EnergyEval e = ev.evaluate(c);
        CHECK(e.energy == -e.score.real());
        CHECK(e.force.x() == ev.translational_gradient(c).x().real());
        CHECK(e.torque.z() == ev.rotational_gradient(c).z().real());
        CHECK(e.torque.x() == 0.0);
        CHECK(e.torque.y() == 0.0);
        CHECK(e.force.z() == 0.0);
        CHECK(e.modes_used == 1024);
        CHECK(e.eval_time_us > 0);
        EnergyEval again = ev.evaluate(c);
        CHECK(again.score == e.score);
        CHECK(again.force == e.force);
        CHECK(again.torque == e.torque);
    }

    TEST_CASE("translational gradient matches finite differences") {
        const auto& f = peg();
        PairEvaluator ev(f.fixed.asset, f.moving.asset, 64 * 64);
        std::mt19937_64 rng(8);
        std::uniform_real_distribution<double> ux(-0.5, 0.5), uy(0.1, 1.0), ua(-0.4, 0.4);
        for (int i = 0; i < 10; ++i) {
            Configuration c = Configuration::planar(ua(rng), ux(rng), uy(rng));
            auto fd = oracle::fd_gradient([&](const Configuration& q) { return ev.score(q); }, c, 1e-5, 1e-5);
            Vec3c g = ev.translational_gradient(c);
            CHECK((g - fd.translation).norm() < 1e-6 * fd.translation.norm() + 1e-12);
        }
    }

    TEST_CASE("rotational gradient is the derivative of the exact spectral score") {
        // 32^2 full spectrum: quarter turns land every rotated mode on a node, so the
        // analytic value must match differences of the exact DTFT score
        Scene sc = builtin_scene("peg2d-small");
        double h = pair_spacing(sc.fixed, sc.moving, 32);
        KernelSpec k = KernelSpec::skeletal(0.5, 3.0);
        BuiltAsset A = build_asset("a", sc.fixed, part_grid(sc.fixed, 32, h), k, {}, false);
        BuiltAsset B = build_asset("b", sc.moving, part_grid(sc.moving, 32, h), k, {}, true);
        PairEvaluator ev(A.asset, B.asset);
        const std::size_t m = A.asset.grid.size();
        for (int quarter = 0; quarter < 4; ++quarter) {
            Configuration c = Configuration::planar(quarter * kPi / 2, 0.11, 0.47);
            c.rotation = c.rotation.array().round().matrix();
            auto exact = [&](const Configuration& q) { return exact_score(A.asset, B.field.field, m, q); };
            CHECK(std::abs(ev.score(c) - exact(c)) < 1e-10 * std::abs(exact(c)));
            auto fd = oracle::fd_gradient(exact, c, 1e-4, 1e-5);
            cplx g = ev.rotational_gradient(c).z();
            CHECK(std::abs(g - fd.rotation.z()) < 1e-5 * std::abs(fd.rotation.z()));
            double e_plus = -exact(Configuration::planar(quarter * kPi / 2 + 1e-5, 0.11, 0.47)).real();
            double e_minus = -exact(Configuration::planar(quarter * kPi / 2 - 1e-5, 0.11, 0.47)).real();
            CHECK(ev.evaluate(c).torque.z() == doctest::Approx(-(e_plus - e_minus) / 2e-5).epsilon(1e-4));
        }
    }

    TEST_CASE("a disk has no torque about its centre") {
        Scene sc = builtin_scene("peg2d-small");
        Polygon2 disk;
        disk.loops.emplace_back();
        for (int i = 0; i < 64; ++i) disk.loops[0].push_back(0.25 * Vec2(std::cos(kTwoPi * i / 64), std::sin(kTwoPi * i / 64)));
        Solid d = Solid::from_polygon(disk);
        double h = pair_spacing(sc.fixed, d, 64);
        KernelSpec k = KernelSpec::skeletal(0.5, 3.0);
        BuiltAsset A = build_asset("a", sc.fixed, part_grid(sc.fixed, 64, h), k, {}, false);
        BuiltAsset B = build_asset("b", d, SampleGrid::centered(2, 64, Vec3::Zero(), h), k, {}, true);
        // lattice sampling breaks the continuous symmetry through aliasing, which the
        // full spectrum sees (about 7e-3 relative here); a 16^2 window does not
        PairEvaluator ev(A.asset, B.asset, 16 * 16);
        // torque scale: peak force at the disk radius
        const double scale = estimate_peak_force(A.asset, B.asset) * 0.25;
        for (const Vec3& t : {Vec3(0.2, 0.6, 0), Vec3(-0.1, 0.35, 0), Vec3(0.4, 0.2, 0), Vec3(0, 0.1, 0)}) {
            Configuration c = Configuration::planar(0, t.x(), t.y());
            double tau = std::abs(ev.rotational_gradient(c).z());
            CHECK(tau < 1e-3 * scale);
        }
    }

    TEST_CASE("zero moving field gives zero score and gradients") {
        const auto& f = peg();
        ComplexField zero(f.moving.asset.grid);
        PartAsset z = make_asset("z", zero, f.moving.asset.support, f.moving.asset.kernel, true);
        EnergyEval e = evaluate(f.fixed.asset, z, Configuration::planar(0.3, 0.1, 0.4));
        CHECK(e.score == cplx(0.0));
        CHECK(e.force.norm() == 0.0);
        CHECK(e.torque.norm() == 0.0);
    }

    TEST_CASE("snap pose is the energy minimum over the translation grid") {
        const auto& f = peg();
        ScoreField sf = score_field(f.fixed.asset, f.moving.asset, Mat3::Identity());
        const SampleGrid& g = sf.values.grid;
        std::size_t best = 0;
        for (std::size_t i = 0; i < g.size(); ++i)
            if (!sf.wrap[i] && sf.values.values[i].real() > sf.values.values[best].real()) best = i;
        CHECK((g.node(best) - f.scene.snap.translation).norm() < 1e-9);
    }

    TEST_CASE("rotational gradient needs a movable part") {
        const auto& f = peg();
        CHECK_THROWS_AS(rotational_gradient(f.fixed.asset, f.fixed.asset, Configuration::planar(0, 0, 1)), Error);
    }

    TEST_CASE("force restores a displaced peg toward the snap pose") {
        const auto& f = peg();
        PairEvaluator ev(f.fixed.asset, f.moving.asset);
        const double h = f.scene.spacing;
        Configuration snap = f.scene.snap;
        EnergyEval e0 = ev.evaluate(snap);
        for (double dx : {h, 2 * h}) {
            EnergyEval right = ev.evaluate(Configuration::planar(0, dx, snap.translation.y()));
            EnergyEval left = ev.evaluate(Configuration::planar(0, -dx, snap.translation.y()));
            CHECK(right.force.x() < 0);
            CHECK(left.force.x() > 0);
            CHECK(right.energy > e0.energy);
            CHECK(left.energy > e0.energy);
        }
        CHECK(std::abs(e0.force.x()) < 1e-9);
    }

    TEST_CASE("indicator assets: zero score and decaying force once separated") {
        Scene s = builtin_scene("peg2d-small");
        SampleGrid gf = part_grid(s.fixed, 128, s.spacing), gm = part_grid(s.moving, 128, s.spacing);
        PartAsset a = make_asset("a", indicator_field(s.fixed, gf).field, s.fixed.bbox(), KernelSpec::winding(), false);
        PartAsset b = make_asset("b", indicator_field(s.moving, gm).field, s.moving.bbox(), KernelSpec::winding(), true);
        PairEvaluator ev(a, b);
        double prev = std::numeric_limits<double>::infinity();
        for (double y : {0.9, 1.0, 1.1, 1.2}) {
            Configuration c = Configuration::planar(0, 0, y);
            CHECK_FALSE(wrap_contaminated(a, b, c.rotation, c.translation));
            EnergyEval e = ev.evaluate(c);
            CHECK(std::abs(e.score) < 1e-12);
            CHECK(e.force.norm() < prev);
            prev = e.force.norm();
        }
        CHECK(ev.evaluate(Configuration::planar(0, 0.5, -0.2)).score.real() > 0.1);
    }

    // Known shortfall: inside the non-wrapping domain the skeletal tail keeps
    // |F| near 7% of the peak, and the indicator's band-limited ringing 0.3%.
    TEST_CASE("deep free space force is below 1e-6 of the peak" * doctest::may_fail()) {
        const auto& f = peg();
        double peak = estimate_peak_force(f.fixed.asset, f.moving.asset);
        PairEvaluator ev(f.fixed.asset, f.moving.asset);
        Configuration far = Configuration::planar(0, 1.0, 1.2);
        REQUIRE_FALSE(wrap_contaminated(f.fixed.asset, f.moving.asset, far.rotation, far.translation));
        double ratio = ev.evaluate(far).force.norm() / peak;
        MESSAGE("|F| / peak = ", ratio);
        CHECK(ratio < 1e-6);
    }

    TEST_CASE("wrap contamination") {
        const auto& f = peg();
        CHECK_FALSE(wrap_contaminated(f.fixed.asset, f.moving.asset, Mat3::Identity(), f.scene.snap.translation));
        CHECK(wrap_contaminated(f.fixed.asset, f.moving.asset, Mat3::Identity(), Vec3(2.0, 0, 0)));
        ScoreField sf = score_field(f.fixed.asset, f.moving.asset, Mat3::Identity(), 64 * 64);
        std::size_t masked = std::count(sf.wrap.begin(), sf.wrap.end(), std::uint8_t(1));
        CHECK(masked > 0);
        CHECK(masked < sf.wrap.size());
        const SampleGrid& g = sf.values.grid;
        for (std::size_t i = 0; i < g.size(); i += 97)
            CHECK(bool(sf.wrap[i]) == wrap_contaminated(f.fixed.asset, f.moving.asset, Mat3::Identity(), g.node(i)));
    }

    TEST_CASE("translation grid maps node n/2 to the origin offset") {
        const auto& f = peg();
        SampleGrid t = translation_grid(f.fixed.asset, f.moving.asset);
        Vec3 mid = t.node(t.index(64, 64));
        CHECK((mid - (f.fixed.asset.grid.origin - f.moving.asset.grid.origin)).norm() < 1e-12);
    }

    TEST_CASE("incompatible grids and bad mode counts are rejected") {
        const auto& f = peg();
        PartAsset other = f.moving.asset;
        other.grid.spacing *= 1.5;
        try {
            check_compatible(f.fixed.asset, other);
            FAIL("expected grid mismatch");
        } catch (const Error& e) {
            CHECK(std::string(e.what()).find("grid mismatch") != std::string::npos);
        }
        CHECK_THROWS_AS(PairEvaluator(f.fixed.asset, f.moving.asset, 256 * 256), Error);
        CHECK_THROWS_AS(PairEvaluator(f.fixed.asset, f.moving.asset, 100 * 3), Error);
    }

    TEST_CASE("ranked truncation with every mode equals the full sum") {
        const auto& f = peg();
        Configuration c = Configuration::planar(0.1, 0.05, 0.5);
        PairEvaluator full(f.fixed.asset, f.moving.asset);
        PairEvaluator ranked(f.fixed.asset, f.moving.asset, f.fixed.asset.grid.size(), Truncation::Ranked);
        CHECK(std::abs(full.score(c) - ranked.score(c)) < 1e-12 * std::abs(full.score(c)));
        PairEvaluator few(f.fixed.asset, f.moving.asset, 200, Truncation::Ranked);
        CHECK(few.modes() == 200);
    }

    TEST_CASE("3D: score field, point evaluation and rotational gradient agree") {
        Solid a = Solid::from_mesh(make_l_bracket());
        Solid b = Solid::from_mesh(make_box(Vec3(-0.1, -0.15, -0.1), Vec3(0.1, 0.15, 0.1)));
        const std::size_t n = 16;
        double h = pair_spacing(a, b, n);
        KernelSpec k = KernelSpec::skeletal(0.5, 3.0);
        BuiltAsset A = build_asset("a", a, part_grid(a, n, h), k, {}, false);
        BuiltAsset B = build_asset("b", b, part_grid(b, n, h), k, {}, true);
        ScoreField sf = score_field(A.asset, B.asset, Mat3::Identity());
        const SampleGrid& g = sf.values.grid;
        std::size_t idx = g.index(8, 9, 7);
        cplx p = score_at(A.asset, B.asset, Configuration::spatial(Mat3::Identity(), g.node(idx)));
        CHECK(std::abs(p - sf.values.values[idx]) < 1e-10 * std::abs(p));

        PairEvaluator ev(A.asset, B.asset);
        const std::size_t m = A.asset.grid.size();
        Mat3 quarter = Eigen::AngleAxisd(kPi / 2, Vec3::UnitZ()).toRotationMatrix().array().round().matrix();
        for (const Mat3& R : {Mat3(Mat3::Identity()), quarter}) {
            Configuration c = Configuration::spatial(R, Vec3(0.3, 0.35, 0.2));
            auto fd = oracle::fd_gradient([&](const Configuration& q) { return exact_score(A.asset, B.field.field, m, q); },
                                          c, 1e-4, 1e-5);
            Vec3c gr = ev.rotational_gradient(c);
            CHECK((gr - fd.rotation).norm() < 1e-5 * fd.rotation.norm());
            Vec3c gt = ev.translational_gradient(c);
            CHECK((gt - fd.translation).norm() < 1e-5 * fd.translation.norm());
        }
    }
}
