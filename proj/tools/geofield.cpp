#include <algorithm>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "geofield/assets.hpp"
#include "geofield/io.hpp"
#include "geofield/oracle.hpp"
#include "geofield/scenes.hpp"
#include "geofield/server.hpp"
#include "geofield/session.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace geofield;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<double> parse_numbers(const std::string& text, const char* what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            double v = std::stod(item, &used);
            while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
            if (used != item.size()) throw std::invalid_argument(item);
            out.push_back(v);
        } catch (const std::exception&) {
            throw UsageError(std::string("malformed ") + what + " '" + text + "'");
        }
    }
    return out;
}

// "theta" (radians, 2D) or "w,x,y,z" (unit quaternion, 3D)
Mat3 parse_rotation(const std::string& text, int dim) {
    if (text.empty()) return Mat3::Identity();
    auto v = parse_numbers(text, "rotation");
    if (v.size() == 1) {
        if (dim != 2) throw UsageError("a 3D rotation needs a quaternion \"w,x,y,z\"");
        return Configuration::planar(v[0], 0, 0).rotation;
    }
    if (v.size() == 4) {
        if (dim != 3) throw UsageError("a 2D rotation is a single angle");
        return Configuration::from_quaternion(v[0], v[1], v[2], v[3], Vec3::Zero()).rotation;
    }
    throw UsageError("rotation must be an angle or \"w,x,y,z\"");
}

Vec3 parse_translation(const std::string& text, int dim) {
    if (text.empty()) return Vec3::Zero();
    auto v = parse_numbers(text, "translation");
    if (int(v.size()) != dim) throw UsageError("translation needs " + std::to_string(dim) + " components");
    Vec3 t = Vec3::Zero();
    for (int a = 0; a < dim; ++a) t[a] = v[a];
    return t;
}

std::vector<std::size_t> parse_modes(const std::string& text) {
    std::vector<std::size_t> out;
    if (text.empty()) return out;
    for (double v : parse_numbers(text, "mode list")) {
        if (v < 0 || v != std::floor(v)) throw UsageError("mode counts must be non-negative integers");
        out.push_back(std::size_t(v));
    }
    return out;
}

// {"theta":..,"x":..,"y":..} or {"quat":[w,x,y,z],"t":[x,y,z]}
Configuration parse_config_json(const std::string& text, int dim) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw UsageError(std::string("malformed config JSON: ") + e.what());
    }
    auto num = [&](const json& v) {
        if (!v.is_number()) throw UsageError("malformed config JSON: expected a number");
        return v.get<double>();
    };
    if (!j.is_object()) throw UsageError("malformed config JSON: expected an object");
    if (dim == 2) {
        for (const char* k : {"x", "y"})
            if (!j.contains(k)) throw UsageError(std::string("malformed config JSON: missing '") + k + "'");
        return Configuration::planar(j.contains("theta") ? num(j["theta"]) : 0.0, num(j["x"]), num(j["y"]));
    }
    if (!j.contains("t") || !j["t"].is_array() || j["t"].size() != 3)
        throw UsageError("malformed config JSON: 't' must be [x,y,z]");
    Vec3 t(num(j["t"][0]), num(j["t"][1]), num(j["t"][2]));
    if (!j.contains("quat")) return Configuration::spatial(Mat3::Identity(), t);
    const json& q = j["quat"];
    if (!q.is_array() || q.size() != 4) throw UsageError("malformed config JSON: 'quat' must be [w,x,y,z]");
    return Configuration::from_quaternion(num(q[0]), num(q[1]), num(q[2]), num(q[3]), t);
}

void set_threads(int threads) {
    if (threads > 0) setenv("GEOFIELD_THREADS", std::to_string(threads).c_str(), 1);
}

json vec_json(const Vec3& v, int dim) {
    json a = json::array();
    for (int i = 0; i < dim; ++i) a.push_back(v[i]);
    return a;
}

json eval_json(const EnergyEval& e, int dim) {
    json j = {{"score_re", e.score.real()},
              {"score_im", e.score.imag()},
              {"energy", e.energy},
              {"force", vec_json(e.force, dim)},
              {"eval_time_us", e.eval_time_us},
              {"modes", e.modes_used}};
    if (dim == 2)
        j["torque"] = e.torque.z();
    else
        j["torque"] = vec_json(e.torque, 3);
    return j;
}

// ---- pair loading

struct PairSource {
    std::string manifest;
    std::string scene;
    std::string assets;
};

void add_pair_options(CLI::App* app, PairSource& src) {
    auto* m = app->add_option("--manifest", src.manifest, "asset manifest written by precompute");
    auto* s = app->add_option("--scene", src.scene, "built-in scene id")->check(CLI::IsMember(scene_ids()));
    m->excludes(s);
    app->add_option("--assets", src.assets, "directory of precomputed scenes (<dir>/<scene>/manifest.json)");
}

std::shared_ptr<const PairAssets> load_pair(const PairSource& src) {
    if (!src.manifest.empty()) return manifest_assets(src.manifest);
    if (!src.scene.empty()) return scene_assets(src.scene, src.assets);
    throw UsageError("one of --manifest or --scene is required");
}

// Sampled fields for the oracle path.
std::pair<ComplexField, ComplexField> load_fields(const PairSource& src) {
    if (!src.manifest.empty()) {
        AssetManifest m = load_manifest(src.manifest);
        auto read = [&](const ManifestPart& p) {
            if (p.field.empty()) throw Error("manifest part '" + p.id + "' has no field file");
            return read_field((fs::path(m.dir) / p.field).string());
        };
        return {read(m.by_role("fixed")), read(m.by_role("moving"))};
    }
    Scene s = builtin_scene(src.scene);
    const KernelSpec k = KernelSpec::skeletal(0.5, 3.0);
    auto f = affinity_field(s.fixed, part_grid(s.fixed, s.n, s.spacing), k).field;
    auto g = affinity_field(s.moving, part_grid(s.moving, s.n, s.spacing), k).field;
    return {std::move(f), std::move(g)};
}

// ---- precompute

struct PrecomputeArgs {
    std::vector<std::string> solids;
    std::string scene;
    std::size_t grid = 0;
    double spacing = 0;
    double sigma = 0.5;
    double penalty = 3.0;
    std::string structure = "ann-phase";
    bool indicator = false;
    std::string role = "fixed";
    std::size_t modes = 0;
    std::string out;
};

std::string solid_extension(const Solid& s) { return s.dimension() == 2 ? ".json" : ".obj"; }

int cmd_precompute(const PrecomputeArgs& a) {
    if (a.out.empty()) throw UsageError("--out is required");
    if (a.scene.empty() == a.solids.empty()) throw UsageError("give either solid files or --scene");
    if (a.solids.size() > 2) throw UsageError("at most two solids (fixed, moving)");

    struct Input {
        std::string id, role;
        Solid solid;
    };
    std::vector<Input> inputs;
    std::size_t n = a.grid;
    double h = a.spacing;
    if (!a.scene.empty()) {
        Scene s = builtin_scene(a.scene);
        inputs.push_back({"fixed", "fixed", s.fixed});
        inputs.push_back({"moving", "moving", s.moving});
        if (n == 0) n = s.n;
        if (h == 0 && n == s.n) h = s.spacing;
    } else {
        for (std::size_t i = 0; i < a.solids.size(); ++i) {
            std::string role = a.solids.size() == 2 ? (i == 0 ? "fixed" : "moving") : a.role;
            inputs.push_back({fs::path(a.solids[i]).stem().string(), role, load_solid(a.solids[i])});
        }
        if (inputs.size() == 2 && inputs[0].id == inputs[1].id) {
            inputs[0].id += "-fixed";
            inputs[1].id += "-moving";
        }
    }
    if (n == 0) n = inputs[0].solid.dimension() == 2 ? 512 : 64;
    if (!is_power_of_two(n) || n < 4) throw UsageError("--grid must be a power of two >= 4");
    const Solid& partner_a = inputs.size() == 2 ? inputs[1].solid : inputs[0].solid;
    if (h == 0) h = pair_spacing(inputs[0].solid, partner_a, n);

    KernelSpec kernel = a.indicator ? KernelSpec::winding()
                                    : KernelSpec::skeletal(a.sigma, a.penalty,
                                                           a.structure == "zeta-squared" ? KernelStructure::ZetaSquared
                                                                                         : KernelStructure::AnnPhase);
    kernel.validate();

    fs::create_directories(a.out);
    const std::string manifest_path = (fs::path(a.out) / "manifest.json").string();
    AssetManifest manifest;
    if (fs::exists(manifest_path) && a.scene.empty() && inputs.size() == 1) manifest = load_manifest(manifest_path);
    manifest.dir = a.out;
    manifest.scene = a.scene;

    std::cerr << std::left << std::setw(12) << "part" << std::right << std::setw(12) << "field s" << std::setw(12)
              << "dft s" << std::setw(12) << "vector s" << std::setw(12) << "write s" << std::setw(12) << "samples"
              << std::setw(10) << "excluded" << "\n";
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const Input& in = inputs[i];
        const Solid& partner = inputs.size() == 2 ? inputs[1 - i].solid : in.solid;
        SampleGrid grid = part_grid(in.solid, n, h);
        check_padding(in.solid, partner, grid);
        const bool movable = in.role == "moving";

        BuiltAsset built;
        if (a.indicator) {
            auto t0 = std::chrono::steady_clock::now();
            built.field = indicator_field(in.solid, grid);
            built.times.field_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            t0 = std::chrono::steady_clock::now();
            built.asset = make_asset(in.id, built.field.field, in.solid.bbox(), kernel, movable);
            built.times.dft_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        } else {
            built = build_asset(in.id, in.solid, grid, kernel, {}, movable);
        }

        auto t0 = std::chrono::steady_clock::now();
        ManifestPart part;
        part.id = in.id;
        part.role = in.role;
        part.kernel = kernel;
        part.grid = grid;
        part.support = in.solid.bbox();
        part.solid = in.id + solid_extension(in.solid);
        save_solid(in.solid, (fs::path(a.out) / part.solid).string());
        part.solid_sha256 = sha256_file((fs::path(a.out) / part.solid).string());
        part.field = in.id + ".gfld";
        write_field(built.field.field, (fs::path(a.out) / part.field).string());
        part.field_sha256 = sha256_file((fs::path(a.out) / part.field).string());
        auto store = [&](const Spectrum& s, const std::string& name) {
            std::string path = (fs::path(a.out) / name).string();
            if (a.modes == 0)
                write_spectrum(s, path);
            else
                write_spectrum(truncate(s, a.modes), path);
            return sha256_file(path);
        };
        part.spectrum = in.id + ".gspc";
        part.spectrum_sha256 = store(built.asset.scalar, part.spectrum);
        for (std::size_t c = 0; c < built.asset.vector.size(); ++c) {
            std::string name = in.id + ".v" + std::to_string(c) + ".gspc";
            part.vector.push_back(name);
            part.vector_sha256.push_back(store(built.asset.vector[c], name));
        }
        double write_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        auto it = std::find_if(manifest.parts.begin(), manifest.parts.end(),
                               [&](const ManifestPart& p) { return p.id == part.id; });
        if (it != manifest.parts.end())
            *it = part;
        else
            manifest.parts.push_back(part);

        json line = {{"part", in.id},
                     {"role", in.role},
                     {"grid", n},
                     {"spacing", h},
                     {"field_s", built.times.field_s},
                     {"dft_s", built.times.dft_s},
                     {"vector_s", built.times.vector_s},
                     {"write_s", write_s},
                     {"samples", built.field.stats.samples},
                     {"excluded_nodes", built.field.stats.excluded_nodes},
                     {"pmc_failures", built.field.failures.size()}};
        std::cout << line.dump() << std::endl;
        std::cerr << std::left << std::setw(12) << in.id << std::right << std::fixed << std::setprecision(3)
                  << std::setw(12) << built.times.field_s << std::setw(12) << built.times.dft_s << std::setw(12)
                  << built.times.vector_s << std::setw(12) << write_s << std::setw(12) << built.field.stats.samples
                  << std::setw(10) << built.field.stats.excluded_nodes << "\n";
    }
    write_manifest(manifest, manifest_path);
    std::cout << json{{"manifest", manifest_path}}.dump() << std::endl;
    return 0;
}

// ---- field

struct FieldArgs {
    PairSource src;
    std::string rotation;
    std::string modes;
    double slice_z = 0;
    std::string out;
};

int cmd_field(const FieldArgs& a) {
    if (a.out.empty()) throw UsageError("--out is required");
    auto pair = load_pair(a.src);
    const int dim = pair->fixed.grid.dim;
    Mat3 R = parse_rotation(a.rotation, dim);
    std::vector<std::size_t> sweep = parse_modes(a.modes);
    if (sweep.empty()) sweep.push_back(0);
    fs::create_directories(a.out);

    for (std::size_t m : sweep) {
        ScoreField sf = score_field(pair->fixed, pair->moving, R, m);
        const SampleGrid& g = sf.values.grid;
        std::size_t kz = 0;
        if (dim == 3) {
            double u = std::round((a.slice_z - g.origin.z()) / g.spacing);
            if (u < 0 || u >= double(g.dims[2])) throw Error("slice z outside the translation grid");
            kz = std::size_t(u);
        }
        const std::size_t w = g.dims[0], h = g.dims[1];
        // image rows top to bottom = y descending
        std::vector<double> values(w * h);
        std::vector<std::uint8_t> mask(w * h);
        double best = -std::numeric_limits<double>::infinity();
        std::size_t best_idx = 0;
        bool any = false;
        for (std::size_t i = 0; i < w; ++i)
            for (std::size_t j = 0; j < h; ++j) {
                std::size_t idx = g.index(i, j, kz);
                std::size_t o = (h - 1 - j) * w + i;
                values[o] = sf.values.values[idx].real();
                mask[o] = sf.wrap[idx];
                if (!sf.wrap[idx] && values[o] > best) {
                    best = values[o];
                    best_idx = idx;
                    any = true;
                }
            }
        std::string tag = "field_m" + std::to_string(m == 0 ? g.size() : m);
        fs::path base = fs::path(a.out) / tag;
        write_heatmap_png(base.string() + ".png", w, h, values, mask);
        write_heatmap_csv(base.string() + ".csv", w, h, values, mask);
        write_field(sf.values, base.string() + ".gfld");
        std::size_t masked = std::count(mask.begin(), mask.end(), std::uint8_t(1));
        json side = {{"modes", m == 0 ? g.size() : m},
                     {"dimension", dim},
                     {"width", w},
                     {"height", h},
                     {"rows", "y descending"},
                     {"origin", vec_json(g.origin, dim)},
                     {"spacing", g.spacing},
                     {"slice_z_index", kz},
                     {"masked_cells", masked},
                     {"full_mask", masked == w * h},
                     {"wrap_b64", base64_encode(mask.data(), mask.size())}};
        if (any) {
            auto c = g.unravel(best_idx);
            side["argmax_cell"] = {c[0], c[1], c[2]};
            side["argmax_translation"] = vec_json(g.node(best_idx), dim);
            side["max_re_score"] = best;
        }
        write_file(base.string() + ".json", side.dump(2) + "\n");
        json line = {{"modes", side["modes"]}, {"png", base.string() + ".png"}, {"csv", base.string() + ".csv"},
                     {"full_mask", masked == w * h}};
        if (any) {
            line["argmax_cell"] = side["argmax_cell"];
            line["argmax_translation"] = side["argmax_translation"];
            line["max_re_score"] = best;
        }
        std::cout << line.dump() << std::endl;
    }
    return 0;
}

// ---- eval

struct EvalArgs {
    PairSource src;
    std::string rotation;
    std::string translation;
    std::string config;
    std::size_t modes = 0;
    bool oracle = false;
};

int cmd_eval(const EvalArgs& a) {
    // validate the configuration before any expensive loading
    auto pair_dim = [&]() -> int {
        if (!a.src.scene.empty()) return builtin_scene(a.src.scene).fixed.dimension();
        return -1;
    };
    int dim = pair_dim();
    std::optional<Configuration> early;
    if (!a.config.empty() && dim > 0) early = parse_config_json(a.config, dim);
    if (a.config.empty() && dim > 0) {
        parse_rotation(a.rotation, dim);
        parse_translation(a.translation, dim);
    }
    auto pair = load_pair(a.src);
    dim = pair->fixed.grid.dim;
    Configuration c;
    if (early)
        c = *early;
    else if (!a.config.empty())
        c = parse_config_json(a.config, dim);
    else if (a.translation.empty() && a.rotation.empty())
        c = pair->start;
    else
        c = dim == 2 ? Configuration{2, parse_rotation(a.rotation, 2), parse_translation(a.translation, 2)}
                     : Configuration::spatial(parse_rotation(a.rotation, 3), parse_translation(a.translation, 3));
    c = c.orthonormalized();

    PairEvaluator ev(pair->fixed, pair->moving, a.modes);
    ev.evaluate(c);  // warm
    EnergyEval e = ev.evaluate(c);
    json j = eval_json(e, dim);
    j["translation"] = vec_json(c.translation, dim);
    if (dim == 2) j["theta"] = c.angle();
    j["wrap"] = wrap_contaminated(pair->fixed, pair->moving, c.rotation, c.translation);
    if (a.oracle) {
        auto fields = load_fields(a.src);
        cplx brute = oracle::brute_score(fields.first, fields.second, c);
        const double h = pair->fixed.grid.spacing;
        auto fd = oracle::fd_gradient([&](const Configuration& q) { return ev.score(q); }, c, 1e-3 * h, 1e-4);
        j["oracle"] = {{"brute_score_re", brute.real()},
                       {"brute_score_im", brute.imag()},
                       {"fd_force", vec_json(fd.translation.real(), dim)},
                       {"fd_torque", dim == 2 ? json(fd.rotation.real().z()) : vec_json(fd.rotation.real(), 3)}};
    }
    std::cout << j.dump() << std::endl;
    return 0;
}

// ---- bench

struct BenchArgs {
    PairSource src;
    std::string modes = "";
    std::size_t iterations = 2000;
    std::string report;
    std::uint64_t seed = 7;
};

int cmd_bench(const BenchArgs& a) {
    auto pair = load_pair(a.src);
    const int dim = pair->fixed.grid.dim;
    std::vector<std::size_t> sweep = parse_modes(a.modes);
    if (sweep.empty()) {
        for (std::size_t s : {1, 4, 8, 16, 32, 64})
            if (s <= pair->fixed.grid.dims[0]) sweep.push_back(dim == 2 ? s * s : s * s * s);
    }
    std::sort(sweep.begin(), sweep.end());
    if (a.iterations == 0) throw UsageError("--iterations must be positive");

    // random poses around the nominal one, same sequence for every m'
    std::mt19937_64 rng(a.seed);
    const double h = pair->fixed.grid.spacing;
    std::uniform_real_distribution<double> ut(-8 * h, 8 * h), ua(-0.3, 0.3);
    std::vector<Configuration> poses;
    for (std::size_t i = 0; i < a.iterations; ++i) {
        Configuration c = pair->start;
        for (int k = 0; k < dim; ++k) c.translation[k] += ut(rng);
        if (dim == 2) {
            c = Configuration::planar(c.angle() + ua(rng), c.translation.x(), c.translation.y());
        } else {
            Vec3 axis(ua(rng), ua(rng), ua(rng));
            c.rotation = Eigen::AngleAxisd(axis.norm(), axis.normalized()).toRotationMatrix() * c.rotation;
        }
        poses.push_back(c);
    }

    json rows = json::array();
    std::size_t m0 = 0;
    bool monotone = true;
    double prev_p50 = 0;
    std::cerr << std::setw(10) << "modes" << std::setw(12) << "p50 us" << std::setw(12) << "p95 us" << std::setw(12)
              << "p99 us" << std::setw(10) << "<1ms" << "\n";
    for (std::size_t m : sweep) {
        PairEvaluator ev(pair->fixed, pair->moving, m);
        for (std::size_t i = 0; i < std::min<std::size_t>(50, poses.size()); ++i) ev.evaluate(poses[i]);
        std::vector<double> us;
        us.reserve(poses.size());
        for (const auto& c : poses) us.push_back(ev.evaluate(c).eval_time_us);
        std::sort(us.begin(), us.end());
        auto pct = [&](double p) { return us[std::min(us.size() - 1, std::size_t(std::ceil(p * double(us.size()))) - 1)]; };
        double p50 = pct(0.5), p95 = pct(0.95), p99 = pct(0.99);
        bool ok = p99 < 1000.0;
        if (ok) m0 = m;
        // 5% slack absorbs timer jitter between neighbouring sizes
        if (!rows.empty() && p50 < prev_p50 * 0.95) monotone = false;
        prev_p50 = p50;
        json row = {{"modes", ev.modes()}, {"p50_us", p50}, {"p95_us", p95}, {"p99_us", p99}, {"within_1ms", ok},
                    {"iterations", us.size()}};
        rows.push_back(row);
        std::cout << row.dump() << std::endl;
        std::cerr << std::setw(10) << ev.modes() << std::fixed << std::setprecision(2) << std::setw(12) << p50
                  << std::setw(12) << p95 << std::setw(12) << p99 << std::setw(10) << (ok ? "yes" : "no") << "\n";
    }
    json summary = {{"summary", true},
                    {"scene", pair->name},
                    {"dimension", dim},
                    {"grid", pair->fixed.grid.dims[0]},
                    {"threads", 1},
                    {"max_modes_within_1ms", m0},
                    {"p50_monotone", monotone},
                    {"rows", rows}};
    std::cout << json{{"summary", true}, {"max_modes_within_1ms", m0}, {"p50_monotone", monotone}}.dump() << std::endl;
    if (!a.report.empty()) write_file(a.report, summary.dump(2) + "\n");
    return 0;
}

// ---- oracle

struct OracleArgs {
    std::string solid;
    std::size_t points = 10000;
    PairSource src;
    std::size_t samples = 20;
    std::uint64_t seed = 11;
};

int cmd_oracle(const OracleArgs& a) {
    if (!a.solid.empty()) {
        Solid s = load_solid(a.solid);
        std::mt19937_64 rng(a.seed);
        Aabb b = s.bbox();
        Vec3 pad = 0.25 * b.extent();
        std::uniform_real_distribution<double> u(0, 1);
        std::size_t agree = 0, tested = 0, failures = 0;
        double worst_in = 0, worst_out = 0;
        const double off = 1e-3 * b.diagonal();
        while (tested < a.points) {
            Vec3 p = Vec3::Zero();
            for (int k = 0; k < s.dimension(); ++k) p[k] = b.min[k] - pad[k] + u(rng) * (b.extent()[k] + 2 * pad[k]);
            if (s.distance(p) < off) continue;
            ++tested;
            double w;
            try {
                w = point_membership(s, p);
            } catch (const PmcError&) {
                ++failures;
                continue;
            }
            bool ray = oracle::raycast_pmc(s, p);
            if ((w >= 0.5) == ray) ++agree;
            if (ray)
                worst_in = std::max(worst_in, std::abs(w - 1));
            else
                worst_out = std::max(worst_out, std::abs(w));
        }
        json j = {{"check", "pmc"},        {"points", tested},          {"agree", agree},
                  {"pmc_failures", failures}, {"max_interior_dev", worst_in}, {"max_exterior_dev", worst_out}};
        std::cout << j.dump() << std::endl;
        return 0;
    }
    // Indicator fields have compact support, so the circular spectral sum and
    // the brute-force overlap coincide away from the grid edge.
    auto pair = load_pair(a.src);
    std::pair<Solid, Solid> solids;
    if (pair->scene) {
        solids = {pair->scene->fixed, pair->scene->moving};
    } else {
        AssetManifest m = load_manifest(a.src.manifest);
        auto solid_of = [&](const std::string& role) { return load_solid((fs::path(m.dir) / m.by_role(role).solid).string()); };
        solids = {solid_of("fixed"), solid_of("moving")};
    }
    ComplexField f1 = indicator_field(solids.first, pair->fixed.grid).field;
    ComplexField f2 = indicator_field(solids.second, pair->moving.grid).field;
    PartAsset fixed = make_asset("fixed", f1, solids.first.bbox(), KernelSpec::winding(), false);
    PartAsset moving = make_asset("moving", f2, solids.second.bbox(), KernelSpec::winding(), true);
    const int dim = fixed.grid.dim;
    const double h = fixed.grid.spacing;
    // scores near zero are compared against a small fraction of the Cauchy-Schwarz bound
    double n1 = 0, n2 = 0;
    for (auto v : f1.values) n1 += std::norm(v);
    for (auto v : f2.values) n2 += std::norm(v);
    const double floor = 1e-6 * std::sqrt(n1 * n2) * fixed.grid.cell_volume();

    Configuration centre = pair->scene ? pair->scene->snap : pair->start;
    std::mt19937_64 rng(a.seed);
    std::uniform_int_distribution<int> ui(-6, 6);
    PairEvaluator ev(fixed, moving);
    double worst = 0;
    std::size_t done = 0;
    for (std::size_t i = 0; i < a.samples * 20 && done < a.samples; ++i) {
        Configuration c = centre;
        for (int k = 0; k < dim; ++k) c.translation[k] = h * std::round(c.translation[k] / h) + h * ui(rng);
        if (wrap_contaminated(fixed, moving, c.rotation, c.translation)) continue;
        cplx s = ev.score(c), b = oracle::brute_score(f1, f2, c);
        double rel = std::abs(s - b) / std::max(std::abs(b), floor);
        worst = std::max(worst, rel);
        std::cout << json{{"translation", vec_json(c.translation, dim)},
                          {"score_re", s.real()},
                          {"brute_re", b.real()},
                          {"rel_err", rel}}
                         .dump()
                  << std::endl;
        ++done;
    }
    std::cout << json{{"check", "score"}, {"fields", "indicator"}, {"samples", done}, {"max_rel_err", worst}}.dump()
              << std::endl;
    return 0;
}

// ---- serve

std::atomic<Server*> g_server{nullptr};

void on_signal(int) {
    if (Server* s = g_server.load()) s->stop();
}

int cmd_serve(unsigned short port, const std::string& bind, const std::string& static_root, const std::string& assets) {
    ServerOptions opt;
    opt.bind = bind;
    opt.port = port;
    opt.static_root = static_root;
    opt.asset_dir = assets;
    Server server(opt);
    unsigned short bound = server.start();
    std::cout << json{{"listening", bound}, {"bind", bind}}.dump() << std::endl;
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    server.wait();
    g_server = nullptr;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"geofield: skeletal density fields and spectral geometric energy for rigid assembly"};
    app.require_subcommand(0, 1);
    int threads = 0;
    app.add_option("--threads", threads, "worker threads (default GEOFIELD_THREADS or all cores)")->check(CLI::NonNegativeNumber);
    int serve_port = -1;
    app.add_option("--serve", serve_port, "shortcut for 'serve --port PORT'")->check(CLI::Range(0, 65535));

    PrecomputeArgs pre;
    auto* precompute = app.add_subcommand("precompute", "build fields and spectra for one or two solids or a scene");
    precompute->add_option("solids", pre.solids, "solid files (.obj, .stl, .json polygon); first is fixed");
    precompute->add_option("--scene", pre.scene, "built-in scene id")->check(CLI::IsMember(scene_ids()));
    precompute->add_option("--grid", pre.grid, "nodes per axis (power of two)");
    precompute->add_option("--spacing", pre.spacing, "grid spacing (default: smallest satisfying the padding rule)");
    precompute->add_option("--sigma", pre.sigma, "thickness factor")->check(CLI::PositiveNumber);
    precompute->add_option("--penalty", pre.penalty, "penalty factor")->check(CLI::PositiveNumber);
    precompute->add_option("--structure", pre.structure, "kernel phase structure")
        ->check(CLI::IsMember({"ann-phase", "zeta-squared"}));
    precompute->add_flag("--indicator", pre.indicator, "store indicator fields instead of affinity fields");
    precompute->add_option("--role", pre.role, "role of a single solid")->check(CLI::IsMember({"fixed", "moving"}));
    precompute->add_option("--modes", pre.modes, "store only a centred window of M' modes (default all)");
    precompute->add_option("--out", pre.out, "output directory")->required();

    FieldArgs fa;
    auto* field = app.add_subcommand("field", "export the Re-score landscape over translations");
    add_pair_options(field, fa.src);
    field->add_option("--rotation", fa.rotation, "angle in radians (2D) or \"w,x,y,z\" (3D)");
    field->add_option("--modes", fa.modes, "M' or a comma-separated sweep (default all)");
    field->add_option("--slice-z", fa.slice_z, "translation z of the exported slice (3D)");
    field->add_option("--out", fa.out, "output directory")->required();

    EvalArgs ea;
    auto* eval = app.add_subcommand("eval", "evaluate one configuration and print a JSON line");
    add_pair_options(eval, ea.src);
    eval->add_option("--rotation", ea.rotation, "angle in radians (2D) or \"w,x,y,z\" (3D)");
    eval->add_option("--translation", ea.translation, "\"x,y[,z]\"");
    eval->add_option("--config", ea.config, "configuration as JSON");
    eval->add_option("--modes", ea.modes, "retained modes M' (default all)");
    eval->add_flag("--oracle", ea.oracle, "also report brute-force score and finite-difference gradients");

    BenchArgs ba;
    auto* bench = app.add_subcommand("bench", "latency percentiles of single-configuration evaluation");
    add_pair_options(bench, ba.src);
    bench->add_option("--modes", ba.modes, "comma-separated M' list");
    bench->add_option("--iterations", ba.iterations, "evaluations per M'");
    bench->add_option("--report", ba.report, "write the JSON report here");
    bench->add_option("--seed", ba.seed, "pose sequence seed");

    OracleArgs oa;
    auto* orc = app.add_subcommand("oracle", "run the reference implementations");
    orc->add_option("--solid", oa.solid, "classify random points by winding number and ray casting");
    orc->add_option("--points", oa.points, "points for --solid");
    add_pair_options(orc, oa.src);
    orc->add_option("--samples", oa.samples, "configurations for the score check");
    orc->add_option("--seed", oa.seed, "sampling seed");
    orc->add_flag("--oracle", "accepted for symmetry with eval");

    unsigned short port = 8080;
    std::string bind = "127.0.0.1", static_root, asset_dir;
    auto* serve = app.add_subcommand("serve", "run the sandbox service (HTTP + WebSocket)");
    serve->add_option("--port,--serve", port, "port, 0 picks a free one");
    serve->add_option("--bind", bind, "bind address");
    serve->add_option("--static", static_root, "directory of the UI bundle");
    serve->add_option("--assets", asset_dir, "directory of precomputed scenes");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        set_threads(threads);
        if (serve_port >= 0) return cmd_serve(static_cast<unsigned short>(serve_port), bind, static_root, asset_dir);
        if (*precompute) return cmd_precompute(pre);
        if (*field) return cmd_field(fa);
        if (*eval) return cmd_eval(ea);
        if (*bench) return cmd_bench(ba);
        if (*orc) return cmd_oracle(oa);
        if (*serve) return cmd_serve(port, bind, static_root, asset_dir);
        std::cerr << app.help();
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const geofield::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
