#include "geofield/session.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>

#include "geofield/io.hpp"

namespace geofield {

using nlohmann::json;

double estimate_peak_force(const PartAsset& fixed, const PartAsset& moving) {
    ScoreField sf = score_field(fixed, moving, Mat3::Identity());
    const SampleGrid& g = sf.values.grid;
    const std::size_t nx = g.dims[0], ny = g.dims[1], nz = g.dims[2];
    double peak = 0;
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
        if (sf.wrap[idx]) continue;
        auto c = g.unravel(idx);
        double grad2 = 0;
        bool ok = true;
        for (int a = 0; a < g.dim && ok; ++a) {
            std::array<std::size_t, 3> lo = c, hi = c;
            std::size_t n = a == 0 ? nx : a == 1 ? ny : nz;
            if (c[a] == 0 || c[a] + 1 >= n) {
                ok = false;
                break;
            }
            lo[a] -= 1;
            hi[a] += 1;
            std::size_t il = g.index(lo[0], lo[1], lo[2]), ih = g.index(hi[0], hi[1], hi[2]);
            if (sf.wrap[il] || sf.wrap[ih]) {
                ok = false;
                break;
            }
            double d = (sf.values.values[ih].real() - sf.values.values[il].real()) / (2 * g.spacing);
            grad2 += d * d;
        }
        if (ok) peak = std::max(peak, std::sqrt(grad2));
    }
    return peak;
}

namespace {

std::mutex& cache_mutex() {
    static std::mutex mu;
    return mu;
}

std::map<std::string, std::shared_ptr<const PairAssets>>& cache() {
    static std::map<std::string, std::shared_ptr<const PairAssets>> c;
    return c;
}

Configuration default_start(const PartAsset& fixed, const PartAsset& moving) {
    // moving part centred above the fixed part with a gap of a quarter of its height
    Vec3 cf = fixed.support.center(), cm = moving.support.center();
    double hm = moving.support.extent().y();
    double y = fixed.support.max.y() - moving.support.min.y() + 0.25 * hm;
    return Configuration::planar(0.0, cf.x() - cm.x(), y);
}

}  // namespace

std::shared_ptr<const PairAssets> manifest_assets(const std::string& manifest_path) {
    AssetManifest m = load_manifest(manifest_path);
    auto out = std::make_shared<PairAssets>();
    out->name = manifest_path;
    out->fixed = load_part_asset(m, m.by_role("fixed"));
    out->moving = load_part_asset(m, m.by_role("moving"));
    check_compatible(out->fixed, out->moving);
    if (!m.scene.empty()) {
        out->scene = std::make_shared<const Scene>(builtin_scene(m.scene));
        out->start = out->scene->start;
    } else {
        out->start = default_start(out->fixed, out->moving);
    }
    out->peak_force = estimate_peak_force(out->fixed, out->moving);
    return out;
}

std::shared_ptr<const PairAssets> scene_assets(const std::string& scene_id, const std::string& asset_dir) {
    std::lock_guard<std::mutex> lk(cache_mutex());
    std::string key = scene_id + "|" + asset_dir;
    auto it = cache().find(key);
    if (it != cache().end()) return it->second;

    std::shared_ptr<const PairAssets> built;
    std::string manifest = asset_dir.empty() ? "" : (std::filesystem::path(asset_dir) / scene_id / "manifest.json").string();
    if (!manifest.empty() && std::filesystem::exists(manifest)) {
        built = manifest_assets(manifest);
    } else {
        auto scene = std::make_shared<const Scene>(builtin_scene(scene_id));
        auto out = std::make_shared<PairAssets>();
        out->name = scene_id;
        out->scene = scene;
        const KernelSpec k = KernelSpec::skeletal(0.5, 3.0);
        SampleGrid gf = part_grid(scene->fixed, scene->n, scene->spacing);
        SampleGrid gm = part_grid(scene->moving, scene->n, scene->spacing);
        check_padding(scene->fixed, scene->moving, gf);
        check_padding(scene->moving, scene->fixed, gm);
        out->fixed = build_asset("fixed", scene->fixed, gf, k, {}, false).asset;
        out->moving = build_asset("moving", scene->moving, gm, k, {}, true).asset;
        out->start = scene->start;
        out->peak_force = estimate_peak_force(out->fixed, out->moving);
        built = out;
    }
    cache()[key] = built;
    return built;
}

FieldSlice compute_field_slice(const PairAssets& assets, double theta, std::size_t modes, std::size_t max_side) {
    if (assets.fixed.grid.dim != 2) throw Error("field slices need a 2D scene");
    if (max_side == 0 || max_side > 256) max_side = 256;
    Configuration rot = Configuration::planar(theta, 0, 0);
    ScoreField sf = score_field(assets.fixed, assets.moving, rot.rotation, modes);
    const SampleGrid& g = sf.values.grid;
    const std::size_t n = g.dims[0];
    std::size_t block = 1;
    while (n / block > max_side) block *= 2;
    FieldSlice s;
    s.theta = theta;
    s.modes = modes == 0 ? g.size() : modes;
    s.w = g.dims[0] / block;
    s.h = g.dims[1] / block;
    s.dx = s.dy = g.spacing * double(block);
    s.x0 = g.origin.x();
    s.y0 = g.origin.y();
    s.values.assign(s.w * s.h, 0.0f);
    s.mask.assign(s.w * s.h, 1);
    std::size_t masked = 0;
    for (std::size_t r = 0; r < s.h; ++r) {
        for (std::size_t c = 0; c < s.w; ++c) {
            double best = -std::numeric_limits<double>::infinity();
            bool any = false;
            for (std::size_t bi = 0; bi < block; ++bi)
                for (std::size_t bj = 0; bj < block; ++bj) {
                    std::size_t idx = g.index(c * block + bi, r * block + bj);
                    if (sf.wrap[idx]) continue;
                    any = true;
                    best = std::max(best, sf.values.values[idx].real());
                }
            std::size_t o = r * s.w + c;
            if (any) {
                s.values[o] = float(best);
                s.mask[o] = 0;
            } else {
                ++masked;
            }
        }
    }
    s.full_mask = masked == s.values.size();
    return s;
}

Session::Session(std::string id, std::string asset_dir)
    : id_(std::move(id)), asset_dir_(std::move(asset_dir)), frame_us_(kStatsCapacity, 0.0) {}

void Session::load_scene(const std::string& scene_id) { attach(scene_assets(scene_id, asset_dir_)); }

void Session::load_manifest(const std::string& path) { attach(manifest_assets(path)); }

void Session::attach(std::shared_ptr<const PairAssets> assets) {
    if (assets->fixed.grid.dim != 2) throw Error("interactive sessions support 2D scenes only");
    std::size_t side = std::min<std::size_t>(64, assets->fixed.grid.dims[0]);
    std::size_t modes = side * side;
    auto ev = std::make_shared<const PairEvaluator>(assets->fixed, assets->moving, modes);
    std::lock_guard<std::mutex> lk(mu_);
    assets_ = std::move(assets);
    evaluator_ = std::move(ev);
    modes_ = modes;
    config_ = assets_->start;
    mode_ = DriveMode::Direct;
    // a force of 10% of the peak moves half a cell per frame; the clamp caps larger ones
    const double h = assets_->fixed.grid.spacing;
    damping_ = assets_->peak_force > 0 ? 0.1 * assets_->peak_force * kFrameDt / (0.5 * h) : 1.0;
    frame_head_ = frame_count_ = 0;
}

bool Session::loaded() const {
    std::lock_guard<std::mutex> lk(mu_);
    return assets_ != nullptr;
}

std::shared_ptr<const PairAssets> Session::assets() const {
    std::lock_guard<std::mutex> lk(mu_);
    return assets_;
}

EnergyEval Session::eval_locked(const Configuration& c) {
    EnergyEval e = evaluator_->evaluate(c);
    frame_us_[frame_head_] = e.eval_time_us;
    frame_head_ = (frame_head_ + 1) % kStatsCapacity;
    frame_count_ = std::min(frame_count_ + 1, kStatsCapacity);
    return e;
}

// Translation-only first-order step x += (F/c) dt, clamped to half a cell and
// shortened until the energy does not increase.
EnergyEval Session::damped_step(const EnergyEval& at) {
    const double h = assets_->fixed.grid.spacing;
    Vec3 dx = at.force * (kFrameDt / damping_);
    dx.z() = 0;
    const double len = dx.norm();
    if (len > 0.5 * h) dx *= 0.5 * h / len;
    for (int tries = 0; tries < 8 && dx.norm() > 1e-12 * h; ++tries) {
        Configuration next = config_;
        next.translation += dx;
        EnergyEval e = eval_locked(next);
        if (e.energy <= at.energy) {
            config_ = next;
            return e;
        }
        dx *= 0.5;
    }
    return at;
}

EnergyEval Session::pose(const Configuration& c) {
    std::lock_guard<std::mutex> lk(mu_);
    if (!evaluator_) throw Error("no scene loaded");
    config_ = c.orthonormalized();
    EnergyEval e = eval_locked(config_);
    if (mode_ == DriveMode::Damped) e = damped_step(e);
    return e;
}

EnergyEval Session::tick() {
    std::lock_guard<std::mutex> lk(mu_);
    if (!evaluator_) throw Error("no scene loaded");
    EnergyEval e = eval_locked(config_);
    if (mode_ == DriveMode::Damped) e = damped_step(e);
    return e;
}

void Session::set_modes(std::size_t m_prime) {
    std::shared_ptr<const PairAssets> a = assets();
    if (!a) throw Error("no scene loaded");
    auto ev = std::make_shared<const PairEvaluator>(a->fixed, a->moving, m_prime);
    std::lock_guard<std::mutex> lk(mu_);
    evaluator_ = std::move(ev);
    modes_ = m_prime;
}

void Session::set_mode(DriveMode m) {
    std::lock_guard<std::mutex> lk(mu_);
    mode_ = m;
}

void Session::set_damping(double c) {
    if (!(c > 0) || !std::isfinite(c)) throw Error("damping must be positive");
    std::lock_guard<std::mutex> lk(mu_);
    damping_ = c;
}

FieldSlice Session::field_slice(double theta, std::size_t modes, std::size_t max_side) const {
    std::shared_ptr<const PairAssets> a;
    {
        std::lock_guard<std::mutex> lk(mu_);
        a = assets_;
        if (modes == 0) modes = modes_;
    }
    if (!a) throw Error("no scene loaded");
    return compute_field_slice(*a, theta, modes, max_side);
}

FrameStats Session::stats() const {
    std::vector<double> v;
    {
        std::lock_guard<std::mutex> lk(mu_);
        v.reserve(frame_count_);
        for (std::size_t i = 0; i < frame_count_; ++i)
            v.push_back(frame_us_[(frame_head_ + kStatsCapacity - frame_count_ + i) % kStatsCapacity]);
    }
    FrameStats s;
    s.frames = v.size();
    if (v.empty()) return s;
    double sum = 0;
    for (double x : v) sum += x;
    s.mean_us = sum / double(v.size());
    std::sort(v.begin(), v.end());
    auto pct = [&](double p) { return v[std::min(v.size() - 1, std::size_t(std::ceil(p * double(v.size()))) - 1)]; };
    s.p50_us = pct(0.50);
    s.p95_us = pct(0.95);
    s.p99_us = pct(0.99);
    s.max_us = v.back();
    return s;
}

json Session::eval_json(const EnergyEval& e) const {
    return {{"t", "eval"},
            {"score_re", e.score.real()},
            {"score_im", e.score.imag()},
            {"energy", e.energy},
            {"fx", e.force.x()},
            {"fy", e.force.y()},
            {"torque", e.torque.z()},
            {"us", e.eval_time_us},
            {"modes", e.modes_used},
            {"x", config_.translation.x()},
            {"y", config_.translation.y()},
            {"theta", config_.angle()},
            {"mode", mode_ == DriveMode::Damped ? "damped" : "direct"}};
}

json Session::scene_json() const {
    json j = {{"t", "scene"}, {"scene", assets_->name}, {"modes", modes_}, {"damping", damping_}};
    const SampleGrid& g = assets_->fixed.grid;
    j["window_max"] = g.dims[0] * g.dims[1];
    j["spacing"] = g.spacing;
    if (assets_->scene) {
        auto loops = [](const Solid& s) { return json::parse(write_poly_json(s.polygon()))["loops"]; };
        j["fixed"] = loops(assets_->scene->fixed);
        j["moving"] = loops(assets_->scene->moving);
        j["snap"] = {{"x", assets_->scene->snap.translation.x()},
                     {"y", assets_->scene->snap.translation.y()},
                     {"theta", assets_->scene->snap.angle()}};
    }
    return j;
}

namespace {

json error_json(const std::string& of, const std::string& message) {
    return {{"t", "error"}, {"of", of}, {"message", message}};
}

double number(const json& msg, const char* key) {
    if (!msg.contains(key) || !msg[key].is_number()) throw Error(std::string("missing numeric field '") + key + "'");
    return msg[key].get<double>();
}

}  // namespace

std::vector<json> Session::handle(const json& msg) {
    if (!msg.is_object() || !msg.contains("t") || !msg["t"].is_string())
        return {error_json("", "message must be an object with a string 't' field")};
    const std::string t = msg["t"].get<std::string>();
    try {
        if (t == "hello") {
            int v = msg.value("v", 0);
            if (v != 1)
                return {error_json("hello", "protocol version mismatch: server speaks v1, client sent v" + std::to_string(v))};
            return {{{"t", "hello"}, {"v", 1}, {"server", "geofield"}, {"session", id_}, {"scenes", scene_ids()}}};
        }
        if (t == "load_scene") {
            if (!msg.contains("scene") || !msg["scene"].is_string()) throw Error("missing 'scene'");
            load_scene(msg["scene"].get<std::string>());
            Configuration start = assets()->start;
            EnergyEval e = pose(start);
            std::lock_guard<std::mutex> lk(mu_);
            return {scene_json(), eval_json(e)};
        }
        if (t == "pose") {
            Configuration c = Configuration::planar(number(msg, "theta"), number(msg, "x"), number(msg, "y"));
            EnergyEval e = pose(c);
            std::lock_guard<std::mutex> lk(mu_);
            return {eval_json(e)};
        }
        if (t == "tick") {
            int frames = msg.value("frames", 1);
            if (frames < 1 || frames > 10000) throw Error("frames must be in [1, 10000]");
            EnergyEval e;
            for (int i = 0; i < frames; ++i) e = tick();
            std::lock_guard<std::mutex> lk(mu_);
            return {eval_json(e)};
        }
        if (t == "set_params") {
            for (const char* k : {"sigma", "lambda_in", "lambda_out", "lambda", "penalty"})
                if (msg.contains(k))
                    return {error_json("set_params", std::string("'") + k +
                                                         "' is baked into the precomputed spectra; rerun precompute to change it")};
            if (msg.contains("modes")) {
                if (!msg["modes"].is_number_integer() || msg["modes"].get<long long>() <= 0)
                    throw Error("'modes' must be a positive integer");
                set_modes(msg["modes"].get<std::size_t>());
            }
            if (msg.contains("mode")) {
                std::string m = msg["mode"].get<std::string>();
                if (m == "direct")
                    set_mode(DriveMode::Direct);
                else if (m == "damped")
                    set_mode(DriveMode::Damped);
                else
                    throw Error("mode must be 'direct' or 'damped'");
            }
            if (msg.contains("damping")) set_damping(number(msg, "damping"));
            if (msg.contains("display_scale")) {
                double s = number(msg, "display_scale");
                if (!(s > 0)) throw Error("display_scale must be positive");
                std::lock_guard<std::mutex> lk(mu_);
                display_scale_ = s;
            }
            std::lock_guard<std::mutex> lk(mu_);
            return {{{"t", "ack"},
                     {"of", "set_params"},
                     {"modes", modes_},
                     {"mode", mode_ == DriveMode::Damped ? "damped" : "direct"},
                     {"damping", damping_},
                     {"display_scale", display_scale_}}};
        }
        if (t == "field_slice") {
            double theta = msg.value("theta", 0.0);
            std::size_t modes = msg.value("modes", std::size_t(0));
            std::size_t side = std::max(msg.value("w", std::size_t(256)), msg.value("h", std::size_t(256)));
            FieldSlice s = field_slice(theta, modes, side);
            return {{{"t", "field_slice"},
                     {"theta", s.theta},
                     {"modes", s.modes},
                     {"w", s.w},
                     {"h", s.h},
                     {"x0", s.x0},
                     {"y0", s.y0},
                     {"dx", s.dx},
                     {"dy", s.dy},
                     {"full_mask", s.full_mask},
                     {"data_b64", base64_encode(s.values.data(), s.values.size() * sizeof(float))},
                     {"mask_b64", base64_encode(s.mask.data(), s.mask.size())}}};
        }
        if (t == "stats") {
            FrameStats s = stats();
            std::lock_guard<std::mutex> lk(mu_);
            return {{{"t", "stats"},
                     {"frames", s.frames},
                     {"p50_us", s.p50_us},
                     {"p95_us", s.p95_us},
                     {"p99_us", s.p99_us},
                     {"max_us", s.max_us},
                     {"mean_us", s.mean_us},
                     {"modes", modes_}}};
        }
        return {error_json(t, "unknown message type '" + t + "'")};
    } catch (const std::exception& e) {
        return {error_json(t, e.what())};
    }
}

}  // namespace geofield
