#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "geofield/assets.hpp"
#include "geofield/scenes.hpp"

namespace geofield {

// Precomputed pair for a session. Immutable once built.
struct PairAssets {
    std::string name;
    std::shared_ptr<const Scene> scene;  // null for manifest-loaded pairs
    PartAsset fixed;
    PartAsset moving;
    Configuration start;
    double peak_force = 0;  // max |grad Re f| over the full-spectrum landscape at R = I
};

// Built-in scene assets, computed once per process (or read from
// asset_dir/<scene>/manifest.json when present).
std::shared_ptr<const PairAssets> scene_assets(const std::string& scene_id, const std::string& asset_dir = "");
std::shared_ptr<const PairAssets> manifest_assets(const std::string& manifest_path);
double estimate_peak_force(const PartAsset& fixed, const PartAsset& moving);

struct FieldSlice {
    double theta = 0;
    std::size_t modes = 0;
    std::size_t w = 0, h = 0;            // columns along x, rows along y (ascending)
    double x0 = 0, y0 = 0, dx = 0, dy = 0;  // translation of cell (0, 0) and cell size
    std::vector<float> values;           // Re score, block maximum over unmasked nodes
    std::vector<std::uint8_t> mask;      // 1 where every node of the block is wrap-contaminated
    bool full_mask = false;
};

FieldSlice compute_field_slice(const PairAssets& assets, double theta, std::size_t modes, std::size_t max_side);

enum class DriveMode { Direct, Damped };

struct FrameStats {
    std::size_t frames = 0;
    double p50_us = 0, p95_us = 0, p99_us = 0, max_us = 0, mean_us = 0;
};

class Session {
public:
    static constexpr std::size_t kStatsCapacity = 4096;
    static constexpr double kFrameDt = 1.0 / 60.0;

    explicit Session(std::string id = "s1", std::string asset_dir = "");

    void load_scene(const std::string& scene_id);
    void load_manifest(const std::string& path);
    void attach(std::shared_ptr<const PairAssets> assets);
    bool loaded() const;

    EnergyEval pose(const Configuration& c);
    EnergyEval tick();  // one autonomous frame; damped mode only moves the pose
    void set_modes(std::size_t m_prime);
    void set_mode(DriveMode m);
    void set_damping(double c);
    FieldSlice field_slice(double theta, std::size_t modes, std::size_t max_side = 256) const;
    FrameStats stats() const;

    const Configuration& configuration() const { return config_; }
    std::size_t modes() const { return modes_; }
    DriveMode mode() const { return mode_; }
    double damping() const { return damping_; }
    std::shared_ptr<const PairAssets> assets() const;

    // Wire protocol: one JSON request in, zero or more JSON replies out.
    std::vector<nlohmann::json> handle(const nlohmann::json& msg);

private:
    EnergyEval eval_locked(const Configuration& c);
    EnergyEval damped_step(const EnergyEval& at);
    nlohmann::json eval_json(const EnergyEval& e) const;
    nlohmann::json scene_json() const;

    std::string id_;
    std::string asset_dir_;
    mutable std::mutex mu_;
    std::shared_ptr<const PairAssets> assets_;
    std::shared_ptr<const PairEvaluator> evaluator_;
    Configuration config_ = Configuration::planar(0, 0, 0);
    std::size_t modes_ = 0;
    DriveMode mode_ = DriveMode::Direct;
    double damping_ = 0;
    double display_scale_ = 1.0;
    std::vector<double> frame_us_;  // ring buffer of kStatsCapacity
    std::size_t frame_head_ = 0;
    std::size_t frame_count_ = 0;
};

}  // namespace geofield
