#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mgd/canny.hpp"
#include "mgd/threads.hpp"
#include "mgd/world.hpp"

namespace mgd {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

struct WorldConfig {
    int64_t n_tiles = 2000;  // kept tiles
    int tile_size = 32;
    std::vector<GeoLocation> centers;
    double radius_km = 400.0;
    double d_min_km = 1.0;
    uint64_t seed = 7;
    double canny_low = 50.0;
    double canny_high = 100.0;

    // one center inside each region cell
    static std::vector<GeoLocation> default_centers() {
        return {GeoLocation(-20.0, -100.0), GeoLocation(-15.0, 20.0), GeoLocation(-10.0, 120.0),
                GeoLocation(35.0, -110.0),  GeoLocation(45.0, 10.0),  GeoLocation(60.0, 140.0)};
    }

    static WorldConfig defaults() {
        WorldConfig c;
        c.centers = default_centers();
        return c;
    }

    json to_json() const {
        json j;
        j["n_tiles"] = n_tiles;
        j["tile_size"] = tile_size;
        json cs = json::array();
        for (const auto& c : centers) cs.push_back({{"lat", c.lat}, {"lon", c.lon}});
        j["centers"] = cs;
        j["radius_km"] = radius_km;
        j["d_min_km"] = d_min_km;
        j["seed"] = seed;
        j["canny"] = {{"low", canny_low}, {"high", canny_high}};
        return j;
    }

    static WorldConfig from_json(const json& j) {
        WorldConfig c = defaults();
        try {
            if (j.contains("n_tiles")) c.n_tiles = j.at("n_tiles").get<int64_t>();
            if (j.contains("tile_size")) c.tile_size = j.at("tile_size").get<int>();
            if (j.contains("centers")) {
                c.centers.clear();
                for (const auto& e : j.at("centers"))
                    c.centers.emplace_back(e.at("lat").get<double>(), e.at("lon").get<double>());
            }
            if (j.contains("radius_km")) c.radius_km = j.at("radius_km").get<double>();
            if (j.contains("d_min_km")) c.d_min_km = j.at("d_min_km").get<double>();
            if (j.contains("seed")) c.seed = j.at("seed").get<uint64_t>();
            if (j.contains("canny")) {
                c.canny_low = j.at("canny").at("low").get<double>();
                c.canny_high = j.at("canny").at("high").get<double>();
            }
        } catch (const json::exception& e) {
            throw ConfigError(std::string("world config: ") + e.what());
        }
        if (c.n_tiles < 1 || c.tile_size < 8) throw ConfigError("world config: n_tiles/tile_size out of range");
        if (c.centers.empty()) throw ConfigError("world config: centers must be non-empty");
        return c;
    }
};

inline ControlImage seg_mask(const Tile& tile) {
    ControlImage c;
    c.kind = ControlKind::segmask;
    c.raster = render_mask(tile.layout);
    return c;
}

inline ControlImage osm_control(const Tile& tile) {
    ControlImage c;
    c.kind = ControlKind::osm;
    c.raster = tile.map_render;
    return c;
}

struct ManifestRow {
    uint64_t id = 0;
    double lat = 0, lon = 0;
    int region_id = 0;
    std::string caption;
    std::string path_layout, path_map, path_sat, path_canny, path_segmask;
    uint64_t seed = 0;
};

struct Manifest {
    std::vector<ManifestRow> rows;
    std::string dir;  // directory the relative paths resolve against

    std::string resolve(const std::string& rel) const { return (fs::path(dir) / rel).string(); }
};

inline Layout layout_from_png(const Image& img) {
    if (img.c != 1) throw IoError("layout png must be single channel");
    Layout lo(img.w);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x) {
            uint8_t v = img.at(x, y);
            if (v >= kNumClasses) throw IoError("layout png has invalid class id " + std::to_string(v));
            lo.at(x, y) = v;
        }
    return lo;
}

inline Image layout_to_png(const Layout& lo) {
    Image img(lo.size, lo.size, 1);
    for (int y = 0; y < lo.size; ++y)
        for (int x = 0; x < lo.size; ++x) img.at(x, y) = lo.at(x, y);
    return img;
}

// Builds the dataset under out_dir: per-tile PNG rasters plus a JSONL
// manifest. Generation is chunk-parallel over tile indices; filtering and all
// writes happen serially in index order so the output bytes are a pure
// function of (config, seed).
inline Manifest build_dataset(const WorldConfig& cfg, const std::string& out_dir) {
    fs::create_directories(fs::path(out_dir) / "tiles");

    int64_t budget = 3 * cfg.n_tiles;
    auto locations = sample_locations(budget, cfg.centers, cfg.radius_km, cfg.d_min_km, cfg.seed);

    Manifest manifest;
    manifest.dir = out_dir;
    std::ofstream mf(fs::path(out_dir) / "manifest.jsonl");
    if (!mf) throw IoError("cannot write manifest in " + out_dir);

    const int64_t chunk = 256;
    std::vector<Tile> tiles(static_cast<size_t>(chunk));
    for (int64_t base = 0; base < budget && int64_t(manifest.rows.size()) < cfg.n_tiles; base += chunk) {
        int64_t count = std::min(chunk, budget - base);
        parallel_for(count, [&](int64_t i) {
            uint64_t tile_seed = mix_seed(cfg.seed, uint64_t(base + i));
            tiles[size_t(i)] = generate_tile(locations[size_t(base + i)], tile_seed, cfg.tile_size);
        });
        for (int64_t i = 0; i < count && int64_t(manifest.rows.size()) < cfg.n_tiles; ++i) {
            Tile& t = tiles[size_t(i)];
            if (!keep_tile(t.layout)) continue;

            std::string stem = "tiles/" + hex_u64(t.id);
            ManifestRow row;
            row.id = t.id;
            row.lat = t.location.lat;
            row.lon = t.location.lon;
            row.region_id = t.region_id;
            row.caption = t.caption;
            row.seed = t.seed;
            row.path_layout = stem + "_layout.png";
            row.path_map = stem + "_map.png";
            row.path_sat = stem + "_sat.png";
            row.path_canny = stem + "_canny.png";
            row.path_segmask = stem + "_segmask.png";

            ControlImage canny = canny_edges(t.sat_render, cfg.canny_low, cfg.canny_high);
            ControlImage mask = seg_mask(t);
            png_write(manifest.resolve(row.path_layout), layout_to_png(t.layout));
            png_write(manifest.resolve(row.path_map), t.map_render);
            png_write(manifest.resolve(row.path_sat), t.sat_render);
            png_write(manifest.resolve(row.path_canny), canny.raster);
            png_write(manifest.resolve(row.path_segmask), mask.raster);

            json j;
            j["id"] = hex_u64(row.id);
            j["lat"] = row.lat;
            j["lon"] = row.lon;
            j["region_id"] = row.region_id;
            j["caption"] = row.caption;
            j["paths"] = {{"layout", row.path_layout}, {"map", row.path_map},      {"sat", row.path_sat},
                          {"canny", row.path_canny},   {"segmask", row.path_segmask}};
            j["seed"] = hex_u64(row.seed);
            mf << j.dump() << "\n";
            manifest.rows.push_back(std::move(row));
        }
    }
    mf.close();
    if (int64_t(manifest.rows.size()) < cfg.n_tiles)
        throw ConfigError("build_dataset: exhausted " + std::to_string(budget) + " candidate tiles at " +
                          std::to_string(manifest.rows.size()) + " of " + std::to_string(cfg.n_tiles) + " kept");

    std::ofstream cf(fs::path(out_dir) / "world_config.json");
    cf << cfg.to_json().dump(2) << "\n";
    return manifest;
}

inline Manifest load_manifest(const std::string& dataset_dir) {
    Manifest m;
    m.dir = dataset_dir;
    std::ifstream mf(fs::path(dataset_dir) / "manifest.jsonl");
    if (!mf) throw MissingArtifact("no manifest.jsonl under " + dataset_dir);
    std::string line;
    while (std::getline(mf, line)) {
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw IoError("manifest parse error: " + std::string(e.what()));
        }
        ManifestRow row;
        row.id = std::stoull(j.at("id").get<std::string>(), nullptr, 16);
        row.lat = j.at("lat").get<double>();
        row.lon = j.at("lon").get<double>();
        row.region_id = j.at("region_id").get<int>();
        row.caption = j.at("caption").get<std::string>();
        row.seed = std::stoull(j.at("seed").get<std::string>(), nullptr, 16);
        row.path_layout = j.at("paths").at("layout").get<std::string>();
        row.path_map = j.at("paths").at("map").get<std::string>();
        row.path_sat = j.at("paths").at("sat").get<std::string>();
        row.path_canny = j.at("paths").at("canny").get<std::string>();
        row.path_segmask = j.at("paths").at("segmask").get<std::string>();
        m.rows.push_back(std::move(row));
    }
    return m;
}

// Train/eval split convention: the last `fraction` of manifest rows is the
// held-out set. Row order is the (deterministic) build order.
inline std::pair<std::vector<int64_t>, std::vector<int64_t>> split_indices(const Manifest& m,
                                                                           double eval_fraction = 0.1) {
    int64_t n = int64_t(m.rows.size());
    int64_t n_eval = std::max<int64_t>(1, int64_t(n * eval_fraction));
    std::vector<int64_t> train, eval;
    for (int64_t i = 0; i < n - n_eval; ++i) train.push_back(i);
    for (int64_t i = n - n_eval; i < n; ++i) eval.push_back(i);
    return {train, eval};
}

inline uint64_t manifest_hash(const std::string& dataset_dir) {
    return file_hash((fs::path(dataset_dir) / "manifest.jsonl").string());
}

}  // namespace mgd
