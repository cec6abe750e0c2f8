#pragma once

#include <array>
#include <string>
#include <vector>

#include "mgd/geo.hpp"
#include "mgd/image.hpp"
#include "mgd/rng.hpp"

// Procedural paired samples: a categorical layout raster plus the three
// derived renders (map, satellite, segmentation mask) and a templated
// caption. Everything is a pure function of (location, seed).

namespace mgd {

enum LayoutClass : uint8_t {
    kVegetation = 0,
    kWater = 1,
    kRoad = 2,
    kBuilding = 3,
    kParking = 4,
    kBare = 5,
};
inline constexpr int kNumClasses = 6;

inline const char* class_name(int c) {
    static const char* names[kNumClasses] = {"vegetation", "water", "road", "building", "parking", "bare"};
    return names[c];
}

using Rgb = std::array<uint8_t, 3>;

// Map render palette (region independent, exact lookup, invertible).
inline const std::array<Rgb, kNumClasses>& map_palette() {
    static const std::array<Rgb, kNumClasses> p = {{
        {205, 235, 176},  // vegetation
        {170, 211, 223},  // water
        {255, 255, 255},  // road
        {217, 208, 201},  // building
        {238, 238, 238},  // parking
        {242, 239, 233},  // bare
    }};
    return p;
}

// Segmentation mask palette, distinct from the map palette.
inline const std::array<Rgb, kNumClasses>& mask_palette() {
    static const std::array<Rgb, kNumClasses> p = {{
        {0, 200, 0},
        {0, 0, 255},
        {255, 0, 0},
        {255, 255, 0},
        {255, 0, 255},
        {0, 255, 255},
    }};
    return p;
}

// Per-region satellite base colors, one row per region, one column per class.
// Within a region every pair of class colors is at least ~27 apart in RGB so
// nearest-color decoding survives the render noise.
inline const std::array<std::array<Rgb, kNumClasses>, kNumRegions>& region_palette() {
    static const std::array<std::array<Rgb, kNumClasses>, kNumRegions> p = {{
        // vegetation      water          road           building        parking         bare
        {{{24, 98, 40}, {10, 60, 95}, {84, 84, 82}, {165, 115, 90}, {124, 124, 120}, {130, 100, 70}}},   // tropical
        {{{110, 150, 40}, {45, 100, 115}, {112, 106, 96}, {185, 142, 102}, {148, 144, 132}, {196, 168, 120}}},  // savanna
        {{{40, 140, 110}, {20, 115, 150}, {104, 104, 108}, {205, 185, 160}, {140, 142, 146}, {230, 205, 140}}},  // coastal
        {{{120, 115, 58}, {40, 85, 100}, {98, 88, 76}, {172, 128, 90}, {146, 134, 116}, {215, 140, 80}}},  // desert
        {{{70, 130, 50}, {50, 95, 130}, {95, 95, 95}, {175, 115, 105}, {140, 140, 140}, {150, 135, 88}}},  // temperate
        {{{44, 96, 96}, {25, 60, 90}, {88, 90, 94}, {150, 118, 104}, {118, 122, 128}, {168, 166, 158}}},  // boreal
    }};
    return p;
}

struct Layout {
    int size = 0;
    std::vector<uint8_t> cls;  // size*size class ids

    Layout() = default;
    explicit Layout(int n, uint8_t fill = kVegetation) : size(n), cls(size_t(n) * n, fill) {}
    uint8_t& at(int x, int y) { return cls[size_t(y) * size + x]; }
    uint8_t at(int x, int y) const { return cls[size_t(y) * size + x]; }
    bool operator==(const Layout& o) const { return size == o.size && cls == o.cls; }

    std::array<int64_t, kNumClasses> histogram() const {
        std::array<int64_t, kNumClasses> h{};
        for (uint8_t c : cls) ++h[c];
        return h;
    }
};

struct Tile {
    uint64_t id = 0;
    GeoLocation location;
    int region_id = 0;
    uint64_t seed = 0;
    Layout layout;
    Image map_render;   // palette lookup of layout
    Image sat_render;   // region-styled, textured
    std::string caption;
};

inline Image render_map(const Layout& layout) {
    const auto& pal = map_palette();
    Image img(layout.size, layout.size, 3);
    for (int y = 0; y < layout.size; ++y)
        for (int x = 0; x < layout.size; ++x) {
            const Rgb& c = pal[layout.at(x, y)];
            img.set_rgb(x, y, c[0], c[1], c[2]);
        }
    return img;
}

inline Image render_mask(const Layout& layout) {
    const auto& pal = mask_palette();
    Image img(layout.size, layout.size, 3);
    for (int y = 0; y < layout.size; ++y)
        for (int x = 0; x < layout.size; ++x) {
            const Rgb& c = pal[layout.at(x, y)];
            img.set_rgb(x, y, c[0], c[1], c[2]);
        }
    return img;
}

// Exact palette inversion (for the map and mask renders, which are noiseless).
inline Layout invert_palette(const Image& img, const std::array<Rgb, kNumClasses>& pal) {
    Layout layout(img.w);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x) {
            int found = -1;
            for (int c = 0; c < kNumClasses; ++c)
                if (img.at(x, y, 0) == pal[c][0] && img.at(x, y, 1) == pal[c][1] && img.at(x, y, 2) == pal[c][2]) {
                    found = c;
                    break;
                }
            if (found < 0) throw NumericError("invert_palette: pixel color not in palette");
            layout.at(x, y) = uint8_t(found);
        }
    return layout;
}

// Nearest-color decode against one region's palette; tolerant of render noise.
inline Layout decode_sat(const Image& img, int region_id) {
    const auto& pal = region_palette()[size_t(region_id)];
    Layout layout(img.w);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x) {
            int best = 0;
            int64_t best_d = -1;
            for (int c = 0; c < kNumClasses; ++c) {
                int64_t d = 0;
                for (int ch = 0; ch < 3; ++ch) {
                    int64_t diff = int64_t(img.at(x, y, ch)) - pal[c][ch];
                    d += diff * diff;
                }
                if (best_d < 0 || d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            layout.at(x, y) = uint8_t(best);
        }
    return layout;
}

namespace detail_world {

// Bilinear value noise on a coarse lattice, in [0,1].
struct ValueNoise {
    int n;
    std::vector<double> grid;
    ValueNoise(int lattice, Rng& rng) : n(lattice), grid(size_t(lattice) * lattice) {
        for (auto& v : grid) v = rng.uniform();
    }
    double at(double u, double v) const {  // u,v in [0,1]
        double gx = u * (n - 1), gy = v * (n - 1);
        int x0 = std::min(int(gx), n - 2), y0 = std::min(int(gy), n - 2);
        double fx = gx - x0, fy = gy - y0;
        double a = grid[size_t(y0) * n + x0], b = grid[size_t(y0) * n + x0 + 1];
        double c = grid[size_t(y0 + 1) * n + x0], d = grid[size_t(y0 + 1) * n + x0 + 1];
        return (a * (1 - fx) + b * fx) * (1 - fy) + (c * (1 - fx) + d * fx) * fy;
    }
};

struct RoadStroke {
    bool horizontal;
    int pos, width, bend_at;  // bend_at < 0 means straight
};

inline void draw_road(Layout& lo, const RoadStroke& r) {
    int n = lo.size;
    auto put = [&](int x, int y) {
        if (x >= 0 && x < n && y >= 0 && y < n) lo.at(x, y) = kRoad;
    };
    if (r.bend_at < 0) {
        for (int t = 0; t < n; ++t)
            for (int w = 0; w < r.width; ++w) r.horizontal ? put(t, r.pos + w) : put(r.pos + w, t);
    } else {
        // L-shape: run along the main axis to the bend, then turn toward the far edge
        for (int t = 0; t <= r.bend_at; ++t)
            for (int w = 0; w < r.width; ++w) r.horizontal ? put(t, r.pos + w) : put(r.pos + w, t);
        for (int t = r.pos; t < n; ++t)
            for (int w = 0; w < r.width; ++w) r.horizontal ? put(r.bend_at + w, t) : put(t, r.bend_at + w);
    }
}

// Place an axis-aligned rect of `cls` flush against a road pixel. Keeps every
// rect pixel within L1 distance 3 of a road and leaves a one-pixel moat
// around buildings so connected components stay separable.
inline bool place_rect(Layout& lo, Rng& rng, uint8_t cls, int len_lo, int len_hi,
                       const std::vector<std::pair<int, int>>& road_px) {
    if (road_px.empty()) return false;
    int n = lo.size;
    for (int attempt = 0; attempt < 8; ++attempt) {
        auto [rx, ry] = road_px[size_t(rng.uniform_int(0, int64_t(road_px.size()) - 1))];
        int dir = int(rng.uniform_int(0, 3));  // 0:+x 1:-x 2:+y 3:-y
        int depth = int(rng.uniform_int(2, 3));
        int len = int(rng.uniform_int(len_lo, len_hi));
        int x0, y0, w, h;
        if (dir == 0) { x0 = rx + 1; y0 = ry - len / 2; w = depth; h = len; }
        else if (dir == 1) { x0 = rx - depth; y0 = ry - len / 2; w = depth; h = len; }
        else if (dir == 2) { x0 = rx - len / 2; y0 = ry + 1; w = len; h = depth; }
        else { x0 = rx - len / 2; y0 = ry - depth; w = len; h = depth; }
        if (x0 < 0 || y0 < 0 || x0 + w > n || y0 + h > n) continue;
        bool free = true;
        for (int y = y0 - 1; y < y0 + h + 1 && free; ++y)
            for (int x = x0 - 1; x < x0 + w + 1 && free; ++x) {
                if (x < 0 || y < 0 || x >= n || y >= n) continue;
                uint8_t c = lo.at(x, y);
                bool inside = x >= x0 && x < x0 + w && y >= y0 && y < y0 + h;
                if (inside && c != kVegetation && c != kBare) free = false;
                if (!inside && cls == kBuilding && c == kBuilding) free = false;  // moat
            }
        if (free && cls == kBuilding) {
            // every building pixel must have a road within L1 distance 3
            for (int y = y0; y < y0 + h && free; ++y)
                for (int x = x0; x < x0 + w && free; ++x) {
                    bool near = false;
                    for (int dy = -3; dy <= 3 && !near; ++dy)
                        for (int dx = -3 + std::abs(dy); dx <= 3 - std::abs(dy) && !near; ++dx) {
                            int nx = x + dx, ny = y + dy;
                            if (nx >= 0 && ny >= 0 && nx < n && ny < n && lo.at(nx, ny) == kRoad) near = true;
                        }
                    free = near;
                }
        }
        if (!free) continue;
        for (int y = y0; y < y0 + h; ++y)
            for (int x = x0; x < x0 + w; ++x) lo.at(x, y) = cls;
        return true;
    }
    return false;
}

}  // namespace detail_world

inline Layout generate_layout(const GeoLocation& loc, uint64_t seed, int size) {
    Rng rng = Rng::child(seed, 0x11a7);
    double u = geofield::urban_level(loc);
    double wp = geofield::water_prob(loc);
    double bm = geofield::bare_mix(loc);

    // wilderness tiles are intentionally single-class; the dataset filter
    // drops them, mirroring how uniform scenes get excluded upstream
    if (rng.bernoulli(0.12)) {
        double r = rng.uniform();
        uint8_t cls = r < 0.25 ? kWater : (bm > 0.5 ? kBare : kVegetation);
        return Layout(size, cls);
    }

    Layout lo(size, kVegetation);
    // background: vegetation with coherent bare patches
    detail_world::ValueNoise bg(5, rng);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
            if (bg.at(double(x) / (size - 1), double(y) / (size - 1)) < bm) lo.at(x, y) = kBare;

    // optional water blob
    if (rng.bernoulli(wp)) {
        double cx = rng.uniform(4.0, size - 4.0), cy = rng.uniform(4.0, size - 4.0);
        double rxr = rng.uniform(3.5, size * 0.33), ryr = rng.uniform(3.5, size * 0.33);
        detail_world::ValueNoise wob(4, rng);
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) {
                double dx = (x - cx) / rxr, dy = (y - cy) / ryr;
                double d = dx * dx + dy * dy;
                if (d < 0.75 + 0.5 * wob.at(double(x) / (size - 1), double(y) / (size - 1))) lo.at(x, y) = kWater;
            }
    }

    // roads
    double nr_f = u * 4.5;
    int nr = int(nr_f) + (rng.bernoulli(nr_f - int(nr_f)) ? 1 : 0);
    nr = std::min(nr, 6);
    for (int i = 0; i < nr; ++i) {
        detail_world::RoadStroke r;
        r.horizontal = rng.bernoulli(0.5);
        r.pos = int(rng.uniform_int(2, size - 4));
        r.width = rng.bernoulli(0.3 + 0.4 * u) ? 2 : 1;
        r.bend_at = rng.bernoulli(0.35) ? int(rng.uniform_int(4, size - 5)) : -1;
        detail_world::draw_road(lo, r);
    }

    if (nr > 0) {
        std::vector<std::pair<int, int>> road_px;
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x)
                if (lo.at(x, y) == kRoad) road_px.push_back({x, y});

        int nb = int(std::lround(u * u * 20.0 * rng.uniform(0.7, 1.25)));
        nb = std::clamp(nb, 0, 20);
        for (int i = 0; i < nb; ++i) detail_world::place_rect(lo, rng, kBuilding, 2, 5, road_px);

        int np = 1 + (rng.bernoulli(0.5) ? 1 : 0) + (rng.bernoulli(0.2 + 0.4 * u) ? 1 : 0);
        for (int i = 0; i < np; ++i) detail_world::place_rect(lo, rng, kParking, 4, 6, road_px);
    }
    return lo;
}

inline Image render_sat(const Layout& layout, int region_id, uint64_t noise_seed) {
    const auto& pal = region_palette()[size_t(region_id)];
    int n = layout.size;
    Rng rng = Rng::child(noise_seed, 0x5a7);
    detail_world::ValueNoise shade(4, rng);
    Image img(n, n, 3);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            const Rgb& base = pal[layout.at(x, y)];
            // low-frequency shading plus per-pixel jitter, both seed-stable
            double sh = (shade.at(double(x) / (n - 1), double(y) / (n - 1)) - 0.5) * 10.0;
            uint64_t h = noise_seed ^ (uint64_t(y) * 0x9e3779b97f4a7c15ull + uint64_t(x) * 0xbf58476d1ce4e5b9ull);
            for (int ch = 0; ch < 3; ++ch) {
                uint64_t hs = h + uint64_t(ch) * 0x94d049bb133111ebull;
                double jit = (double(splitmix64(hs) >> 11) * 0x1.0p-53 - 0.5) * 12.0;
                int v = int(std::lround(base[ch] + sh + jit));
                img.at(x, y, ch) = uint8_t(std::clamp(v, 0, 255));
            }
        }
    return img;
}

// Connected components of one class; 4-connectivity.
inline int count_components(const Layout& lo, uint8_t cls) {
    int n = lo.size;
    std::vector<uint8_t> seen(size_t(n) * n, 0);
    std::vector<std::pair<int, int>> stack;
    int comps = 0;
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            if (lo.at(x, y) != cls || seen[size_t(y) * n + x]) continue;
            ++comps;
            stack.push_back({x, y});
            seen[size_t(y) * n + x] = 1;
            while (!stack.empty()) {
                auto [cx, cy] = stack.back();
                stack.pop_back();
                const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
                for (int k = 0; k < 4; ++k) {
                    int nx = cx + dx[k], ny = cy + dy[k];
                    if (nx < 0 || ny < 0 || nx >= n || ny >= n) continue;
                    if (lo.at(nx, ny) != cls || seen[size_t(ny) * n + nx]) continue;
                    seen[size_t(ny) * n + nx] = 1;
                    stack.push_back({nx, ny});
                }
            }
        }
    return comps;
}

// Caption template; a pure function of the layout (plus the region name).
// Density thresholds: 0-3 rural, 4-14 suburban, >=15 dense.
inline std::string make_caption(const Layout& layout, int region_id) {
    int buildings = count_components(layout, kBuilding);
    int roads = count_components(layout, kRoad);
    auto hist = layout.histogram();
    bool water = hist[kWater] > 0;

    const char* density = buildings <= 3 ? "rural" : (buildings <= 14 ? "suburban" : "dense");
    std::string road_phrase;
    if (roads == 0)
        road_phrase = "open land";
    else if (roads == 1)
        road_phrase = "1 road";
    else
        road_phrase = std::to_string(roads) + " roads";
    std::string water_phrase = water ? " and water" : "";

    return std::string("a ") + density + " area with " + std::to_string(buildings) + " buildings, " + road_phrase +
           water_phrase + " in a " + region_name(region_id) + " region";
}

// Discard rule: one of {vegetation, water, bare} covers >= 98% of pixels.
inline bool keep_tile(const Layout& layout) {
    auto hist = layout.histogram();
    int64_t total = int64_t(layout.cls.size());
    int64_t threshold = (total * 98 + 99) / 100;
    for (uint8_t c : {kVegetation, kWater, kBare})
        if (hist[c] >= threshold) return false;
    return true;
}

inline Tile generate_tile(const GeoLocation& loc, uint64_t seed, int size = 32) {
    Tile t;
    t.id = seed;
    t.seed = seed;
    t.location = loc;
    t.region_id = region_of(loc);
    t.layout = generate_layout(loc, seed, size);
    t.map_render = render_map(t.layout);
    t.sat_render = render_sat(t.layout, t.region_id, mix_seed(seed, 0xfeed));
    t.caption = make_caption(t.layout, t.region_id);
    return t;
}

}  // namespace mgd
