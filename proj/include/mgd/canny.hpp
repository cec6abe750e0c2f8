#pragma once

#include <cmath>
#include <deque>
#include <vector>

#include "mgd/geo.hpp"
#include "mgd/image.hpp"

// Full Canny pipeline: luma conversion, 5x5 Gaussian blur (sigma 1.4), Sobel
// gradients, four-direction non-maximum suppression and double-threshold
// hysteresis with 8-connectivity. Borders replicate.

namespace mgd {

enum class ControlKind { none, osm, canny, segmask };

inline const char* control_kind_name(ControlKind k) {
    switch (k) {
        case ControlKind::none: return "none";
        case ControlKind::osm: return "osm";
        case ControlKind::canny: return "canny";
        case ControlKind::segmask: return "segmask";
    }
    return "none";
}

struct ControlImage {
    ControlKind kind = ControlKind::none;
    Image raster;  // H x W x 3

    static ControlImage zero(int size) {
        ControlImage c;
        c.kind = ControlKind::none;
        c.raster = Image(size, size, 3, 0);
        return c;
    }
};

namespace detail_canny {

inline std::vector<double> to_gray(const Image& img) {
    std::vector<double> g(size_t(img.w) * img.h);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x) {
            if (img.c == 3)
                g[size_t(y) * img.w + x] =
                    0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2);
            else
                g[size_t(y) * img.w + x] = img.at(x, y, 0);
        }
    return g;
}

inline double at_clamped(const std::vector<double>& g, int w, int h, int x, int y) {
    x = std::clamp(x, 0, w - 1);
    y = std::clamp(y, 0, h - 1);
    return g[size_t(y) * w + x];
}

inline std::vector<double> gauss5(const std::vector<double>& g, int w, int h, double sigma = 1.4) {
    double k[5][5];
    double sum = 0;
    for (int i = -2; i <= 2; ++i)
        for (int j = -2; j <= 2; ++j) {
            k[i + 2][j + 2] = std::exp(-(i * i + j * j) / (2 * sigma * sigma));
            sum += k[i + 2][j + 2];
        }
    for (auto& row : k)
        for (auto& v : row) v /= sum;
    std::vector<double> out(size_t(w) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0;
            for (int i = -2; i <= 2; ++i)
                for (int j = -2; j <= 2; ++j) acc += k[i + 2][j + 2] * at_clamped(g, w, h, x + j, y + i);
            out[size_t(y) * w + x] = acc;
        }
    return out;
}

}  // namespace detail_canny

inline ControlImage canny_edges(const Image& img, double low, double high) {
    if (!(low >= 0 && low < high)) throw ConfigError("canny: need 0 <= low < high");
    const int w = img.w, h = img.h;
    auto gray = detail_canny::to_gray(img);
    auto blur = detail_canny::gauss5(gray, w, h);

    std::vector<double> mag(size_t(w) * h);
    std::vector<uint8_t> dir(size_t(w) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            auto v = [&](int dx, int dy) { return detail_canny::at_clamped(blur, w, h, x + dx, y + dy); };
            double gx = -v(-1, -1) + v(1, -1) - 2 * v(-1, 0) + 2 * v(1, 0) - v(-1, 1) + v(1, 1);
            double gy = -v(-1, -1) - 2 * v(0, -1) - v(1, -1) + v(-1, 1) + 2 * v(0, 1) + v(1, 1);
            mag[size_t(y) * w + x] = std::sqrt(gx * gx + gy * gy);
            double ang = std::atan2(gy, gx) * 180.0 / kPi;
            if (ang < 0) ang += 180.0;
            uint8_t d;
            if (ang < 22.5 || ang >= 157.5) d = 0;       // horizontal gradient -> compare E/W
            else if (ang < 67.5) d = 1;                  // 45
            else if (ang < 112.5) d = 2;                 // vertical gradient -> compare N/S
            else d = 3;                                  // 135
            dir[size_t(y) * w + x] = d;
        }

    // non-maximum suppression; ties break toward the first neighbor so a
    // symmetric two-pixel ridge keeps exactly one pixel
    std::vector<double> thin(size_t(w) * h, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double m = mag[size_t(y) * w + x];
            if (m <= 0) continue;
            auto mg = [&](int xx, int yy) {
                return (xx < 0 || yy < 0 || xx >= w || yy >= h) ? 0.0 : mag[size_t(yy) * w + xx];
            };
            double n1, n2;
            switch (dir[size_t(y) * w + x]) {
                case 0: n1 = mg(x - 1, y); n2 = mg(x + 1, y); break;
                case 1: n1 = mg(x + 1, y - 1); n2 = mg(x - 1, y + 1); break;
                case 2: n1 = mg(x, y - 1); n2 = mg(x, y + 1); break;
                default: n1 = mg(x - 1, y - 1); n2 = mg(x + 1, y + 1); break;
            }
            if (m > n1 && m >= n2) thin[size_t(y) * w + x] = m;
        }

    // hysteresis: strong seeds flood into weak pixels over 8-neighborhoods
    std::vector<uint8_t> state(size_t(w) * h, 0);  // 0 none, 1 weak, 2 edge
    std::deque<std::pair<int, int>> queue;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double m = thin[size_t(y) * w + x];
            if (m >= high) {
                state[size_t(y) * w + x] = 2;
                queue.push_back({x, y});
            } else if (m >= low) {
                state[size_t(y) * w + x] = 1;
            }
        }
    while (!queue.empty()) {
        auto [x, y] = queue.front();
        queue.pop_front();
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                int nx = x + dx, ny = y + dy;
                if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                if (state[size_t(ny) * w + nx] == 1) {
                    state[size_t(ny) * w + nx] = 2;
                    queue.push_back({nx, ny});
                }
            }
    }

    ControlImage out;
    out.kind = ControlKind::canny;
    out.raster = Image(w, h, 3, 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (state[size_t(y) * w + x] == 2) out.raster.set_rgb(x, y, 255, 255, 255);
    return out;
}

}  // namespace mgd
