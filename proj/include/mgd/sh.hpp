#pragma once

#include <cmath>
#include <vector>

#include "mgd/geo.hpp"

// Real spherical harmonics in the orthonormal convention:
//   Y_{l,0}            = N(l,0) P_l(cos t)
//   Y_{l,m}, m > 0     = sqrt(2) N(l,m) P_l^m(cos t) cos(m p)
//   Y_{l,-m}, m > 0    = sqrt(2) N(l,m) P_l^m(cos t) sin(m p)
// with t the colatitude and p the longitude. Basis size (L+1)^2, flat index
// l^2 + l + m.

namespace mgd {

namespace detail_sh {

// Associated Legendre P_l^m(x) (no Condon-Shortley phase), stable upward
// recurrence; fine for the l <= 10 range this project allows.
inline double assoc_legendre(int l, int m, double x) {
    double pmm = 1.0;
    if (m > 0) {
        double somx2 = std::sqrt((1.0 - x) * (1.0 + x));
        double fact = 1.0;
        for (int i = 1; i <= m; ++i) {
            pmm *= fact * somx2;
            fact += 2.0;
        }
    }
    if (l == m) return pmm;
    double pmmp1 = x * (2.0 * m + 1.0) * pmm;
    if (l == m + 1) return pmmp1;
    double pll = 0.0;
    for (int ll = m + 2; ll <= l; ++ll) {
        pll = ((2.0 * ll - 1.0) * x * pmmp1 - (ll + m - 1.0) * pmm) / (ll - m);
        pmm = pmmp1;
        pmmp1 = pll;
    }
    return pll;
}

inline double sh_norm(int l, int m) {
    double ratio = 1.0;
    for (int k = l - m + 1; k <= l + m; ++k) ratio /= double(k);
    return std::sqrt((2.0 * l + 1.0) / (4.0 * kPi) * ratio);
}

}  // namespace detail_sh

inline int sh_basis_size(int degree_max) { return (degree_max + 1) * (degree_max + 1); }

inline std::vector<double> sh_basis(const GeoLocation& loc, int degree_max) {
    if (degree_max < 0 || degree_max > 10) throw ConfigError("sh_basis: degree must be in [0, 10]");
    double colat = kPi / 2.0 - deg2rad(loc.lat);
    double x = std::cos(colat);
    double phi = deg2rad(loc.lon);
    std::vector<double> out(size_t(sh_basis_size(degree_max)));
    const double sqrt2 = std::sqrt(2.0);
    for (int l = 0; l <= degree_max; ++l) {
        out[size_t(l * l + l)] = detail_sh::sh_norm(l, 0) * detail_sh::assoc_legendre(l, 0, x);
        for (int m = 1; m <= l; ++m) {
            double base = sqrt2 * detail_sh::sh_norm(l, m) * detail_sh::assoc_legendre(l, m, x);
            out[size_t(l * l + l + m)] = base * std::cos(m * phi);
            out[size_t(l * l + l - m)] = base * std::sin(m * phi);
        }
    }
    return out;
}

}  // namespace mgd
