#pragma once

// Independent oracles and toy models shared by the unit and acceptance tests.
// The oracles deliberately avoid the library's geometry code.

#include "dynsample/models.hpp"
#include "dynsample/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <vector>

namespace testsupport {

using Pt = std::vector<double>;

inline double dist(const Pt& a, const Pt& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    return std::sqrt(s);
}

inline std::vector<Pt> random_points(std::size_t n, std::size_t d, std::uint32_t seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Pt> pts(n, Pt(d));
    for (auto& p : pts) {
        for (auto& c : p) {
            c = u(rng);
        }
    }
    return pts;
}

// Base-2 radical inverse by bit reversal.
inline double van_der_corput_base2(std::uint32_t i) {
    std::uint32_t r = 0;
    for (int b = 0; b < 32; ++b) {
        r = (r << 1) | ((i >> b) & 1U);
    }
    return static_cast<double>(r) / 4294967296.0;
}

inline double det3(const Pt& a, const Pt& b, const Pt& c) {
    return a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) +
           a[2] * (b[0] * c[1] - b[1] * c[0]);
}

// Brute-force 3-D hull volume: every point triple whose plane has all points
// on one side is a facet; volume by tetrahedra from the centroid.
inline double brute_force_hull_volume_3d(const std::vector<Pt>& pts) {
    Pt c(3, 0.0);
    for (const auto& p : pts) {
        for (int k = 0; k < 3; ++k) c[k] += p[k] / static_cast<double>(pts.size());
    }
    double vol = 0.0;
    const std::size_t n = pts.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            for (std::size_t k = j + 1; k < n; ++k) {
                Pt a{pts[j][0] - pts[i][0], pts[j][1] - pts[i][1], pts[j][2] - pts[i][2]};
                Pt b{pts[k][0] - pts[i][0], pts[k][1] - pts[i][1], pts[k][2] - pts[i][2]};
                Pt nrm{a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
                int pos = 0;
                int neg = 0;
                for (std::size_t m = 0; m < n; ++m) {
                    const double s = nrm[0] * (pts[m][0] - pts[i][0]) + nrm[1] * (pts[m][1] - pts[i][1]) +
                                     nrm[2] * (pts[m][2] - pts[i][2]);
                    if (s > 1e-14) ++pos;
                    if (s < -1e-14) ++neg;
                }
                if (pos == 0 || neg == 0) {
                    Pt u{pts[i][0] - c[0], pts[i][1] - c[1], pts[i][2] - c[2]};
                    Pt v{pts[j][0] - c[0], pts[j][1] - c[1], pts[j][2] - c[2]};
                    Pt w{pts[k][0] - c[0], pts[k][1] - c[1], pts[k][2] - c[2]};
                    vol += std::abs(det3(u, v, w)) / 6.0;
                }
            }
        }
    }
    return vol;
}

// Andrew's monotone chain, counter-clockwise, no collinear points.
inline std::vector<Pt> hull_2d(std::vector<Pt> pts) {
    std::sort(pts.begin(), pts.end());
    auto cross = [](const Pt& o, const Pt& a, const Pt& b) {
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    };
    std::vector<Pt> h(2 * pts.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        while (k >= 2 && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
        h[k++] = pts[i];
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
        h[k++] = pts[i];
    }
    h.resize(k - 1);
    return h;
}

inline bool inside_ccw_polygon(const std::vector<Pt>& poly, const Pt& q) {
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Pt& a = poly[i];
        const Pt& b = poly[(i + 1) % poly.size()];
        if ((b[0] - a[0]) * (q[1] - a[1]) - (b[1] - a[1]) * (q[0] - a[0]) < 0.0) {
            return false;
        }
    }
    return true;
}

struct EmptyCircle {
    Pt center;
    double radius = 0.0;
    double cell = 0.0; // grid spacing (larger of the two axes)
};

// Largest empty circle with center inside the hull, by evaluating the
// distance to the nearest point on a grid x grid lattice over the bounding box.
inline EmptyCircle grid_largest_empty_circle(const std::vector<Pt>& pts, std::size_t grid) {
    const auto hull = hull_2d(pts);
    double lo[2] = {1e300, 1e300};
    double hi[2] = {-1e300, -1e300};
    for (const auto& p : pts) {
        for (int k = 0; k < 2; ++k) {
            lo[k] = std::min(lo[k], p[k]);
            hi[k] = std::max(hi[k], p[k]);
        }
    }
    EmptyCircle best;
    const double hx = (hi[0] - lo[0]) / static_cast<double>(grid - 1);
    const double hy = (hi[1] - lo[1]) / static_cast<double>(grid - 1);
    best.cell = std::max(hx, hy);
    for (std::size_t i = 0; i < grid; ++i) {
        for (std::size_t j = 0; j < grid; ++j) {
            Pt q{lo[0] + hx * static_cast<double>(i), lo[1] + hy * static_cast<double>(j)};
            if (!inside_ccw_polygon(hull, q)) {
                continue;
            }
            double r = 1e300;
            for (const auto& p : pts) {
                r = std::min(r, dist(p, q));
            }
            if (r > best.radius) {
                best = {q, r, best.cell};
            }
        }
    }
    return best;
}

// Monte-Carlo mean distance of two uniform points in [0,1]^d, using a
// different generator family than the library.
inline double mc_mean_distance(std::size_t d, std::size_t draws, std::uint32_t seed) {
    std::minstd_rand rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double total = 0.0;
    for (std::size_t i = 0; i < draws; ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            const double e = u(rng) - u(rng);
            s += e * e;
        }
        total += std::sqrt(s);
    }
    return total / static_cast<double>(draws);
}

// x' = a x + u, y = x per channel; a fast, well-behaved model for campaign tests.
inline std::shared_ptr<dynsample::models::FunctionModel> linear_toy(std::size_t n = 2, double a = -1.0) {
    dynsample::signal::ControlBounds b{std::vector<double>(n, -1.0), std::vector<double>(n, 1.0),
                                       std::vector<double>(n, 0.2)};
    return std::make_shared<dynsample::models::FunctionModel>(
        "linear_toy", n, n, n, std::vector<double>(n, 0.0), b, std::vector<double>(n, 0.0),
        [a](std::span<const double> x, std::span<const double> u, double, std::span<double> dx) {
            for (std::size_t i = 0; i < x.size(); ++i) dx[i] = a * x[i] + u[i];
        },
        [](std::span<const double> x, std::span<const double>, std::span<double> y) {
            for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i];
        });
}

// Nonlinear toy with coupled outputs so that seeds spread unevenly.
inline std::shared_ptr<dynsample::models::FunctionModel> bent_toy() {
    dynsample::signal::ControlBounds b{{-1.0, -1.0}, {1.0, 1.0}, {0.2, 0.2}};
    return std::make_shared<dynsample::models::FunctionModel>(
        "bent_toy", 2, 2, 2, std::vector<double>{0.0, 0.0}, b, std::vector<double>{0.0, 0.0},
        [](std::span<const double> x, std::span<const double> u, double, std::span<double> dx) {
            dx[0] = -x[0] + u[0] + 0.5 * u[1] * u[1];
            dx[1] = -2.0 * x[1] + std::tanh(2.0 * u[1]) + 0.3 * u[0] * x[0];
        },
        [](std::span<const double> x, std::span<const double>, std::span<double> y) {
            y[0] = x[0];
            y[1] = x[1] + x[0] * x[0];
        });
}

inline dynsample::sampler::CampaignConfig toy_config() {
    dynsample::sampler::CampaignConfig c;
    c.n_hss = 5;
    c.max_sims_phase2 = 4;
    c.max_sims_phase3 = 4;
    c.dt = 0.05;
    c.segments = {{0.25, 8}, {1.0, 2}};
    c.rng_seed = 7;
    return c;
}

} // namespace testsupport
