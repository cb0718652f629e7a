#pragma once

// Grid construction: per-observation MLE clouds, bounding-box or convex-hull
// bounds, and regular grid generation over the candidate parameter set.

#include <npmix/kernels.hpp>

#include <array>
#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace npmix {

enum class BoundsMode { BoundingBox, ConvexHullFilter };

struct GridSpec {
    std::vector<int> per_dim_counts;
    BoundsMode bounds_mode = BoundsMode::BoundingBox;
    // Per-dimension [lo, hi] overrides; empty means all bounds from the cloud.
    std::vector<std::optional<std::pair<double, double>>> explicit_bounds;
};

namespace detail {

using Point2 = std::array<double, 2>;

inline double cross(const Point2& o, const Point2& a, const Point2& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

// Andrew's monotone chain; returns the hull counter-clockwise with strictly
// convex corners (collinear points dropped). Size may be 1 (all points
// coincide) or 2 (collinear cloud).
inline std::vector<Point2> convex_hull(std::vector<Point2> pts) {
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    const std::size_t n = pts.size();
    if (n <= 2) return pts;
    std::vector<Point2> hull(2 * n);
    std::size_t m = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (m >= 2 && cross(hull[m - 2], hull[m - 1], pts[i]) <= 0.0) --m;
        hull[m++] = pts[i];
    }
    const std::size_t lower = m + 1;
    for (std::size_t i = n - 1; i-- > 0;) {
        while (m >= lower && cross(hull[m - 2], hull[m - 1], pts[i]) <= 0.0) --m;
        hull[m++] = pts[i];
    }
    hull.resize(m - 1);
    if (hull.size() == 2 && hull[0] == hull[1]) hull.resize(1);
    return hull;
}

// Boundary counts as inside.
inline bool point_in_hull(const std::vector<Point2>& hull, const Point2& p) {
    if (hull.size() == 1) return p == hull[0];
    if (hull.size() == 2) {
        if (cross(hull[0], hull[1], p) != 0.0) return false;
        return std::min(hull[0][0], hull[1][0]) <= p[0] &&
               p[0] <= std::max(hull[0][0], hull[1][0]) &&
               std::min(hull[0][1], hull[1][1]) <= p[1] &&
               p[1] <= std::max(hull[0][1], hull[1][1]);
    }
    for (std::size_t i = 0; i < hull.size(); ++i) {
        const Point2& a = hull[i];
        const Point2& b = hull[(i + 1) % hull.size()];
        if (cross(a, b, p) < 0.0) return false;
    }
    return true;
}

inline void append_warning(std::vector<std::string>* warnings, std::string msg) {
    if (warnings) warnings->push_back(std::move(msg));
}

}  // namespace detail

// Per-observation maximum-likelihood atoms, order preserved. Boundary
// estimates are aggregated into warnings rather than raised.
inline std::vector<Atom> mle_cloud(KernelId kernel, const std::vector<Observation>& data,
                                   std::vector<std::string>* warnings = nullptr) {
    if (data.empty())
        throw std::invalid_argument("mle_cloud: no observations");
    std::vector<Atom> cloud;
    cloud.reserve(data.size());
    for (std::size_t j = 0; j < data.size(); ++j) {
        try {
            MleResult r = mle(kernel, data[j]);
            if (r.boundary)
                detail::append_warning(warnings, "observation " + std::to_string(j) +
                                                     ": boundary MLE");
            cloud.push_back(std::move(r.atom));
        } catch (const InsufficientSeriesError& e) {
            throw InsufficientSeriesError("observation " + std::to_string(j) + ": " + e.what());
        } catch (const IncompatibleError& e) {
            throw IncompatibleError("observation " + std::to_string(j) + ": " + e.what());
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("observation " + std::to_string(j) + ": " + e.what());
        }
    }
    return cloud;
}

// Regular grid over the cloud's bounding box (or explicit bounds), optionally
// filtered to the convex hull of the cloud (d = 2 only). Equispaced points
// per dimension include both endpoints; a degenerate dimension collapses to
// a single point with a warning. Atom order is lexicographic with the last
// dimension varying fastest.
inline Grid regular_grid(const std::vector<Atom>& cloud, const GridSpec& spec,
                         std::vector<std::string>* warnings = nullptr) {
    if (cloud.empty())
        throw std::invalid_argument("regular_grid: empty cloud");
    const std::size_t d = cloud.front().dim();
    for (const Atom& a : cloud)
        if (a.dim() != d) throw IncompatibleError("regular_grid: cloud atoms of mixed dimension");
    if (spec.per_dim_counts.size() != d)
        throw IncompatibleError("regular_grid: spec has " +
                                std::to_string(spec.per_dim_counts.size()) +
                                " counts for a " + std::to_string(d) + "-dimensional cloud");
    if (!spec.explicit_bounds.empty() && spec.explicit_bounds.size() != d)
        throw IncompatibleError("regular_grid: explicit_bounds size mismatch");
    if (spec.bounds_mode == BoundsMode::ConvexHullFilter && d != 2)
        throw std::invalid_argument("regular_grid: ConvexHullFilter requires d = 2");

    std::vector<std::vector<double>> points(d);
    for (std::size_t i = 0; i < d; ++i) {
        int qi = spec.per_dim_counts[i];
        if (qi < 1)
            throw std::invalid_argument("regular_grid: counts must be positive");
        double lo, hi;
        if (!spec.explicit_bounds.empty() && spec.explicit_bounds[i]) {
            lo = spec.explicit_bounds[i]->first;
            hi = spec.explicit_bounds[i]->second;
            if (!(lo <= hi))
                throw std::invalid_argument("regular_grid: explicit bounds with lo > hi");
        } else {
            lo = hi = cloud.front()[i];
            for (const Atom& a : cloud) {
                lo = std::min(lo, a[i]);
                hi = std::max(hi, a[i]);
            }
        }
        if (lo == hi && qi > 1) {
            detail::append_warning(warnings, "dimension " + std::to_string(i) +
                                                 " is degenerate; collapsed to one point");
            qi = 1;
        }
        points[i].resize(static_cast<std::size_t>(qi));
        if (qi == 1) {
            points[i][0] = lo;
        } else {
            for (int t = 0; t < qi; ++t)
                points[i][static_cast<std::size_t>(t)] =
                    lo + (hi - lo) * static_cast<double>(t) / static_cast<double>(qi - 1);
            points[i].back() = hi;
        }
    }

    std::size_t total = 1;
    for (const auto& pts : points) total *= pts.size();

    std::optional<std::vector<detail::Point2>> hull;
    if (spec.bounds_mode == BoundsMode::ConvexHullFilter) {
        std::vector<detail::Point2> cpts;
        cpts.reserve(cloud.size());
        for (const Atom& a : cloud) cpts.push_back({a[0], a[1]});
        hull = detail::convex_hull(std::move(cpts));
    }

    std::vector<Atom> atoms;
    atoms.reserve(total);
    std::vector<std::size_t> idx(d, 0);
    for (std::size_t t = 0; t < total; ++t) {
        std::vector<double> coords(d);
        for (std::size_t i = 0; i < d; ++i) coords[i] = points[i][idx[i]];
        if (!hull || detail::point_in_hull(*hull, {coords[0], coords[1]}))
            atoms.emplace_back(std::move(coords));
        for (std::size_t i = d; i-- > 0;) {
            if (++idx[i] < points[i].size()) break;
            idx[i] = 0;
        }
    }
    if (atoms.empty())
        throw Error("regular_grid: convex-hull filter removed every atom; increase counts");
    return Grid(std::move(atoms));
}

// Default per-dimension resolutions: sqrt(p) clamped to [30, 300] for d = 1,
// 30 per dimension for d = 2 or 3.
inline std::vector<int> default_counts(std::size_t d, long p) {
    if (p < 1)
        throw std::invalid_argument("default_counts: p must be positive");
    switch (d) {
        case 1: {
            const long root = static_cast<long>(std::ceil(std::sqrt(static_cast<double>(p))));
            return {static_cast<int>(std::min(300L, std::max(root, 30L)))};
        }
        case 2:
            return {30, 30};
        case 3:
            return {30, 30, 30};
        default:
            throw UnsupportedDefaultError("default_counts: no default for d = " +
                                          std::to_string(d) + "; pass counts explicitly");
    }
}

}  // namespace npmix
