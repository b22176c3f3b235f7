#pragma once

#include "whitney/core.hpp"
#include "whitney/geomset.hpp"

#include <cstdint>
#include <algorithm>
#include <random>
#include <string_view>
#include <vector>

namespace whitney {

using Rng = std::mt19937_64;

/// Seed for one estimator run, mixed from a base seed, an operation tag, a point and a scale (FNV-1a).
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, const Vector& point = Vector(), double scale = 0.0)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](const void* data, std::size_t len) {
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= bytes[i];
            h *= 0x100000001b3ULL;
        }
    };
    mix(&base, sizeof base);
    mix(tag.data(), tag.size());
    for (Eigen::Index i = 0; i < point.size(); ++i) {
        const double v = point[i];
        mix(&v, sizeof v);
    }
    mix(&scale, sizeof scale);
    return h;
}

inline Vector random_direction(int n, Rng& rng)
{
    std::normal_distribution<double> normal;
    Vector v(n);
    do {
        for (int i = 0; i < n; ++i) v[i] = normal(rng);
    } while (v.norm() == 0.0);
    return v / v.norm();
}

/// Uniform direction times log-uniform radius in (r_in, r_out].
inline std::vector<Vector> sample_annulus(const Vector& center, double r_in, double r_out, std::size_t count, Rng& rng)
{
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Vector> out;
    out.reserve(count);
    const double lo = std::log(r_in);
    const double hi = std::log(r_out);
    for (std::size_t i = 0; i < count; ++i) {
        const Vector dir = random_direction(static_cast<int>(center.size()), rng);
        const double rho = std::exp(hi - (hi - lo) * unit(rng));
        out.push_back(center + rho * dir);
    }
    return out;
}

/// Uniform samples in the open ball B(center, radius).
inline std::vector<Vector> sample_ball(const Vector& center, double radius, std::size_t count, Rng& rng)
{
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int n = static_cast<int>(center.size());
    std::vector<Vector> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const Vector dir = random_direction(n, rng);
        const double rho = radius * std::pow(unit(rng), 1.0 / n) * (1.0 - 1e-15);
        out.push_back(center + rho * dir);
    }
    return out;
}

namespace detail {

/// Uniform point of the axis box [lo, hi] (degenerate axes allowed).
inline Vector uniform_in_box(const Vector& lo, const Vector& hi, Rng& rng)
{
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Vector p(lo.size());
    for (Eigen::Index i = 0; i < lo.size(); ++i) p[i] = lo[i] + (hi[i] - lo[i]) * unit(rng);
    return p;
}

} // namespace detail

/// Points of F inside the open ball B(center, radius).
///
/// Finite sets return qualifying points nearest first (at most `count`); box and ball unions are sampled by rejection inside
/// each primitive's bounding box clipped to the ball. `center` itself is included first
/// when it lies in F.
inline std::vector<Vector> sample_set_in_ball(const ClosedSet& set, const Vector& center, double radius, std::size_t count, Rng& rng)
{
    require_dimension(center, set.dimension(), "sample_set_in_ball");
    std::vector<Vector> out;
    const Vector ball_lo = center.array() - radius;
    const Vector ball_hi = center.array() + radius;
    if (const auto* fp = std::get_if<ClosedSet::FinitePoints>(&set.variant())) {
        std::vector<std::pair<double, std::size_t>> hits;
        for (std::size_t i = 0; i < fp->points.size(); ++i) {
            const double d = (fp->points[i] - center).norm();
            if (d < radius) hits.emplace_back(d, i);
        }
        std::stable_sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        if (hits.size() > count) hits.resize(count);
        for (const auto& h : hits) out.push_back(fp->points[h.second]);
        return out;
    }
    if (set.distance(center) == 0.0) out.push_back(center);
    std::vector<std::pair<Vector, Vector>> regions;
    if (const auto* bu = std::get_if<ClosedSet::BoxUnion>(&set.variant())) {
        for (const auto& b : bu->boxes) regions.emplace_back(b.lo.cwiseMax(ball_lo), b.hi.cwiseMin(ball_hi));
    } else if (const auto* bl = std::get_if<ClosedSet::BallUnion>(&set.variant())) {
        for (const auto& b : bl->balls) {
            regions.emplace_back((b.center.array() - b.radius).matrix().cwiseMax(ball_lo),
                                 (b.center.array() + b.radius).matrix().cwiseMin(ball_hi));
        }
    }
    std::vector<std::pair<Vector, Vector>> live;
    for (auto& r : regions) {
        if ((r.first.array() <= r.second.array()).all()) live.push_back(std::move(r));
    }
    if (live.empty()) return out;
    std::uniform_int_distribution<std::size_t> pick(0, live.size() - 1);
    const std::size_t max_attempts = 200 * count + 1000;
    for (std::size_t attempt = 0; attempt < max_attempts && out.size() < count; ++attempt) {
        const auto& r = live[pick(rng)];
        Vector p = detail::uniform_in_box(r.first, r.second, rng);
        if ((p - center).norm() >= radius) continue;
        if (set.distance(p) != 0.0) continue;
        out.push_back(std::move(p));
    }
    return out;
}

/// Off-set samples around F: half uniform in the bounding box of F enlarged by its diameter
/// (at least 1), half offset from points of F by log-uniform distances in [1e-3, 1] times that length.
inline std::vector<Vector> sample_off_set(const ClosedSet& set, std::size_t count, Rng& rng)
{
    const AxisBox box = set.bounds();
    const double len = std::max(1.0, (box.hi - box.lo).norm());
    const Vector lo = box.lo.array() - len;
    const Vector hi = box.hi.array() + len;
    const Vector mid = (box.lo + box.hi) / 2.0;
    const int n = set.dimension();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Vector> anchors = sample_set_in_ball(set, mid, len * (1.0 + 1e-9), 256, rng);
    if (anchors.empty()) anchors.push_back(set.nearest(mid).foot);
    std::uniform_int_distribution<std::size_t> pick(0, anchors.size() - 1);
    std::vector<Vector> out;
    out.reserve(count);
    while (out.size() < count) {
        Vector x;
        if (out.size() % 2 == 0) {
            x = detail::uniform_in_box(lo, hi, rng);
        } else {
            const double rho = len * std::pow(10.0, -3.0 * unit(rng));
            x = anchors[pick(rng)] + rho * random_direction(n, rng);
        }
        if (set.distance(x) > 0.0) out.push_back(std::move(x));
    }
    return out;
}

} // namespace whitney
