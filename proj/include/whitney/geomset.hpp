#pragma once

#include "whitney/core.hpp"

#include <algorithm>
#include <cstddef>
#include <limits>
#include <memory>
#include <numeric>
#include <utility>
#include <variant>
#include <vector>

namespace whitney {

/// A nearest point of a closed set together with the Euclidean distance to it.
struct NearestResult {
    Vector foot;
    double distance = 0.0;
    std::size_t primitive = 0; ///< index of the point, box or ball that produced the foot
};

struct AxisBox {
    Vector lo;
    Vector hi;
};

struct Ball {
    Vector center;
    double radius = 0.0;
};

namespace detail {

inline double squared_distance(const Vector& x, const Vector& p)
{
    return (x - p).squaredNorm();
}

// Candidate (distance, foot) wins over the incumbent on strictly smaller distance,
// or on equal distance with a lexicographically smaller foot.
inline bool better_candidate(double d, const Vector& foot, double best_d, const Vector& best_foot)
{
    if (d < best_d) return true;
    if (d > best_d) return false;
    return lex_less(foot, best_foot);
}

/// Static k-d tree over a point list; nearest queries break ties lexicographically.
class KdTree {
public:
    explicit KdTree(const std::vector<Vector>& points) : points_(&points)
    {
        order_.resize(points.size());
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        nodes_.reserve(points.size());
        root_ = build(0, order_.size(), 0);
    }

    /// Returns (index, squared distance).
    std::pair<std::size_t, double> nearest(const Vector& x) const
    {
        std::size_t best = std::numeric_limits<std::size_t>::max();
        double best_d2 = std::numeric_limits<double>::infinity();
        search(root_, x, best, best_d2);
        return {best, best_d2};
    }

private:
    struct Node {
        std::size_t index = 0;
        int axis = 0;
        int left = -1;
        int right = -1;
    };

    int build(std::size_t begin, std::size_t end, int depth)
    {
        if (begin >= end) return -1;
        const auto& pts = *points_;
        const int n = static_cast<int>(pts[order_[begin]].size());
        // split on the axis of widest spread
        int axis = depth % n;
        double widest = -1.0;
        for (int a = 0; a < n; ++a) {
            double lo = std::numeric_limits<double>::infinity();
            double hi = -lo;
            for (std::size_t i = begin; i < end; ++i) {
                lo = std::min(lo, pts[order_[i]][a]);
                hi = std::max(hi, pts[order_[i]][a]);
            }
            if (hi - lo > widest) {
                widest = hi - lo;
                axis = a;
            }
        }
        const std::size_t mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                         order_.begin() + static_cast<std::ptrdiff_t>(mid),
                         order_.begin() + static_cast<std::ptrdiff_t>(end),
                         [&](std::size_t l, std::size_t r) { return pts[l][axis] < pts[r][axis]; });
        const int id = static_cast<int>(nodes_.size());
        nodes_.push_back(Node{order_[mid], axis, -1, -1});
        const int left = build(begin, mid, depth + 1);
        const int right = build(mid + 1, end, depth + 1);
        nodes_[static_cast<std::size_t>(id)].left = left;
        nodes_[static_cast<std::size_t>(id)].right = right;
        return id;
    }

    void search(int node, const Vector& x, std::size_t& best, double& best_d2) const
    {
        if (node < 0) return;
        const Node& nd = nodes_[static_cast<std::size_t>(node)];
        const auto& pts = *points_;
        const Vector& p = pts[nd.index];
        const double d2 = squared_distance(x, p);
        if (best == std::numeric_limits<std::size_t>::max() ||
            better_candidate(d2, p, best_d2, pts[best])) {
            best = nd.index;
            best_d2 = d2;
        }
        const double diff = x[nd.axis] - p[nd.axis];
        const int near = diff < 0 ? nd.left : nd.right;
        const int far = diff < 0 ? nd.right : nd.left;
        search(near, x, best, best_d2);
        // ties must be explored as well, hence <=
        if (diff * diff <= best_d2) search(far, x, best, best_d2);
    }

    const std::vector<Vector>* points_;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

} // namespace detail

/// A closed nonempty subset of R^n with exact distance and nearest-point queries.
///
/// Three representations are supported: a finite point list, a union of closed axis-aligned
/// boxes (degenerate boxes such as segments are allowed) and a union of closed balls.
/// Instances are immutable; every query is pure and may be called concurrently.
class ClosedSet {
public:
    struct FinitePoints {
        std::vector<Vector> points;
    };
    struct BoxUnion {
        std::vector<AxisBox> boxes;
    };
    struct BallUnion {
        std::vector<Ball> balls;
    };
    using Variant = std::variant<FinitePoints, BoxUnion, BallUnion>;

    /// Finite point lists above this size are queried through a k-d tree.
    static constexpr std::size_t kKdTreeThreshold = 64;

    static ClosedSet points(std::vector<Vector> pts)
    {
        if (pts.empty()) throw InputError("point set must be nonempty");
        const int n = static_cast<int>(pts.front().size());
        for (const auto& p : pts) check_point(p, n, "point");
        return ClosedSet(n, FinitePoints{std::move(pts)});
    }

    static ClosedSet boxes(std::vector<AxisBox> bs)
    {
        if (bs.empty()) throw InputError("box union must be nonempty");
        const int n = static_cast<int>(bs.front().lo.size());
        for (const auto& b : bs) {
            check_point(b.lo, n, "box lo");
            check_point(b.hi, n, "box hi");
            if ((b.lo.array() > b.hi.array()).any()) throw InputError("box requires lo <= hi componentwise");
        }
        return ClosedSet(n, BoxUnion{std::move(bs)});
    }

    static ClosedSet balls(std::vector<Ball> bs)
    {
        if (bs.empty()) throw InputError("ball union must be nonempty");
        const int n = static_cast<int>(bs.front().center.size());
        for (const auto& b : bs) {
            check_point(b.center, n, "ball center");
            if (!(b.radius > 0.0) || !std::isfinite(b.radius)) throw InputError("ball radius must be positive");
        }
        return ClosedSet(n, BallUnion{std::move(bs)});
    }

    int dimension() const { return dimension_; }
    const Variant& variant() const { return variant_; }
    bool is_finite_points() const { return std::holds_alternative<FinitePoints>(variant_); }

    /// Number of primitives (points, boxes or balls).
    std::size_t primitive_count() const
    {
        return std::visit([](const auto& v) -> std::size_t {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, FinitePoints>) return v.points.size();
            else if constexpr (std::is_same_v<T, BoxUnion>) return v.boxes.size();
            else return v.balls.size();
        }, variant_);
    }

    double distance(const Vector& x) const
    {
        require_dimension(x, dimension_, "distance");
        return std::visit([&](const auto& v) { return distance_impl(v, x); }, variant_);
    }

    /// A nearest point; ties between primitives resolve to the lexicographically smallest foot.
    NearestResult nearest(const Vector& x) const
    {
        require_dimension(x, dimension_, "nearest");
        return std::visit([&](const auto& v) { return nearest_impl(v, x); }, variant_);
    }

    bool contains(const Vector& x) const { return distance(x) == 0.0; }

    /// r(x) = dist(x, F) / 20.
    double whitney_radius(const Vector& x) const { return distance(x) / 20.0; }

    /// r(x) = min(s, dist(x, F)) / 20 for a cap s >= 1.
    double capped_radius(double s, const Vector& x) const
    {
        if (!(s >= 1.0)) throw InputError("capped_radius requires s >= 1");
        return std::min(s, distance(x)) / 20.0;
    }

    /// Membership in H_d = {x : dist(x, F) <= d}.
    bool in_sublevel(double d, const Vector& x) const
    {
        if (!(d > 0.0)) throw InputError("in_sublevel requires d > 0");
        return distance(x) <= d;
    }

    /// The image {factor * y : y in F}.
    ClosedSet scaled(double factor) const
    {
        if (!(factor > 0.0) || !std::isfinite(factor)) throw InputError("scale factor must be positive");
        return std::visit([&](const auto& v) -> ClosedSet {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, FinitePoints>) {
                std::vector<Vector> pts;
                pts.reserve(v.points.size());
                for (const auto& p : v.points) pts.push_back(p * factor);
                return points(std::move(pts));
            } else if constexpr (std::is_same_v<T, BoxUnion>) {
                std::vector<AxisBox> bs;
                for (const auto& b : v.boxes) bs.push_back({b.lo * factor, b.hi * factor});
                return boxes(std::move(bs));
            } else {
                std::vector<Ball> bs;
                for (const auto& b : v.balls) bs.push_back({b.center * factor, b.radius * factor});
                return balls(std::move(bs));
            }
        }, variant_);
    }

    /// Axis-aligned bounding box of the set.
    AxisBox bounds() const
    {
        Vector lo = Vector::Constant(dimension_, std::numeric_limits<double>::infinity());
        Vector hi = -lo;
        std::visit([&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, FinitePoints>) {
                for (const auto& p : v.points) {
                    lo = lo.cwiseMin(p);
                    hi = hi.cwiseMax(p);
                }
            } else if constexpr (std::is_same_v<T, BoxUnion>) {
                for (const auto& b : v.boxes) {
                    lo = lo.cwiseMin(b.lo);
                    hi = hi.cwiseMax(b.hi);
                }
            } else {
                for (const auto& b : v.balls) {
                    lo = lo.cwiseMin((b.center.array() - b.radius).matrix());
                    hi = hi.cwiseMax((b.center.array() + b.radius).matrix());
                }
            }
        }, variant_);
        return {lo, hi};
    }

private:
    ClosedSet(int n, Variant v) : dimension_(n), variant_(std::move(v))
    {
        if (auto* fp = std::get_if<FinitePoints>(&variant_); fp && fp->points.size() > kKdTreeThreshold) {
            // the tree keeps a pointer into the owning vector; share it so copies stay valid
            shared_points_ = std::make_shared<const std::vector<Vector>>(fp->points);
            tree_ = std::make_shared<const detail::KdTree>(*shared_points_);
        }
    }

    static void check_point(const Vector& p, int n, const char* what)
    {
        if (n <= 0) throw InputError("dimension must be positive");
        require_dimension(p, n, what);
        if (!p.allFinite()) throw InputError(std::string(what) + " has non-finite entries");
    }

    double distance_impl(const FinitePoints& v, const Vector& x) const { return nearest_impl(v, x).distance; }

    NearestResult nearest_impl(const FinitePoints& v, const Vector& x) const
    {
        std::size_t best = 0;
        double best_d2 = 0.0;
        if (tree_) {
            std::tie(best, best_d2) = tree_->nearest(x);
        } else {
            best_d2 = detail::squared_distance(x, v.points[0]);
            for (std::size_t i = 1; i < v.points.size(); ++i) {
                const double d2 = detail::squared_distance(x, v.points[i]);
                if (detail::better_candidate(d2, v.points[i], best_d2, v.points[best])) {
                    best = i;
                    best_d2 = d2;
                }
            }
        }
        return {v.points[best], std::sqrt(best_d2), best};
    }

    static Vector box_foot(const AxisBox& b, const Vector& x) { return x.cwiseMax(b.lo).cwiseMin(b.hi); }

    double distance_impl(const BoxUnion& v, const Vector& x) const
    {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& b : v.boxes) best = std::min(best, (x - box_foot(b, x)).norm());
        return best;
    }

    NearestResult nearest_impl(const BoxUnion& v, const Vector& x) const
    {
        NearestResult out{box_foot(v.boxes[0], x), 0.0, 0};
        out.distance = (x - out.foot).norm();
        for (std::size_t i = 1; i < v.boxes.size(); ++i) {
            Vector foot = box_foot(v.boxes[i], x);
            const double d = (x - foot).norm();
            if (detail::better_candidate(d, foot, out.distance, out.foot)) out = {std::move(foot), d, i};
        }
        return out;
    }

    static std::pair<Vector, double> ball_foot(const Ball& b, const Vector& x)
    {
        const Vector diff = x - b.center;
        const double len = diff.norm();
        if (len <= b.radius) return {x, 0.0};
        return {b.center + diff * (b.radius / len), len - b.radius};
    }

    double distance_impl(const BallUnion& v, const Vector& x) const
    {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& b : v.balls) best = std::min(best, std::max((x - b.center).norm() - b.radius, 0.0));
        return best;
    }

    NearestResult nearest_impl(const BallUnion& v, const Vector& x) const
    {
        auto [foot0, d0] = ball_foot(v.balls[0], x);
        NearestResult out{std::move(foot0), d0, 0};
        for (std::size_t i = 1; i < v.balls.size(); ++i) {
            auto [foot, d] = ball_foot(v.balls[i], x);
            if (detail::better_candidate(d, foot, out.distance, out.foot)) out = {std::move(foot), d, i};
        }
        return out;
    }

    int dimension_ = 0;
    Variant variant_;
    std::shared_ptr<const std::vector<Vector>> shared_points_;
    std::shared_ptr<const detail::KdTree> tree_;
};

} // namespace whitney
