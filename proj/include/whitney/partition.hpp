#pragma once

#include "whitney/core.hpp"
#include "whitney/geomset.hpp"
#include "whitney/parallel.hpp"
#include "whitney/smoothbump.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

namespace whitney {

/// Cube keys carry a fixed-capacity coordinate array; dyadic partitions support n <= 8.
inline constexpr int kMaxDimension = 8;

/// Selection window, support dilation and transition profile of the dyadic construction.
///
/// A dyadic cube Q of side s and center c is selected when
/// `window_lo * sqrt(n) * s <= delta(c) <= window_hi * sqrt(n) * s`, where delta is the
/// (possibly capped) distance to F. Its bump is 1 on Q and vanishes outside Q dilated
/// by `dilation` about c.
struct PartitionConfig {
    double window_lo = 1.75;
    double window_hi = 5.0;
    double dilation = 1.5;
    TransitionProfile profile = TransitionProfile::exp();

    void validate() const
    {
        if (!(dilation > 1.0)) throw InputError("dilation must exceed 1");
        // dilated cube must sit inside B(x_j, delta(x_j) / 2)
        if (!(window_lo > dilation)) throw InputError("window_lo must exceed the dilation factor");
        // a window this wide guarantees every point lies in some selected cube
        if (!(window_hi >= 2.0 * window_lo + 1.5)) throw InputError("window_hi must be at least 2*window_lo + 1.5");
    }
};

struct DyadicCube {
    int level = 0;
    int dim = 0;
    std::array<std::int64_t, kMaxDimension> coords{};

    auto operator<=>(const DyadicCube&) const = default;
    bool operator==(const DyadicCube&) const = default;

    double side() const { return std::ldexp(1.0, -level); }

    Vector center() const
    {
        Vector c(dim);
        for (int i = 0; i < dim; ++i) c[i] = std::ldexp(static_cast<double>(coords[static_cast<std::size_t>(i)]) + 0.5, -level);
        return c;
    }

    std::string to_string() const
    {
        std::ostringstream os;
        os << level << ':';
        for (int i = 0; i < dim; ++i) os << (i ? "," : "") << coords[static_cast<std::size_t>(i)];
        return os.str();
    }
};

struct DyadicCubeHash {
    std::size_t operator()(const DyadicCube& c) const noexcept
    {
        std::uint64_t h = 0x9E3779B97F4A7C15ULL ^ static_cast<std::uint64_t>(c.level);
        for (int i = 0; i < c.dim; ++i) {
            h ^= static_cast<std::uint64_t>(c.coords[static_cast<std::size_t>(i)]) + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
        }
        return static_cast<std::size_t>(h);
    }
};

/// Member identity: the scale index (0 for single-scale partitions, m for the 6^m layer of a
/// combined partition) and the originating dyadic cube. Ordering is the summation order.
struct MemberId {
    int scale = 0;
    DyadicCube cube;

    auto operator<=>(const MemberId&) const = default;
    bool operator==(const MemberId&) const = default;

    std::string to_string() const { return std::to_string(scale) + ":" + cube.to_string(); }
};

/// One bump of the family, in the caller's coordinates.
struct Member {
    MemberId id;
    Vector anchor;                ///< x_j, the cube center
    double anchor_distance = 0.0; ///< dist(x_j, F)
    double radius = 0.0;          ///< r(x_j); support lies in B(x_j, 10 r(x_j))
    CubeBump bump;
};

struct WeightEntry {
    Member member;
    double weight = 0.0;
    Vector gradient;
};

struct ActiveSet {
    Vector x;
    std::vector<Member> members; ///< sorted by id
    std::size_t size() const { return members.size(); }
};

/// The dyadic partition of unity on R^n \ F, optionally capped (r = min(s, dist)/20) and
/// optionally evaluated through the coordinate scaling phi*(x) = phi(x / s).
///
/// Members are materialized lazily per query; cube distances on the evaluation path are
/// memoized behind a shared mutex, so concurrent queries return the same results as
/// sequential ones.
class DyadicPartition {
public:
    DyadicPartition(const ClosedSet& set, PartitionConfig config,
                    double cap = std::numeric_limits<double>::infinity(), double coord_scale = 1.0,
                    int scale_tag = 0)
        : original_(set), local_(coord_scale == 1.0 ? set : set.scaled(1.0 / coord_scale)), config_(std::move(config)),
          cap_(cap), coord_scale_(coord_scale), scale_tag_(scale_tag), memo_(std::make_unique<Memo>())
    {
        config_.validate();
        if (set.dimension() > kMaxDimension) throw InputError("dyadic partitions support dimension <= 8");
        if (!(coord_scale > 0.0)) throw InputError("coordinate scale must be positive");
        if (!(cap > 0.0)) throw InputError("cap must be positive");
        sqrt_n_ = std::sqrt(static_cast<double>(set.dimension()));
        local_cap_ = cap / coord_scale;
    }

    const ClosedSet& set() const { return original_; }
    const PartitionConfig& config() const { return config_; }
    int dimension() const { return original_.dimension(); }
    double cap() const { return cap_; }
    double coord_scale() const { return coord_scale_; }

    /// min(cap, dist(x, F)) in the caller's coordinates.
    double scale_length(const Vector& x) const { return std::min(cap_, original_.distance(x)); }

    /// The radius function of this family: min(cap, dist(x, F)) / 20.
    double radius(const Vector& x) const { return scale_length(x) / 20.0; }

    /// Nonzero members at x with normalized weights and exact gradients, sorted by id.
    std::vector<WeightEntry> weights_at(const Vector& x) const
    {
        require_dimension(x, dimension(), "weights_at");
        const Vector y = x / coord_scale_;
        const double dy = local_.distance(y);
        if (dy == 0.0) throw QueryError("weights_at: query point lies in F");
        const double delta = std::min(local_cap_, dy);
        const int n = dimension();
        const double dil = config_.dilation;
        const double s_hi = delta / ((config_.window_lo - dil / 2.0) * sqrt_n_);
        const double s_lo = delta / ((config_.window_hi + dil / 2.0) * sqrt_n_);
        const int k_lo = static_cast<int>(std::ceil(-std::log2(s_hi))) - 1;
        const int k_hi = static_cast<int>(std::floor(-std::log2(s_lo))) + 1;

        std::vector<WeightEntry> out;
        std::vector<BumpSample> raw;
        for (int k = k_lo; k <= k_hi; ++k) {
            const double scale = std::ldexp(1.0, k);
            std::array<std::int64_t, kMaxDimension> lo{}, hi{};
            for (int i = 0; i < n; ++i) {
                const double t = y[i] * scale - 0.5;
                lo[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(std::ceil(t - dil / 2.0));
                hi[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(std::floor(t + dil / 2.0));
            }
            DyadicCube cube;
            cube.level = k;
            cube.dim = n;
            for_each_in_range(cube, lo, hi, 0, [&](const DyadicCube& c) {
                const CubeInfo ci = info(c, true);
                if (!ci.selected) return;
                Member m = materialize(c, ci);
                BumpSample b = bump_eval(local_bump(c), config_.profile, y);
                if (b.value <= 0.0) return;
                out.push_back(WeightEntry{std::move(m), 0.0, Vector()});
                raw.push_back(std::move(b));
            });
        }
        double total = 0.0;
        Vector total_grad = Vector::Zero(n);
        for (const auto& b : raw) {
            total += b.value;
            total_grad += b.gradient;
        }
        if (!(total >= 1.0 - 1e-12)) throw std::logic_error("partition covering invariant violated: sum of raw bumps < 1");
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double w = raw[i].value / total;
            out[i].weight = w;
            out[i].gradient = (raw[i].gradient - w * total_grad) / (total * coord_scale_);
        }
        std::sort(out.begin(), out.end(), [](const WeightEntry& a, const WeightEntry& b) { return a.member.id < b.member.id; });
        return out;
    }

    /// Members whose ball B(x_j, 10 r(x_j)) meets the open ball B(x, R); requires R < min(cap, dist(x, F)).
    std::vector<Member> members_meeting(const Vector& x, double R) const
    {
        require_dimension(x, dimension(), "members_meeting");
        const Vector y = x / coord_scale_;
        const double dy = local_.distance(y);
        if (dy == 0.0) throw QueryError("active_set: query point lies in F");
        const double delta = std::min(local_cap_, dy);
        const double rl = R / coord_scale_;
        if (!(rl >= 0.0) || !(rl < delta)) throw std::logic_error("members_meeting: query radius must be below the scale length");
        const int n = dimension();
        const double w_lo = config_.window_lo;
        const double w_hi = config_.window_hi;
        // any meeting member satisfies (2/3)(delta - R) < delta_j < 2 (delta + R)
        const double s_max = 2.0 * (delta + rl) / (w_lo * sqrt_n_);
        const double s_min = (2.0 / 3.0) * (delta - rl) / (w_hi * sqrt_n_);
        const int k_first = static_cast<int>(std::ceil(-std::log2(s_max))) - 1;
        const int k_last = static_cast<int>(std::floor(-std::log2(s_min))) + 1;
        const double reach = 2.0 * rl + delta; // |y - x_j| < R + delta_j / 2 < 2R + delta
        const int k_root = static_cast<int>(std::floor(-std::log2(2.0 * reach)));

        std::vector<Member> out;
        std::vector<DyadicCube> stack;
        {
            const double scale = std::ldexp(1.0, k_root);
            std::array<std::int64_t, kMaxDimension> lo{}, hi{};
            for (int i = 0; i < n; ++i) {
                lo[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(std::floor((y[i] - reach) * scale));
                hi[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(std::floor((y[i] + reach) * scale));
            }
            DyadicCube root;
            root.level = k_root;
            root.dim = n;
            for_each_in_range(root, lo, hi, 0, [&](const DyadicCube& c) { stack.push_back(c); });
        }
        while (!stack.empty()) {
            DyadicCube q = stack.back();
            stack.pop_back();
            const double s = q.side();
            const Vector c = q.center();
            // box distance from y to the cube
            double box2 = 0.0;
            for (int i = 0; i < n; ++i) {
                const double excess = std::abs(y[i] - c[i]) - s / 2.0;
                if (excess > 0.0) box2 += excess * excess;
            }
            if (std::sqrt(box2) >= reach) continue;
            const CubeInfo ci = info(q, false);
            if (q.level >= k_first && q.level <= k_last && ci.selected && (y - c).norm() < rl + ci.delta / 2.0) {
                out.push_back(materialize(q, ci));
            }
            if (q.level >= k_last) continue;
            // descendants have centers within sqrt(n) s / 2 of c and sides <= s / 2
            if (ci.delta - sqrt_n_ * s / 2.0 > w_hi * sqrt_n_ * s / 2.0) continue;
            if (std::sqrt(box2) >= rl + w_hi * sqrt_n_ * s / 4.0) continue;
            push_children(q, stack);
        }
        std::sort(out.begin(), out.end(), [](const Member& a, const Member& b) { return a.id < b.id; });
        return out;
    }

    /// S_x: members whose support ball meets B(x, 10 r(x)).
    ActiveSet active_set(const Vector& x) const { return {x, members_meeting(x, 10.0 * radius(x))}; }

    bool is_selected(const DyadicCube& c) const { return info(c, false).selected; }

    Member member(const DyadicCube& c) const
    {
        const CubeInfo ci = info(c, false);
        if (!ci.selected) throw QueryError("cube " + c.to_string() + " is not a member of the partition");
        return materialize(c, ci);
    }

private:
    struct CubeInfo {
        double distance = 0.0; // local coordinates
        double delta = 0.0;
        bool selected = false;
    };

    struct Memo {
        std::shared_mutex mutex;
        std::unordered_map<DyadicCube, CubeInfo, DyadicCubeHash> cubes;
    };
    static constexpr std::size_t kMemoCapacity = std::size_t{1} << 20;

    CubeInfo compute_info(const DyadicCube& c) const
    {
        CubeInfo ci;
        ci.distance = local_.distance(c.center());
        ci.delta = std::min(local_cap_, ci.distance);
        const double s = c.side();
        ci.selected = config_.window_lo * sqrt_n_ * s <= ci.delta && ci.delta <= config_.window_hi * sqrt_n_ * s;
        return ci;
    }

    CubeInfo info(const DyadicCube& c, bool memoize) const
    {
        if (!memoize) return compute_info(c);
        {
            std::shared_lock lock(memo_->mutex);
            auto it = memo_->cubes.find(c);
            if (it != memo_->cubes.end()) return it->second;
        }
        const CubeInfo ci = compute_info(c);
        std::unique_lock lock(memo_->mutex);
        if (memo_->cubes.size() < kMemoCapacity) memo_->cubes.emplace(c, ci);
        return ci;
    }

    CubeBump local_bump(const DyadicCube& c) const
    {
        const double h = c.side() / 2.0;
        return CubeBump{c.center(), h, (config_.dilation - 1.0) * h};
    }

    Member materialize(const DyadicCube& c, const CubeInfo& ci) const
    {
        CubeBump lb = local_bump(c);
        Member m;
        m.id = MemberId{scale_tag_, c};
        m.anchor = lb.center * coord_scale_;
        m.anchor_distance = ci.distance * coord_scale_;
        m.radius = ci.delta * coord_scale_ / 20.0;
        m.bump = CubeBump{m.anchor, lb.core_halfwidth * coord_scale_, lb.collar * coord_scale_};
        return m;
    }

    template <class Fn>
    static void for_each_in_range(DyadicCube& cube, const std::array<std::int64_t, kMaxDimension>& lo,
                                  const std::array<std::int64_t, kMaxDimension>& hi, int axis, Fn&& fn)
    {
        if (axis == cube.dim) {
            fn(cube);
            return;
        }
        const auto a = static_cast<std::size_t>(axis);
        for (std::int64_t i = lo[a]; i <= hi[a]; ++i) {
            cube.coords[a] = i;
            for_each_in_range(cube, lo, hi, axis + 1, fn);
        }
    }

    static void push_children(const DyadicCube& q, std::vector<DyadicCube>& stack)
    {
        const int n = q.dim;
        for (unsigned mask = 0; mask < (1u << n); ++mask) {
            DyadicCube child;
            child.level = q.level + 1;
            child.dim = n;
            for (int i = 0; i < n; ++i) {
                child.coords[static_cast<std::size_t>(i)] = 2 * q.coords[static_cast<std::size_t>(i)] + ((mask >> i) & 1u);
            }
            stack.push_back(child);
        }
    }

    ClosedSet original_;
    ClosedSet local_;
    PartitionConfig config_;
    double cap_;
    double coord_scale_;
    int scale_tag_;
    double local_cap_ = 0.0;
    double sqrt_n_ = 1.0;
    std::unique_ptr<Memo> memo_;
};

/// Value and gradient of u_s and v_s = u_s (1 - u_{s/6}) at one scale s = 6^m.
struct Gate {
    int m = 0;
    double scale = 0.0;
    double u = 0.0;
    Vector grad_u;
    double v = 0.0;
    Vector grad_v;
};

/// Multi-scale combination of capped partitions at s = 6, 36, ..., 6^{m_max}.
///
/// Each layer is the s = 1 capped partition of F / s evaluated at x / s. Gates
/// u_s = sum_{j in J_s} phi_{s,j} with J_s = {j : x_{s,j} in H_{s/18}}, u_1 = 0, and
/// v_s = u_s (1 - u_{s/6}) blend the layers; the members are v_s phi_{s,j} for j in M_s.
/// The ladder is finite, so the family sums to one only on H_{6^{m_max}/36}.
class CombinedPartition {
public:
    CombinedPartition(const ClosedSet& set, int m_max, const PartitionConfig& config) : set_(set), m_max_(m_max)
    {
        if (m_max < 1) throw InputError("combine_capped requires m_max >= 1");
        if (m_max > 20) throw InputError("combine_capped supports m_max <= 20");
        layers_.reserve(static_cast<std::size_t>(m_max));
        for (int m = 1; m <= m_max; ++m) {
            const double s = scale(m);
            layers_.push_back(std::make_unique<DyadicPartition>(set, config, s, s, m));
        }
    }

    const ClosedSet& set() const { return set_; }
    int dimension() const { return set_.dimension(); }
    int m_max() const { return m_max_; }
    static double scale(int m) { return std::pow(6.0, m); }
    const DyadicPartition& layer(int m) const { return *layers_.at(static_cast<std::size_t>(m - 1)); }

    /// Queries are valid on H_{6^{m_max}/36}, where the top gate is identically one.
    double validity_radius() const { return scale(m_max_) / 36.0; }

    double radius(const Vector& x) const { return set_.distance(x) / 20.0; }

    static bool in_J(int m, double anchor_distance) { return anchor_distance <= scale(m) / 18.0; }

    static bool in_M(int m, double anchor_distance)
    {
        const double s = scale(m);
        if (m == 1) return anchor_distance <= s / 6.0;
        return anchor_distance <= s / 6.0 && anchor_distance > s / 324.0;
    }

    std::vector<Gate> gates_at(const Vector& x) const
    {
        check_query(x);
        std::vector<Gate> gates;
        double prev_u = 0.0;
        Vector prev_grad = Vector::Zero(dimension());
        for (int m = 1; m <= m_max_; ++m) {
            Gate g;
            g.m = m;
            g.scale = scale(m);
            g.u = 0.0;
            g.grad_u = Vector::Zero(dimension());
            for (const auto& e : layer(m).weights_at(x)) {
                if (!in_J(m, e.member.anchor_distance)) continue;
                g.u += e.weight;
                g.grad_u += e.gradient;
            }
            g.u = std::min(g.u, 1.0); // rounding can push a full sum just above one
            g.v = g.u * (1.0 - prev_u);
            g.grad_v = g.grad_u * (1.0 - prev_u) - g.u * prev_grad;
            prev_u = g.u;
            prev_grad = g.grad_u;
            gates.push_back(std::move(g));
        }
        return gates;
    }

    std::vector<WeightEntry> weights_at(const Vector& x) const
    {
        check_query(x);
        std::vector<WeightEntry> out;
        double prev_u = 0.0;
        Vector prev_grad = Vector::Zero(dimension());
        for (int m = 1; m <= m_max_; ++m) {
            auto entries = layer(m).weights_at(x);
            double u = 0.0;
            Vector grad_u = Vector::Zero(dimension());
            for (const auto& e : entries) {
                if (!in_J(m, e.member.anchor_distance)) continue;
                u += e.weight;
                grad_u += e.gradient;
            }
            u = std::min(u, 1.0);
            const double v = u * (1.0 - prev_u);
            const Vector grad_v = grad_u * (1.0 - prev_u) - u * prev_grad;
            for (auto& e : entries) {
                if (!in_M(m, e.member.anchor_distance)) continue;
                WeightEntry w;
                w.weight = v * e.weight;
                w.gradient = grad_v * e.weight + v * e.gradient;
                if (w.weight == 0.0 && w.gradient.isZero(0.0)) continue;
                w.member = uncapped(std::move(e.member));
                out.push_back(std::move(w));
            }
            prev_u = u;
            prev_grad = grad_u;
        }
        std::sort(out.begin(), out.end(), [](const WeightEntry& a, const WeightEntry& b) { return a.member.id < b.member.id; });
        return out;
    }

    /// Members (j in M_s at every layer) whose ball B(x_j, 10 r(x_j)) meets the open ball B(x, R).
    std::vector<Member> members_meeting(const Vector& x, double R) const
    {
        const double d = check_query(x);
        std::vector<Member> out;
        for (int m = 1; m <= m_max_; ++m) {
            const double s = scale(m);
            // M_s anchors have dist <= s/6, so their balls stay inside H_{s/4}
            if (d - R >= s / 4.0) continue;
            if (!(R < std::min(s, d))) throw std::logic_error("members_meeting: radius too large for layer");
            for (auto& mem : layer(m).members_meeting(x, R)) {
                if (!in_M(m, mem.anchor_distance)) continue;
                out.push_back(uncapped(std::move(mem)));
            }
        }
        std::sort(out.begin(), out.end(), [](const Member& a, const Member& b) { return a.id < b.id; });
        return out;
    }

    ActiveSet active_set(const Vector& x) const { return {x, members_meeting(x, 10.0 * radius(x))}; }

    /// Diagnostic shells: x in G_s (union of J_s member balls) and x in O_s (the others).
    bool in_G(int m, const Vector& x) const { return shell_contains(m, x, true); }
    bool in_O(int m, const Vector& x) const { return shell_contains(m, x, false); }

private:
    double check_query(const Vector& x) const
    {
        require_dimension(x, dimension(), "combined partition query");
        const double d = set_.distance(x);
        if (d == 0.0) throw QueryError("combined partition: query point lies in F");
        if (d > validity_radius()) throw QueryError("combined partition: query beyond the truncation shell");
        return d;
    }

    bool shell_contains(int m, const Vector& x, bool j_side) const
    {
        for (const auto& mem : layer(m).members_meeting(x, 0.0)) {
            if (in_J(m, mem.anchor_distance) == j_side) return true;
        }
        return false;
    }

    static Member uncapped(Member m)
    {
        // M_s anchors satisfy dist <= s/6 < s, where the capped and uncapped radii agree
        m.radius = m.anchor_distance / 20.0;
        return m;
    }

    ClosedSet set_;
    int m_max_;
    std::vector<std::unique_ptr<DyadicPartition>> layers_;
};

/// A partition of unity on R^n \ F with the (P1)-(P7) contract: one of the single-scale
/// dyadic families (plain, capped, scaled) or the multi-scale combination.
class Partition {
public:
    using Impl = std::variant<DyadicPartition, CombinedPartition>;

    static Partition build(const ClosedSet& set, const PartitionConfig& config = {})
    {
        return Partition(std::make_shared<Impl>(std::in_place_type<DyadicPartition>, set, config));
    }

    /// Capped radius r(x) = min(s, dist(x, F)) / 20; for s > 1 the s = 1 family of F / s
    /// evaluated at x / s.
    static Partition build_capped(const ClosedSet& set, double s, const PartitionConfig& config = {})
    {
        if (!(s >= 1.0) || !std::isfinite(s)) throw InputError("build_capped requires s >= 1");
        return Partition(std::make_shared<Impl>(std::in_place_type<DyadicPartition>, set, config, s, s));
    }

    static Partition combine_capped(const ClosedSet& set, int m_max, const PartitionConfig& config = {})
    {
        return Partition(std::make_shared<Impl>(std::in_place_type<CombinedPartition>, set, m_max, config));
    }

    const ClosedSet& set() const
    {
        return std::visit([](const auto& p) -> const ClosedSet& { return p.set(); }, *impl_);
    }
    int dimension() const { return set().dimension(); }

    double radius(const Vector& x) const
    {
        return std::visit([&](const auto& p) { return p.radius(x); }, *impl_);
    }

    std::vector<WeightEntry> weights_at(const Vector& x) const
    {
        return std::visit([&](const auto& p) { return p.weights_at(x); }, *impl_);
    }

    ActiveSet active_set(const Vector& x) const
    {
        return std::visit([&](const auto& p) { return p.active_set(x); }, *impl_);
    }

    const CombinedPartition* combined() const { return std::get_if<CombinedPartition>(impl_.get()); }
    const DyadicPartition* dyadic() const { return std::get_if<DyadicPartition>(impl_.get()); }

private:
    explicit Partition(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<const Impl> impl_;
};

/// Handle on the gates of a combined partition.
class CombinerState {
public:
    explicit CombinerState(Partition p) : partition_(std::move(p))
    {
        if (!partition_.combined()) throw InputError("CombinerState requires a combined partition");
    }
    const CombinedPartition& combined() const { return *partition_.combined(); }
    std::vector<double> scales() const
    {
        std::vector<double> out;
        for (int m = 1; m <= combined().m_max(); ++m) out.push_back(CombinedPartition::scale(m));
        return out;
    }
    std::vector<Gate> gates_at(const Vector& x) const { return combined().gates_at(x); }

private:
    Partition partition_;
};

inline std::pair<Partition, CombinerState> combine_capped(const ClosedSet& set, int m_max, const PartitionConfig& config = {})
{
    Partition p = Partition::combine_capped(set, m_max, config);
    return {p, CombinerState(p)};
}

/// Measured constants and worst-case residuals of a partition over a sample.
struct PartitionReport {
    std::size_t samples = 0;
    std::size_t c1_measured = 0;   ///< max card S_x
    double c2_measured = 0.0;      ///< max r(x) |phi_j'(x)|
    double max_sum_error = 0.0;    ///< max |sum phi - 1|
    double max_grad_sum = 0.0;     ///< max r(x) |sum phi'|
    double p2_ratio_min = std::numeric_limits<double>::infinity();
    double p2_ratio_max = 0.0;
    double min_weight = std::numeric_limits<double>::infinity();
    std::size_t max_nonzero = 0;   ///< max number of members with phi_j(x) != 0
    std::vector<std::string> violations;
    bool passed() const { return violations.empty(); }
};

struct PartitionTolerances {
    double sum = 1e-10;
    double grad_sum = 1e-8;
    double ratio_slack = 1e-12;
};

/// Evaluates (P1)-(P7) at every sample and aggregates; any (P2)-(P6) breach is recorded.
inline PartitionReport verify_partition(const Partition& p, const std::vector<Vector>& samples, unsigned threads = 1,
                                        const PartitionTolerances& tol = {})
{
    struct Local {
        std::size_t card = 0;
        std::size_t nonzero = 0;
        double c2 = 0.0;
        double sum_err = 0.0;
        double grad_sum = 0.0;
        double rmin = std::numeric_limits<double>::infinity();
        double rmax = 0.0;
        double wmin = std::numeric_limits<double>::infinity();
        std::string violation;
    };
    for (const auto& x : samples) {
        if (p.set().distance(x) == 0.0) throw QueryError("verify_partition: sample lies in F");
    }
    std::vector<Local> results(samples.size());
    parallel_for(samples.size(), threads, [&](std::size_t i) {
        const Vector& x = samples[i];
        Local& out = results[i];
        const double r = p.radius(x);
        const ActiveSet active = p.active_set(x);
        out.card = active.size();
        for (const auto& m : active.members) {
            const double ratio = r / m.radius;
            out.rmin = std::min(out.rmin, ratio);
            out.rmax = std::max(out.rmax, ratio);
        }
        const auto weights = p.weights_at(x);
        double sum = 0.0;
        Vector grad = Vector::Zero(x.size());
        const double sqrt_n = std::sqrt(static_cast<double>(x.size()));
        for (const auto& w : weights) {
            sum += w.weight;
            grad += w.gradient;
            out.wmin = std::min(out.wmin, w.weight);
            out.c2 = std::max(out.c2, r * w.gradient.norm());
            if (w.weight != 0.0) ++out.nonzero;
            const double support = sqrt_n * (w.member.bump.core_halfwidth + w.member.bump.collar);
            if (!(support < 10.0 * w.member.radius) && out.violation.empty()) out.violation = "P4 support exceeds ball";
            const bool listed = std::binary_search(active.members.begin(), active.members.end(), w.member,
                                                   [](const Member& a, const Member& b) { return a.id < b.id; });
            if (!listed && out.violation.empty()) out.violation = "nonzero member missing from active set";
        }
        out.sum_err = std::abs(sum - 1.0);
        out.grad_sum = r * grad.norm();
        if (out.violation.empty()) {
            if (out.wmin < 0.0) out.violation = "P3 negative weight";
            else if (out.sum_err > tol.sum) out.violation = "P5 weights do not sum to one";
            else if (out.grad_sum > tol.grad_sum) out.violation = "P6 gradients do not sum to zero";
            else if (out.rmin < (1.0 / 3.0) * (1.0 - tol.ratio_slack) || out.rmax > 3.0 * (1.0 + tol.ratio_slack))
                out.violation = "P2 radius ratio outside [1/3, 3]";
        }
    });
    PartitionReport rep;
    rep.samples = samples.size();
    for (std::size_t i = 0; i < results.size(); ++i) {
        const Local& l = results[i];
        rep.c1_measured = std::max(rep.c1_measured, l.card);
        rep.max_nonzero = std::max(rep.max_nonzero, l.nonzero);
        rep.c2_measured = std::max(rep.c2_measured, l.c2);
        rep.max_sum_error = std::max(rep.max_sum_error, l.sum_err);
        rep.max_grad_sum = std::max(rep.max_grad_sum, l.grad_sum);
        rep.p2_ratio_min = std::min(rep.p2_ratio_min, l.rmin);
        rep.p2_ratio_max = std::max(rep.p2_ratio_max, l.rmax);
        rep.min_weight = std::min(rep.min_weight, l.wmin);
        if (!l.violation.empty()) {
            std::ostringstream os;
            os << "sample " << i << ": " << l.violation;
            rep.violations.push_back(os.str());
        }
    }
    return rep;
}

} // namespace whitney
