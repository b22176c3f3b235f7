#pragma once

#include "whitney/core.hpp"
#include "whitney/extend.hpp"
#include "whitney/jetfield.hpp"
#include "whitney/parallel.hpp"
#include "whitney/partition.hpp"
#include "whitney/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

namespace whitney {

enum class SeriesKind { Frechet, Strict, Hoelder, Continuity };

inline std::string series_kind_name(SeriesKind k)
{
    switch (k) {
    case SeriesKind::Frechet: return "frechet";
    case SeriesKind::Strict: return "strict";
    case SeriesKind::Hoelder: return "hoelder";
    default: return "continuity";
    }
}

/// Sup estimates of a residual quotient, one per (strictly decreasing) scale.
struct ResidualSeries {
    SeriesKind kind = SeriesKind::Frechet;
    double alpha = 1.0;
    std::vector<double> scales;
    std::vector<double> residuals;

    double first() const { return residuals.empty() ? 0.0 : residuals.front(); }
    double last() const { return residuals.empty() ? 0.0 : residuals.back(); }
    double max() const { return residuals.empty() ? 0.0 : *std::max_element(residuals.begin(), residuals.end()); }

    /// Finite stand-in for "tends to 0": last <= max(first / 2, abs_tol).
    bool decays(double abs_tol = 0.0) const { return !residuals.empty() && last() <= std::max(first() / 2.0, abs_tol); }

    /// Least-squares slope of log residual against log scale over the positive entries.
    double loglog_slope() const
    {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int k = 0;
        for (std::size_t i = 0; i < scales.size(); ++i) {
            if (!(residuals[i] > 0.0)) continue;
            const double lx = std::log(scales[i]);
            const double ly = std::log(residuals[i]);
            sx += lx;
            sy += ly;
            sxx += lx * lx;
            sxy += lx * ly;
            ++k;
        }
        if (k < 2) return std::numeric_limits<double>::quiet_NaN();
        const double denom = k * sxx - sx * sx;
        return denom == 0.0 ? std::numeric_limits<double>::quiet_NaN() : (k * sxy - sx * sy) / denom;
    }
};

struct EstimatorOptions {
    std::uint64_t seed = 0;
    unsigned threads = 1;
};

namespace detail {

inline void require_on_set(const ClosedSet& set, const Vector& a, const char* what)
{
    require_dimension(a, set.dimension(), what);
    if (set.distance(a) > 1e-12) throw QueryError(std::string(what) + ": a does not lie in F");
}

inline void require_scales(const std::vector<double>& scales, const char* what)
{
    if (scales.empty()) throw InputError(std::string(what) + ": no scales given");
    for (std::size_t i = 0; i < scales.size(); ++i) {
        if (!(scales[i] > 0.0) || !std::isfinite(scales[i])) throw InputError(std::string(what) + ": scales must be positive");
        if (i > 0 && !(scales[i] < scales[i - 1])) throw InputError(std::string(what) + ": scales must be strictly decreasing");
    }
}

template <class Fn>
double parallel_sup(std::size_t count, unsigned threads, Fn&& fn)
{
    std::vector<double> vals(count, 0.0);
    parallel_for(count, threads, [&](std::size_t i) { vals[i] = fn(i); });
    double sup = 0.0;
    for (double v : vals) sup = std::max(sup, v);
    return sup;
}

/// Annulus samples plus points of F in the annulus (rho/2, rho] about a.
inline std::vector<Vector> annulus_points(const ClosedSet& set, const Vector& a, double rho, std::size_t count, std::uint64_t seed,
                                          const char* tag, bool include_set)
{
    Rng rng(derive_seed(seed, tag, a, rho));
    std::vector<Vector> xs = sample_annulus(a, rho / 2.0, rho, count, rng);
    if (include_set) {
        Rng srng(derive_seed(seed, std::string(tag) + "-set", a, rho));
        for (auto& p : sample_set_in_ball(set, a, rho * (1.0 + 1e-12), count, srng)) {
            const double d = (p - a).norm();
            if (d > rho / 2.0 && d <= rho) xs.push_back(std::move(p));
        }
    }
    return xs;
}

struct PointPair {
    Vector x;
    Vector y;
};

/// Pairs in B(a, rho): (a, y), uniform pairs, close pairs, and pairs of F points (each with its
/// nearest predecessor). Each family draws from its own stream, so larger counts extend smaller ones.
inline std::vector<PointPair> ball_pairs(const ClosedSet& set, const Vector& a, double rho, std::size_t count, std::uint64_t seed,
                                         const char* tag)
{
    const std::size_t quarter = std::max<std::size_t>(1, count / 4);
    std::vector<PointPair> out;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    {
        Rng rng(derive_seed(seed, std::string(tag) + "-anchor", a, rho));
        for (auto& y : sample_ball(a, rho, quarter, rng)) out.push_back({a, std::move(y)});
    }
    {
        Rng rng(derive_seed(seed, std::string(tag) + "-uniform", a, rho));
        auto xs = sample_ball(a, rho, 2 * quarter, rng);
        for (std::size_t i = 0; i + 1 < xs.size(); i += 2) out.push_back({xs[i], xs[i + 1]});
    }
    {
        Rng rng(derive_seed(seed, std::string(tag) + "-close", a, rho));
        auto xs = sample_ball(a, rho, quarter, rng);
        for (auto& x : xs) {
            const Vector dir = random_direction(static_cast<int>(a.size()), rng);
            const double h = rho * std::pow(10.0, -4.0 * unit(rng));
            Vector y = x + h * dir;
            if ((y - a).norm() < rho) out.push_back({std::move(x), std::move(y)});
        }
    }
    {
        Rng rng(derive_seed(seed, std::string(tag) + "-set", a, rho));
        auto ps = sample_set_in_ball(set, a, rho, quarter, rng);
        for (std::size_t i = 0; i < ps.size(); ++i) {
            std::size_t best = i;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < i; ++k) {
                const double d = (ps[k] - ps[i]).norm();
                if (d > 0.0 && d < best_d) {
                    best_d = d;
                    best = k;
                }
            }
            if (best != i) out.push_back({ps[best], ps[i]});
            if ((ps[i] - a).norm() > 0.0) out.push_back({a, ps[i]});
        }
    }
    out.erase(std::remove_if(out.begin(), out.end(), [](const PointPair& p) { return (p.x - p.y).norm() == 0.0; }), out.end());
    return out;
}

} // namespace detail

/// Per scale rho, sup over x in the annulus (rho/2, rho] (off-set samples and points of F) of
/// ||f(x) - f(a) - L(a)(x - a)|| / |x - a|.
template <class Field>
ResidualSeries frechet_residual(const Field& field, const JetField& jets, const Vector& a, const std::vector<double>& scales,
                                std::size_t samples_per_scale, const EstimatorOptions& opt = {})
{
    detail::require_on_set(jets.set(), a, "frechet_residual");
    detail::require_scales(scales, "frechet_residual");
    const Vector fa = field.value(a);
    const Matrix La = jets.op(a);
    ResidualSeries s{SeriesKind::Frechet, 1.0, scales, {}};
    for (double rho : scales) {
        const auto xs = detail::annulus_points(jets.set(), a, rho, samples_per_scale, opt.seed, "frechet", true);
        s.residuals.push_back(detail::parallel_sup(xs.size(), opt.threads, [&](std::size_t i) {
            const Vector dx = xs[i] - a;
            return (field.value(xs[i]) - fa - La * dx).norm() / dx.norm();
        }));
    }
    return s;
}

/// Per scale rho, sup over sampled pairs x != y in B(a, rho) of ||f(y) - f(x) - L(a)(y - x)|| / |y - x|.
template <class Field>
ResidualSeries strict_residual(const Field& field, const JetField& jets, const Vector& a, const std::vector<double>& scales,
                               std::size_t pairs_per_scale, const EstimatorOptions& opt = {})
{
    detail::require_on_set(jets.set(), a, "strict_residual");
    detail::require_scales(scales, "strict_residual");
    const Matrix La = jets.op(a);
    ResidualSeries s{SeriesKind::Strict, 1.0, scales, {}};
    for (double rho : scales) {
        const auto pairs = detail::ball_pairs(jets.set(), a, rho, pairs_per_scale, opt.seed, "strict");
        s.residuals.push_back(detail::parallel_sup(pairs.size(), opt.threads, [&](std::size_t i) {
            const Vector dx = pairs[i].y - pairs[i].x;
            return (field.value(pairs[i].y) - field.value(pairs[i].x) - La * dx).norm() / dx.norm();
        }));
    }
    return s;
}

/// Per scale rho, sup over the annulus of ||f(x) - f(a)|| / |x - a|^alpha. Boundedness is the criterion.
template <class Field>
ResidualSeries hoelder_residual(const Field& field, const Vector& a, double alpha, const std::vector<double>& scales,
                                std::size_t samples_per_scale, const EstimatorOptions& opt = {})
{
    if (!(alpha > 0.0 && alpha <= 1.0)) throw InputError("hoelder_residual: alpha must lie in (0, 1]");
    require_dimension(a, field.set().dimension(), "hoelder_residual");
    detail::require_scales(scales, "hoelder_residual");
    const Vector fa = field.value(a);
    ResidualSeries s{SeriesKind::Hoelder, alpha, scales, {}};
    for (double rho : scales) {
        const auto xs = detail::annulus_points(field.set(), a, rho, samples_per_scale, opt.seed, "hoelder", true);
        s.residuals.push_back(detail::parallel_sup(xs.size(), opt.threads, [&](std::size_t i) {
            return (field.value(xs[i]) - fa).norm() / std::pow((xs[i] - a).norm(), alpha);
        }));
    }
    return s;
}

/// Per scale rho, sup over off-set annulus samples of ||f'(x) - L(a)||.
inline ResidualSeries derivative_continuity_at(const Extension& ext, const JetField& jets, const Vector& a,
                                               const std::vector<double>& scales, std::size_t samples_per_scale,
                                               const EstimatorOptions& opt = {})
{
    detail::require_on_set(jets.set(), a, "derivative_continuity_at");
    detail::require_scales(scales, "derivative_continuity_at");
    const Matrix La = jets.op(a);
    ResidualSeries s{SeriesKind::Continuity, 1.0, scales, {}};
    for (double rho : scales) {
        const auto xs = detail::annulus_points(jets.set(), a, rho, samples_per_scale, opt.seed, "continuity", false);
        s.residuals.push_back(detail::parallel_sup(xs.size(), opt.threads, [&](std::size_t i) {
            if (ext.set().distance(xs[i]) == 0.0) return 0.0;
            return operator_norm(ext.jacobian(xs[i]) - La);
        }));
    }
    return s;
}

/// ||f(y) - f(x) - L(a)(y - x)||.
template <class Field>
double exy(const Field& field, const JetField& jets, const Vector& a, const Vector& x, const Vector& y)
{
    detail::require_on_set(jets.set(), a, "exy");
    return (field.value(y) - field.value(x) - jets.op(a) * (y - x)).norm();
}

/// Sup of ||f(y) - f(x)|| / |y - x| over sampled pairs in B(a, r).
template <class Field>
double lipschitz_on_ball(const Field& field, const Vector& a, double r, std::size_t pairs, const EstimatorOptions& opt = {})
{
    if (!(r > 0.0) || !std::isfinite(r)) throw InputError("lipschitz_on_ball: r must be positive and finite");
    require_dimension(a, field.set().dimension(), "lipschitz_on_ball");
    const auto ps = detail::ball_pairs(field.set(), a, r, pairs, opt.seed, "lipschitz");
    return detail::parallel_sup(ps.size(), opt.threads, [&](std::size_t i) {
        return (field.value(ps[i].y) - field.value(ps[i].x)).norm() / (ps[i].y - ps[i].x).norm();
    });
}

/// Constants of the quantitative derivative and increment bounds at a.
struct ClaimParams {
    Vector a;
    double K1 = 0.0;
    double K2 = 0.0;
    double r1 = 0.0;
    double r2 = 0.0;
    double M = 0.0;
    double r3 = 0.0;
    double K3 = 0.0;
    double C1 = 0.0;
    double C2 = 0.0;
    double La_norm = 0.0;
};

inline ClaimParams claim_params(const JetField& jets, const PartitionReport& report, const Vector& a, double r1, double r2, double K1,
                                double K2)
{
    if (report.samples == 0) throw InputError("claim_params: a populated partition report is required");
    if (!(K1 >= 0.0) || !(K2 >= 0.0)) throw InputError("claim_params: K1, K2 must be nonnegative");
    if (!(r1 > 0.0) || !(r2 > 0.0)) throw InputError("claim_params: r1, r2 must be positive");
    detail::require_on_set(jets.set(), a, "claim_params");
    ClaimParams p;
    p.a = a;
    p.K1 = K1;
    p.K2 = K2;
    p.r1 = r1;
    p.r2 = r2;
    p.C1 = static_cast<double>(report.c1_measured);
    p.C2 = report.c2_measured;
    p.La_norm = operator_norm(jets.op(a));
    p.M = p.La_norm + K1;
    p.r3 = std::min(r1 / 3.0, r2 / 6.0);
    const double c = 20.0 * p.C1 * p.C2;
    p.K3 = (1.0 + 5.0 * c) * K1 + 6.0 * c * K2;
    return p;
}

/// Sampled sup of ||A(t) - L(a)|| for t in B(a, r1) \ F. For the built-in fields the sup is also
/// taken over the jets at points of F the field can reach (B(a, 2 r1) for nearest, B(a, 6 r1) for averaged).
inline double measure_k1(const AField& field, const JetField& jets, const Vector& a, double r1, std::size_t samples,
                         const EstimatorOptions& opt = {})
{
    detail::require_on_set(jets.set(), a, "measure_k1");
    const Matrix La = jets.op(a);
    Rng rng(derive_seed(opt.seed, "k1", a, r1));
    const auto ts = sample_ball(a, r1, samples, rng);
    double sup = detail::parallel_sup(ts.size(), opt.threads, [&](std::size_t i) {
        if (jets.set().distance(ts[i]) == 0.0) return 0.0;
        return operator_norm(field(ts[i]) - La);
    });
    double reach = 0.0;
    if (field.kind() == AField::Kind::NearestJet) reach = 2.0 * r1;
    if (field.kind() == AField::Kind::Averaged) reach = 6.0 * r1;
    if (reach > 0.0) {
        Rng srng(derive_seed(opt.seed, "k1-set", a, reach));
        for (const auto& p : sample_set_in_ball(jets.set(), a, reach, samples, srng)) sup = std::max(sup, operator_norm(jets.op(p) - La));
    }
    return sup;
}

/// Sampled sup over pairs y != z of F in B(a, r2) of ||f(z) - f(y) - L(a)(z - y)|| / |z - y|
/// (all pairs of up to `points` sampled points).
inline double measure_k2(const JetField& jets, const Vector& a, double r2, std::size_t points, const EstimatorOptions& opt = {})
{
    detail::require_on_set(jets.set(), a, "measure_k2");
    const Matrix La = jets.op(a);
    Rng rng(derive_seed(opt.seed, "k2", a, r2));
    const auto ps = sample_set_in_ball(jets.set(), a, r2, points, rng);
    std::vector<Vector> fs(ps.size());
    for (std::size_t i = 0; i < ps.size(); ++i) fs[i] = jets.value(ps[i]);
    return detail::parallel_sup(ps.size(), opt.threads, [&](std::size_t i) {
        double sup = 0.0;
        for (std::size_t k = 0; k < i; ++k) {
            const Vector dz = ps[i] - ps[k];
            const double len = dz.norm();
            if (len == 0.0) continue;
            sup = std::max(sup, (fs[i] - fs[k] - La * dz).norm() / len);
        }
        return sup;
    });
}

struct ClaimReport {
    ClaimParams params;
    bool vacuous = false;           ///< a hypothesis sample exceeded K1 or K2
    double k1_observed = 0.0;
    double k2_observed = 0.0;
    std::size_t derivative_samples = 0;
    double max_derivative_dev = 0.0; ///< max ||f'(x) - L(a)||, |x - a| < r3
    std::size_t derivative_violations = 0;
    std::size_t pair_samples = 0;
    double max_exy_ratio = 0.0;      ///< max E_xy / |y - x|, pairs within r3 / 2
    std::size_t exy_violations = 0;
    bool passed() const { return vacuous || (derivative_violations == 0 && exy_violations == 0); }
};

/// Checks ||f'(x) - L(a)|| <= K3 on B(a, r3) \ F and E_xy <= 33 K3 |y - x| on B(a, r3 / 2).
/// The hypotheses are re-sampled first; if a sample breaks them the bounds are reported vacuous.
inline ClaimReport check_claim_bounds(const Extension& ext, const ClaimParams& params, std::size_t samples, std::size_t pairs,
                                      const EstimatorOptions& opt = {})
{
    const JetField& jets = ext.jets();
    const Vector& a = params.a;
    detail::require_on_set(jets.set(), a, "check_claim_bounds");
    if (!std::isfinite(params.r3) || !(params.r3 > 0.0)) throw InputError("check_claim_bounds: r3 must be positive and finite");
    const Matrix La = jets.op(a);
    ClaimReport rep;
    rep.params = params;
    const double slack = 1e-12;
    rep.k1_observed = measure_k1(ext.afield(), jets, a, std::min(params.r1, 1e6), std::max<std::size_t>(samples / 4, 16), opt);
    rep.k2_observed = measure_k2(jets, a, std::min(params.r2, 1e6), 400, opt);
    rep.vacuous = rep.k1_observed > params.K1 * (1.0 + slack) + slack || rep.k2_observed > params.K2 * (1.0 + slack) + slack;

    Rng rng(derive_seed(opt.seed, "claim-derivative", a, params.r3));
    const auto xs = sample_ball(a, params.r3, samples, rng);
    std::vector<double> devs(xs.size(), 0.0);
    parallel_for(xs.size(), opt.threads, [&](std::size_t i) {
        if (ext.set().distance(xs[i]) == 0.0) return;
        devs[i] = operator_norm(ext.jacobian(xs[i]) - La);
    });
    rep.derivative_samples = xs.size();
    for (double d : devs) {
        rep.max_derivative_dev = std::max(rep.max_derivative_dev, d);
        if (d > params.K3 * (1.0 + slack) + 1e-12) ++rep.derivative_violations;
    }

    const auto ps = detail::ball_pairs(jets.set(), a, params.r3 / 2.0, pairs, opt.seed, "claim-exy");
    std::vector<double> ratios(ps.size(), 0.0);
    parallel_for(ps.size(), opt.threads, [&](std::size_t i) {
        const Vector dx = ps[i].y - ps[i].x;
        ratios[i] = (ext.value(ps[i].y) - ext.value(ps[i].x) - La * dx).norm() / dx.norm();
    });
    rep.pair_samples = ps.size();
    for (double r : ratios) {
        rep.max_exy_ratio = std::max(rep.max_exy_ratio, r);
        if (r > 33.0 * params.K3 * (1.0 + slack) + 1e-12) ++rep.exy_violations;
    }
    return rep;
}

/// Directions seen from x in a finite sample of F, and the determinant and norm diagnostics.
struct ConeReport {
    Vector x;
    std::vector<Vector> tangent_dirs;
    std::vector<Vector> paratingent_dirs;
    double best_det = 0.0;
    int f_m_index = 0; ///< smallest m with best_det >= 1/m; 0 when best_det = 0
    double bound_lhs = 0.0;
    double bound_rhs = 0.0;
};

namespace detail {

/// Keeps the first representative of every cluster of unit vectors closer than `tol` radians.
class DirectionSet {
public:
    DirectionSet(int n, double tol) : n_(n), tol_(tol), cell_(tol) {}

    void add(const Vector& v)
    {
        const auto key = cell_of(v);
        bool dup = false;
        visit_neighbors(key, 0, key, [&](const std::vector<std::int64_t>& k) {
            if (dup) return;
            auto it = cells_.find(k);
            if (it == cells_.end()) return;
            for (std::size_t idx : it->second) {
                const double chord = (dirs_[idx] - v).norm();
                if (2.0 * std::asin(std::min(1.0, chord / 2.0)) < tol_) {
                    dup = true;
                    return;
                }
            }
        });
        if (dup) return;
        cells_[key].push_back(dirs_.size());
        dirs_.push_back(v);
    }

    const std::vector<Vector>& directions() const { return dirs_; }

private:
    struct KeyHash {
        std::size_t operator()(const std::vector<std::int64_t>& k) const noexcept
        {
            std::size_t h = 1469598103934665603ULL;
            for (auto v : k) h = (h ^ static_cast<std::size_t>(v)) * 1099511628211ULL;
            return h;
        }
    };

    std::vector<std::int64_t> cell_of(const Vector& v) const
    {
        std::vector<std::int64_t> k(static_cast<std::size_t>(n_));
        for (int i = 0; i < n_; ++i) k[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(std::floor(v[i] / cell_));
        return k;
    }

    template <class Fn>
    void visit_neighbors(const std::vector<std::int64_t>& base, int axis, std::vector<std::int64_t> cur, Fn&& fn) const
    {
        if (axis == n_) {
            fn(cur);
            return;
        }
        for (int d = -1; d <= 1; ++d) {
            cur[static_cast<std::size_t>(axis)] = base[static_cast<std::size_t>(axis)] + d;
            visit_neighbors(base, axis + 1, cur, fn);
        }
    }

    int n_;
    double tol_;
    double cell_;
    std::vector<Vector> dirs_;
    std::unordered_map<std::vector<std::int64_t>, std::vector<std::size_t>, KeyHash> cells_;
};

inline std::vector<std::size_t> window_points(const std::vector<Vector>& pts, const Vector& x, double outer)
{
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if ((pts[i] - x).norm() <= outer) idx.push_back(i);
    }
    return idx;
}

inline constexpr std::size_t kExhaustivePairPoints = 400;
inline constexpr std::size_t kSampledPairs = 160000;

/// Index pairs (i < k) among the window points: all of them for small windows, else a fixed-seed sample.
inline std::vector<std::pair<std::size_t, std::size_t>> window_pairs(const std::vector<std::size_t>& idx, std::uint64_t seed)
{
    std::vector<std::pair<std::size_t, std::size_t>> out;
    if (idx.size() <= kExhaustivePairPoints) {
        for (std::size_t i = 0; i < idx.size(); ++i)
            for (std::size_t k = i + 1; k < idx.size(); ++k) out.emplace_back(idx[i], idx[k]);
        return out;
    }
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, idx.size() - 1);
    for (std::size_t t = 0; t < kSampledPairs; ++t) {
        const std::size_t i = pick(rng);
        const std::size_t k = pick(rng);
        if (i != k) out.emplace_back(idx[std::min(i, k)], idx[std::max(i, k)]);
    }
    return out;
}

} // namespace detail

/// max |det(v_1..v_n)| over n-tuples of the given unit vectors: exhaustive for small inputs, greedy otherwise.
inline double best_det(const std::vector<Vector>& dirs, int n)
{
    if (dirs.empty() || n < 1) return 0.0;
    if (n == 1) return 1.0;
    const std::size_t D = dirs.size();
    if (static_cast<std::size_t>(n) > D) return 0.0;
    double combos = 1.0;
    for (int i = 0; i < n; ++i) combos *= static_cast<double>(D - static_cast<std::size_t>(i)) / (i + 1);
    double best = 0.0;
    if (combos <= 5e7) {
        std::vector<std::size_t> pick(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) pick[static_cast<std::size_t>(i)] = static_cast<std::size_t>(i);
        Matrix m(n, n);
        while (true) {
            for (int c = 0; c < n; ++c) m.col(c) = dirs[pick[static_cast<std::size_t>(c)]];
            best = std::max(best, std::abs(m.determinant()));
            int i = n - 1;
            while (i >= 0 && pick[static_cast<std::size_t>(i)] == D - static_cast<std::size_t>(n - i)) --i;
            if (i < 0) break;
            ++pick[static_cast<std::size_t>(i)];
            for (int k = i + 1; k < n; ++k) pick[static_cast<std::size_t>(k)] = pick[static_cast<std::size_t>(k - 1)] + 1;
        }
        return std::min(best, 1.0);
    }
    // greedy volume growth from a bounded set of starting directions
    const std::size_t starts = std::min<std::size_t>(D, 64);
    for (std::size_t s = 0; s < starts; ++s) {
        std::vector<Vector> basis{dirs[s]};
        Matrix q = dirs[s];
        for (int step = 1; step < n; ++step) {
            double best_res = -1.0;
            std::size_t best_idx = 0;
            for (std::size_t k = 0; k < D; ++k) {
                const Vector res = dirs[k] - q * (q.transpose() * dirs[k]);
                if (res.norm() > best_res) {
                    best_res = res.norm();
                    best_idx = k;
                }
            }
            basis.push_back(dirs[best_idx]);
            Matrix b(n, static_cast<Eigen::Index>(basis.size()));
            for (std::size_t c = 0; c < basis.size(); ++c) b.col(static_cast<Eigen::Index>(c)) = basis[c];
            Eigen::HouseholderQR<Matrix> qr(b);
            q = qr.householderQ() * Matrix::Identity(n, static_cast<Eigen::Index>(basis.size()));
        }
        Matrix m(n, n);
        for (int c = 0; c < n; ++c) m.col(c) = basis[static_cast<std::size_t>(c)];
        best = std::max(best, std::abs(m.determinant()));
    }
    return std::min(best, 1.0);
}

inline int f_m_index(double d)
{
    if (!(d > 0.0)) return 0;
    return std::max(1, static_cast<int>(std::ceil(1.0 / d - 1e-9)));
}

/// Tangent directions (p - x)/|p - x| for sample points with inner <= |p - x| <= outer, and
/// paratingent directions (q - p)/|q - p| (both orientations) over pairs of sample points
/// within `outer` of x, deduplicated at `angular_tol` radians.
inline ConeReport cone_directions(const std::vector<Vector>& sample, const Vector& x, double inner, double outer,
                                  double angular_tol = 1e-3, std::uint64_t seed = 0)
{
    if (sample.empty()) throw InputError("cone_directions: empty window (no sample points)");
    const int n = static_cast<int>(x.size());
    for (const auto& p : sample) require_dimension(p, n, "cone_directions");
    if (!(inner > 0.0) || !(outer > inner)) throw InputError("cone_directions: window requires 0 < inner < outer");
    double nearest = std::numeric_limits<double>::infinity();
    for (const auto& p : sample) nearest = std::min(nearest, (p - x).norm());
    if (nearest > 1e-12) throw QueryError("cone_directions: x does not lie in the sample of F");
    ConeReport rep;
    rep.x = x;
    detail::DirectionSet tan(n, angular_tol), ptg(n, angular_tol);
    const auto idx = detail::window_points(sample, x, outer);
    for (std::size_t i : idx) {
        const double d = (sample[i] - x).norm();
        if (d >= inner && d <= outer) tan.add((sample[i] - x) / d);
    }
    for (const auto& [i, k] : detail::window_pairs(idx, derive_seed(seed, "cones", x, outer))) {
        const Vector v = sample[k] - sample[i];
        const double len = v.norm();
        if (len == 0.0) continue;
        ptg.add(v / len);
        ptg.add(-v / len);
    }
    rep.tangent_dirs = tan.directions();
    rep.paratingent_dirs = ptg.directions();
    rep.best_det = best_det(rep.paratingent_dirs, n);
    rep.f_m_index = f_m_index(rep.best_det);
    return rep;
}

struct UniquenessCheck {
    bool passed = false;
    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0; ///< rhs (1 + slack) - lhs
};

/// ||L(x)|| against (n / d) times the largest pair quotient ||f(p) - f(q)|| / |p - q| in the window.
inline UniquenessCheck uniqueness_bound_check(const JetField& jets, const std::vector<Vector>& sample, const Vector& x, ConeReport& report,
                                              double outer, double slack = 0.1, std::uint64_t seed = 0)
{
    if (!(report.best_det > 0.0)) {
        throw QueryError("uniqueness_bound_check: paratingent directions do not span R^n (d = 0); the derivative is not determined uniquely");
    }
    const int n = static_cast<int>(x.size());
    const auto idx = detail::window_points(sample, x, outer);
    std::vector<Vector> fs(sample.size());
    for (std::size_t i : idx) fs[i] = jets.value(sample[i]);
    double q = 0.0;
    for (const auto& [i, k] : detail::window_pairs(idx, derive_seed(seed, "cones", x, outer))) {
        const double len = (sample[k] - sample[i]).norm();
        if (len == 0.0) continue;
        q = std::max(q, (fs[k] - fs[i]).norm() / len);
    }
    UniquenessCheck out;
    out.lhs = operator_norm(jets.op(x));
    out.rhs = static_cast<double>(n) / report.best_det * q;
    out.margin = out.rhs * (1.0 + slack) - out.lhs;
    out.passed = out.lhs <= out.rhs * (1.0 + slack);
    report.bound_lhs = out.lhs;
    report.bound_rhs = out.rhs;
    return out;
}

} // namespace whitney
