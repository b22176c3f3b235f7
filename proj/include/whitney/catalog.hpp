#pragma once

#include "whitney/core.hpp"
#include "whitney/geomset.hpp"
#include "whitney/jetfield.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace whitney {

/// Declared outcome of a suite on a case. `Fail` cases pass their declaration when the
/// underlying property is observed to break.
enum class Expect { Pass, Fail };

/// Window and sample used by the cone diagnostics.
struct ConeSetup {
    std::vector<Vector> sample;
    Vector x;
    double inner = 0.05;
    double outer = 0.5;
    std::vector<Vector> expected_tangent; ///< empty when not asserted
};

/// A named extension problem with its documented behaviour per suite.
struct CatalogCase {
    std::string name;
    std::string summary;
    std::string set_description;
    std::vector<std::string> exercises; ///< preserved properties the case exercises
    std::string notes;
    ClosedSet set;
    JetField jets;
    std::vector<Vector> probes;          ///< points a of F used by the pointwise suites
    std::map<std::string, Expect> expectations;
    double hoelder_alpha = 1.0;
    double hoelder_bound = 0.0;
    double lipschitz_radius = 0.25;
    std::optional<ConeSetup> cones;
    double resolution = 0.0; ///< finest meaningful scale; nonzero for truncated sets
};

namespace detail {

inline Vector vec(std::initializer_list<double> v)
{
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

inline Matrix mat(int rows, int cols, std::initializer_list<double> v)
{
    Matrix m(rows, cols);
    auto it = v.begin();
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = *it++;
    return m;
}

inline JetField affine_jets(const ClosedSet& set, const Vector& c, const Matrix& M)
{
    return JetField::rule(
        set, static_cast<int>(c.size()), [c, M](const Vector& z) -> Vector { return c + M * z; },
        [M](const Vector&) -> Matrix { return M; });
}

inline ClosedSet reciprocal_set(int kmax)
{
    std::vector<Vector> pts{vec({0.0})};
    for (int k = 1; k <= kmax; ++k) pts.push_back(vec({1.0 / k}));
    return ClosedSet::points(std::move(pts));
}

inline int reciprocal_index(double t)
{
    return t > 0.0 ? static_cast<int>(std::lround(1.0 / t)) : 0;
}

inline std::vector<Vector> cross_sample(int per_arm)
{
    std::vector<Vector> pts;
    for (int i = -per_arm; i <= per_arm; ++i) pts.push_back(vec({static_cast<double>(i) / per_arm, 0.0}));
    for (int i = -per_arm; i <= per_arm; ++i) {
        if (i != 0) pts.push_back(vec({0.0, static_cast<double>(i) / per_arm}));
    }
    return pts;
}

inline std::map<std::string, Expect> all_pass(std::initializer_list<const char*> suites)
{
    std::map<std::string, Expect> out;
    for (const char* s : suites) out[s] = Expect::Pass;
    return out;
}

inline constexpr int kReciprocalTruncation = 200;

} // namespace detail

inline std::vector<std::string> catalog_names()
{
    return {"affine", "affine3", "quadratic", "sqrt_hoelder", "lipschitz2seg", "smooth_balls", "helix",
            "jarnik", "altL", "oscillation", "cross", "cross_flat"};
}

/// Builds a catalog case by name; unknown names are input errors.
inline CatalogCase make_case(const std::string& name)
{
    using detail::mat;
    using detail::vec;
    if (name == "affine") {
        auto set = ClosedSet::points({vec({0, 0}), vec({1, 0}), vec({0, 1}), vec({-1, -1}), vec({0.5, 0.3})});
        const Vector c = vec({1.0, -2.0});
        const Matrix M = mat(2, 2, {1.0, 2.0, -0.5, 3.0});
        return {name, "f(z) = c + M z with L = M on five points of R^2", "F = {(0,0), (1,0), (0,1), (-1,-1), (0.5,0.3)}",
                {"extends", "frechet", "smooth-off-set", "strict", "lipschitz"}, "the extension reproduces the affine map exactly", set,
                detail::affine_jets(set, c, M), {vec({0, 0}), vec({0.5, 0.3})},
                detail::all_pass({"partition", "derivative", "hoelder", "strict", "lipschitz", "contracts"}), 1.0,
                operator_norm(M) + 1e-6, 0.25, std::nullopt};
    }
    if (name == "affine3") {
        auto set = ClosedSet::points({vec({0, 0, 0}), vec({1, 0, 0}), vec({0, 1, 0}), vec({0, 0, 1}), vec({-0.5, 0.5, 0.25})});
        const Vector c = vec({0.5});
        const Matrix M = mat(1, 3, {1.0, -2.0, 0.5});
        return {name, "f(z) = c + M z with L = M on five points of R^3", "F = {0, e1, e2, e3, (-0.5,0.5,0.25)}",
                {"extends", "frechet", "smooth-off-set"}, "", set, detail::affine_jets(set, c, M), {vec({0, 0, 0})},
                detail::all_pass({"partition", "derivative", "hoelder", "strict"}), 1.0, operator_norm(M) + 1e-6, 0.25, std::nullopt};
    }
    if (name == "quadratic") {
        auto set = ClosedSet::boxes({AxisBox{vec({0, 0}), vec({1, 1})}});
        auto f = [](const Vector& z) -> Vector { return vec({0.5 * z[0] * z[0] - 0.25 * z[1] * z[1], 0.5 * z[0] * z[1]}); };
        auto L = [](const Vector& z) -> Matrix { return mat(2, 2, {z[0], -0.5 * z[1], 0.5 * z[1], 0.5 * z[0]}); };
        return {name, "quadratic map on the unit square with its derivative", "F = [0,1]^2", {"extends", "frechet", "strict", "lipschitz"},
                "boundary probes: edge midpoint, corner", set, JetField::rule(set, 2, f, L), {vec({0.0, 0.5}), vec({1.0, 1.0}), vec({0.5, 0.0})},
                detail::all_pass({"partition", "derivative", "hoelder", "strict", "lipschitz", "contracts"}), 1.0, 3.0, 0.25, std::nullopt};
    }
    if (name == "sqrt_hoelder") {
        auto set = ClosedSet::boxes({AxisBox{vec({0}), vec({1})}});
        auto f = [](const Vector& z) -> Vector { return vec({std::sqrt(std::max(z[0], 0.0))}); };
        auto L = [](const Vector& z) -> Matrix { return mat(1, 1, {z[0] > 0.0 ? 0.5 / std::sqrt(z[0]) : 0.0}); };
        CatalogCase c{name, "f(t) = sqrt(t) on [0,1], L(t) = 1/(2 sqrt t), L(0) = 0", "F = [0,1] in R", {"continuity", "hoelder"},
                      "1/2-Hoelder at 0 with on-set constant 1; not differentiable at 0", set, JetField::rule(set, 1, f, L), {vec({0.0})},
                      detail::all_pass({"partition", "hoelder"}), 0.5, 3.0, 0.25, std::nullopt};
        c.expectations["derivative"] = Expect::Fail;
        return c;
    }
    if (name == "lipschitz2seg") {
        auto set = ClosedSet::boxes({AxisBox{vec({-1, 0}), vec({1, 0})}, AxisBox{vec({-1, 1}), vec({1, 1})}});
        auto f = [](const Vector& z) -> Vector {
            return vec({z[1] < 0.5 ? std::tanh(3.0 * z[0]) : 0.5 * std::tanh(3.0 * z[0]) - 0.25});
        };
        auto L = [](const Vector& z) -> Matrix {
            const double s = 1.0 / std::cosh(3.0 * z[0]);
            return mat(1, 2, {z[1] < 0.5 ? 3.0 * s * s : 1.5 * s * s, 0.0});
        };
        return {name, "smooth clamp tanh(3t) on one segment, a scaled copy on a parallel segment",
                "F = [-1,1] x {0} union [-1,1] x {1}", {"frechet", "strict", "lipschitz"}, "Lipschitz f, bounded continuous L", set,
                JetField::rule(set, 1, f, L), {vec({0.0, 0.0})},
                detail::all_pass({"partition", "derivative", "hoelder", "strict", "lipschitz", "contracts"}), 1.0, 4.0, 0.25, std::nullopt};
    }
    if (name == "smooth_balls") {
        auto set = ClosedSet::balls({Ball{vec({-1.0, 0.0}), 0.8}, Ball{vec({1.0, 0.0}), 0.8}});
        auto f = [](const Vector& z) -> Vector { return vec({std::sin(z[0]) + 0.5 * z[1] * z[1]}); };
        auto L = [](const Vector& z) -> Matrix { return mat(1, 2, {std::cos(z[0]), z[1]}); };
        return {name, "sin(z1) + z2^2/2 with its gradient on two disjoint discs", "F = B((-1,0),0.8) union B((1,0),0.8)",
                {"frechet", "strict", "lipschitz"}, "L continuous and a strict derivative at every point", set, JetField::rule(set, 1, f, L),
                {vec({-0.2, 0.0}), vec({1.0, 0.8})},
                detail::all_pass({"partition", "derivative", "hoelder", "strict", "lipschitz", "contracts"}), 1.0, 2.0, 0.25, std::nullopt};
    }
    if (name == "helix") {
        std::vector<Vector> pts;
        for (int k = 0; k <= 100; ++k) pts.push_back(vec({k / 50.0}));
        auto set = ClosedSet::points(std::move(pts));
        const double w = 2.0 * std::numbers::pi;
        auto f = [w](const Vector& t) -> Vector { return vec({std::cos(w * t[0]), std::sin(w * t[0]), t[0]}); };
        auto L = [w](const Vector& t) -> Matrix { return mat(3, 1, {-w * std::sin(w * t[0]), w * std::cos(w * t[0]), 1.0}); };
        return {name, "helix t -> (cos 2 pi t, sin 2 pi t, t) sampled at t = k/50", "F = {k/50 : 0 <= k <= 100} in R",
                {"extends", "frechet", "smooth-off-set"}, "range dimension 3", set, JetField::rule(set, 3, f, L), {vec({0.0}), vec({1.0})},
                detail::all_pass({"partition", "derivative", "contracts"}), 1.0, 10.0, 0.25, std::nullopt};
    }
    if (name == "jarnik") {
        auto set = detail::reciprocal_set(detail::kReciprocalTruncation);
        auto f = [](const Vector& t) -> Vector {
            const int k = detail::reciprocal_index(t[0]);
            return vec({k == 0 ? 0.0 : ((k % 2 == 0) ? 1.0 : -1.0) / (static_cast<double>(k) * k)});
        };
        auto L = [](const Vector&) -> Matrix { return mat(1, 1, {0.0}); };
        CatalogCase c{name, "f(1/k) = (-1)^k / k^2, f(0) = 0, L = 0", "F = {0} union {1/k : 1 <= k <= 200} (truncation radius 1/200)",
                      {"frechet", "strict"}, "f'(0) = 0 relative to F but 0 is not a strict derivative: consecutive slopes exceed 1",
                      set, JetField::rule(set, 1, f, L), {vec({0.0})},
                      detail::all_pass({"partition", "derivative"}), 1.0, 1.0, 0.25, std::nullopt};
        c.expectations["strict"] = Expect::Fail;
        c.resolution = 1.0 / detail::kReciprocalTruncation;
        return c;
    }
    if (name == "altL") {
        auto set = detail::reciprocal_set(detail::kReciprocalTruncation);
        auto f = [](const Vector&) -> Vector { return vec({0.0}); };
        auto L = [](const Vector& t) -> Matrix {
            const int k = detail::reciprocal_index(t[0]);
            return mat(1, 1, {k == 0 ? 0.0 : ((k % 2 == 0) ? 1.0 : -1.0)});
        };
        CatalogCase c{name, "f = 0, L(1/k) = (-1)^k, L(0) = 0", "F = {0} union {1/k : 1 <= k <= 200} (truncation radius 1/200)",
                      {"frechet", "strict"}, "L is discontinuous at 0, so the derivative of the extension is not continuous there",
                      set, JetField::rule(set, 1, f, L), {vec({0.0})},
                      detail::all_pass({"partition", "derivative"}), 1.0, 1.0, 0.25, std::nullopt};
        c.expectations["strict"] = Expect::Fail;
        c.expectations["contracts"] = Expect::Fail;
        c.resolution = 1.0 / detail::kReciprocalTruncation;
        return c;
    }
    if (name == "oscillation") {
        auto set = ClosedSet::boxes({AxisBox{vec({0, 0}), vec({1, 0})}});
        auto f = [](const Vector& z) -> Vector {
            const double t = z[0];
            return vec({t > 0.0 ? std::pow(t, 7) * std::abs(std::sin(1.0 / t)) : 0.0});
        };
        auto L = [](const Vector&) -> Matrix { return mat(1, 2, {0.0, 0.0}); };
        return {name, "f(t, 0) = t^7 |sin(1/t)|, L = 0", "F = [0,1] x {0}", {"strict"},
                "L is not a derivative of f at the zeros of sin(1/t), yet the derivative of the extension is continuous at the origin "
                "relative to the complement of F together with the origin",
                set, JetField::rule(set, 1, f, L), {vec({0.0, 0.0})},
                detail::all_pass({"partition", "derivative", "strict", "contracts"}), 1.0, 1.0, 0.25, std::nullopt};
    }
    if (name == "cross" || name == "cross_flat") {
        auto sample = detail::cross_sample(100);
        auto set = ClosedSet::points(sample);
        const Matrix Ldiag = mat(2, 2, {2.0, 0.0, 0.0, -1.0});
        std::vector<Jet> jets;
        for (const auto& p : sample) {
            jets.push_back(name == "cross" ? Jet{p, Ldiag * p, Ldiag} : Jet{p, vec({0.0, 0.0}), Ldiag});
        }
        ConeSetup cones{sample, vec({0.0, 0.0}), 0.05, 0.5, {vec({1, 0}), vec({-1, 0}), vec({0, 1}), vec({0, -1})}};
        CatalogCase c{name,
                      name == "cross" ? "linear f = L z, L = diag(2, -1), on a sampled cross"
                                      : "constant f = 0 with the claimed L = diag(2, -1) on a sampled cross",
                      "F = {(i/100, 0)} union {(0, i/100)}, |i| <= 100",
                      {"uniqueness"},
                      name == "cross" ? "the norm bound holds: L is the strict derivative"
                                      : "the norm bound fails: the claimed L cannot be a strict derivative",
                      set, JetField::tabulated(set, std::move(jets)), {vec({0.0, 0.0})},
                      detail::all_pass({"partition"}), 1.0, 3.0, 0.25, cones};
        c.expectations["cones"] = name == "cross" ? Expect::Pass : Expect::Fail;
        if (name == "cross") c.expectations["derivative"] = Expect::Pass;
        return c;
    }
    throw InputError("unknown catalog case '" + name + "'");
}

/// Named closed sets used by the partition certification runs.
inline std::vector<std::string> catalog_set_names()
{
    return {"point1", "point2", "point3", "twopoints", "segment", "box", "balls"};
}

inline ClosedSet make_catalog_set(const std::string& name)
{
    using detail::vec;
    if (name == "point1") return ClosedSet::points({vec({0.0})});
    if (name == "point2") return ClosedSet::points({vec({0.0, 0.0})});
    if (name == "point3") return ClosedSet::points({vec({0.0, 0.0, 0.0})});
    if (name == "twopoints") return ClosedSet::points({vec({0.0, 0.0}), vec({1.0, 0.0})});
    if (name == "segment") return ClosedSet::boxes({AxisBox{vec({0.0, 0.0}), vec({1.0, 0.0})}});
    if (name == "box") return ClosedSet::boxes({AxisBox{vec({0.0, 0.0}), vec({1.0, 1.0})}});
    if (name == "balls") return ClosedSet::balls({Ball{vec({-1.0, 0.0}), 0.5}, Ball{vec({0.75, 0.0}), 0.5}});
    throw InputError("unknown catalog set '" + name + "'");
}

} // namespace whitney
