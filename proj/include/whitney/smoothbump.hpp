#pragma once

#include "whitney/core.hpp"

#include <string>
#include <vector>

namespace whitney {

/// A monotone transition from 0 (t <= 0) to 1 (t >= 1) with its exact derivative.
///
/// `Exp` is the C-infinity step 1 / (1 + exp(1/t - 1/(1-t))); `Poly{k}` is the C^k
/// smoothstep of degree 2k+1. `bound` is a certified upper bound on |profile'|.
class TransitionProfile {
public:
    enum class Kind { Exp, Poly };

    struct Sample {
        double value = 0.0;
        double derivative = 0.0;
    };

    static TransitionProfile exp() { return TransitionProfile(Kind::Exp, 0, 2.0); }

    static TransitionProfile poly(int order)
    {
        if (order < 1 || order > 12) throw InputError("polynomial smoothstep order must be in [1, 12]");
        // sup of (2k+1)!/(k!)^2 t^k (1-t)^k is attained at t = 1/2
        return TransitionProfile(Kind::Poly, order, poly_leading(order) / std::pow(4.0, order));
    }

    /// Parses the CLI spelling: "exp", "poly2", "poly4", ...
    static TransitionProfile parse(const std::string& name)
    {
        if (name == "exp") return exp();
        if (name.rfind("poly", 0) == 0 && name.size() > 4) {
            const std::string digits = name.substr(4);
            if (digits.find_first_not_of("0123456789") == std::string::npos) return poly(std::stoi(digits));
        }
        throw InputError("unknown bump profile '" + name + "' (expected exp, poly2 or poly4)");
    }

    Kind kind() const { return kind_; }
    int order() const { return order_; }
    double bound() const { return bound_; }

    std::string name() const { return kind_ == Kind::Exp ? "exp" : "poly" + std::to_string(order_); }

    Sample operator()(double t) const
    {
        if (t <= 0.0) return {0.0, 0.0};
        if (t >= 1.0) return {1.0, 0.0};
        return kind_ == Kind::Exp ? eval_exp(t) : eval_poly(t);
    }

private:
    TransitionProfile(Kind k, int order, double bound) : kind_(k), order_(order), bound_(bound) {}

    static double poly_leading(int k)
    {
        // (2k+1)! / (k!)^2
        double c = 1.0;
        for (int i = 1; i <= k; ++i) c *= static_cast<double>(k + i) / i;
        return c * (2 * k + 1);
    }

    static constexpr double kUnderflow = 1e-8;

    static Sample eval_exp(double t)
    {
        if (t < kUnderflow) return {0.0, 0.0};
        if (t > 1.0 - kUnderflow) return {1.0, 0.0};
        const double s = 1.0 - t;
        const double u = 1.0 / t - 1.0 / s;
        double h = 0.0;
        double one_minus_h = 0.0;
        if (u > 0.0) {
            const double e = std::exp(-u);
            h = e / (1.0 + e);
            one_minus_h = 1.0 / (1.0 + e);
        } else {
            const double e = std::exp(u);
            h = 1.0 / (1.0 + e);
            one_minus_h = e / (1.0 + e);
        }
        const double dh = h * one_minus_h * (1.0 / (t * t) + 1.0 / (s * s));
        return {h, dh};
    }

    Sample eval_poly(double t) const
    {
        const int k = order_;
        const double s = 1.0 - t;
        // S_k(t) = t^{k+1} sum_{j=0}^{k} C(k+j, j) (1-t)^j
        double sum = 0.0;
        double binom = 1.0;
        double spow = 1.0;
        for (int j = 0; j <= k; ++j) {
            sum += binom * spow;
            binom = binom * (k + j + 1) / (j + 1);
            spow *= s;
        }
        const double value = std::pow(t, k + 1) * sum;
        const double derivative = poly_leading(k) * std::pow(t * s, k);
        return {value, derivative};
    }

    Kind kind_;
    int order_;
    double bound_;
};

/// A bump equal to 1 on the closed cube of half-width `core_halfwidth` about `center`
/// and vanishing outside the concentric cube of half-width `core_halfwidth + collar`.
struct CubeBump {
    Vector center;
    double core_halfwidth = 0.0;
    double collar = 0.0;
};

struct BumpSample {
    double value = 0.0;
    Vector gradient;
};

/// Tensor-product bump value with its exact gradient.
inline BumpSample bump_eval(const CubeBump& bump, const TransitionProfile& profile, const Vector& x)
{
    const Eigen::Index n = bump.center.size();
    require_dimension(x, static_cast<int>(n), "bump_eval");
    BumpSample out{0.0, Vector::Zero(n)};
    const double outer = bump.core_halfwidth + bump.collar;
    std::vector<TransitionProfile::Sample> axis(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        const double offset = x[i] - bump.center[i];
        if (std::abs(offset) >= outer) return out;
        axis[static_cast<std::size_t>(i)] = profile((outer - std::abs(offset)) / bump.collar);
    }
    // prefix/suffix products give the leave-one-out factors without dividing by zero
    std::vector<double> prefix(static_cast<std::size_t>(n) + 1, 1.0);
    std::vector<double> suffix(static_cast<std::size_t>(n) + 1, 1.0);
    for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) prefix[i + 1] = prefix[i] * axis[i].value;
    for (std::size_t i = static_cast<std::size_t>(n); i-- > 0;) suffix[i] = suffix[i + 1] * axis[i].value;
    out.value = prefix[static_cast<std::size_t>(n)];
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const double d = axis[ui].derivative;
        if (d == 0.0) continue;
        const double offset = x[i] - bump.center[i];
        const double sign = offset > 0.0 ? 1.0 : (offset < 0.0 ? -1.0 : 0.0);
        out.gradient[i] = -sign * d / bump.collar * prefix[ui] * suffix[ui + 1];
    }
    return out;
}

} // namespace whitney
