#include "whitney/analysis.hpp"
#include "whitney/catalog.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace whitney;

namespace {

Vector vec(std::initializer_list<double> v)
{
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

struct Built {
    CatalogCase c;
    Partition p;
    AField a;
    Extension e;
};

Built build(const std::string& name)
{
    CatalogCase c = make_case(name);
    Partition p = Partition::build(c.set);
    AField a = AField::nearest_jet(c.jets);
    Extension e(c.jets, p, a);
    return {std::move(c), p, a, e};
}

Built constant_case()
{
    const auto F = ClosedSet::boxes({AxisBox{vec({0.0, 0.0}), vec({1.0, 0.0})}});
    CatalogCase c{"constant", "", "", {}, "", F,
                  JetField::rule(F, 1, [](const Vector&) { return vec({2.5}); }, [](const Vector&) { return Matrix(Matrix::Zero(1, 2)); }),
                  {vec({0.5, 0.0})}, {}, 1.0, 0.0, 0.25, std::nullopt};
    Partition p = Partition::build(F);
    AField a = AField::nearest_jet(c.jets);
    Extension e(c.jets, p, a);
    return {std::move(c), p, a, e};
}

std::vector<double> dyadic_scales(int first, int last)
{
    std::vector<double> s;
    for (int k = first; k <= last; ++k) s.push_back(std::ldexp(1.0, -k));
    return s;
}

PartitionReport fake_report(std::size_t c1, double c2)
{
    PartitionReport r;
    r.samples = 1;
    r.c1_measured = c1;
    r.c2_measured = c2;
    return r;
}

} // namespace

TEST(ResidualSeries, DecayAndSlope)
{
    ResidualSeries s{SeriesKind::Frechet, 1.0, {1.0, 0.5, 0.25}, {2.0, 1.0, 0.5}};
    EXPECT_TRUE(s.decays());
    EXPECT_NEAR(s.loglog_slope(), 1.0, 1e-12);
    ResidualSeries flat{SeriesKind::Strict, 1.0, {1.0, 0.5}, {1.0, 0.9}};
    EXPECT_FALSE(flat.decays());
    EXPECT_TRUE(flat.decays(1.0));
}

TEST(Frechet, AffineIsExact)
{
    auto b = build("affine");
    const auto s = frechet_residual(b.e, b.c.jets, vec({0.0, 0.0}), dyadic_scales(1, 10), 64);
    EXPECT_LE(s.max(), 1e-9);
}

TEST(Frechet, IsolatedPointStillConverges)
{
    auto b = build("helix");
    const auto s = frechet_residual(b.e, b.c.jets, vec({1.0}), dyadic_scales(6, 14), 64);
    EXPECT_TRUE(s.decays());
    EXPECT_LE(s.last(), 1e-2);
}

TEST(Frechet, SmoothBoundaryDataConvergeLinearly)
{
    auto b = build("quadratic");
    const auto s = frechet_residual(b.e, b.c.jets, vec({0.0, 0.5}), dyadic_scales(1, 12), 128);
    EXPECT_GE(s.loglog_slope(), 0.8);
    EXPECT_LE(s.last(), 1e-3);
}

TEST(Frechet, RejectsBadArguments)
{
    auto b = build("affine");
    EXPECT_THROW(frechet_residual(b.e, b.c.jets, vec({0.2, 0.2}), {0.5}, 8), QueryError);
    EXPECT_THROW(frechet_residual(b.e, b.c.jets, vec({0.0, 0.0}), {0.5, 0.5}, 8), InputError);
    EXPECT_THROW(frechet_residual(b.e, b.c.jets, vec({0.0, 0.0}), {}, 8), InputError);
}

TEST(Strict, AffineVanishes)
{
    auto b = build("affine");
    const auto s = strict_residual(b.e, b.c.jets, vec({0.0, 0.0}), dyadic_scales(1, 8), 512);
    EXPECT_LE(s.max(), 1e-6);
}

TEST(Strict, ContinuousOperatorDecreases)
{
    auto b = build("smooth_balls");
    const auto s = strict_residual(b.e, b.c.jets, vec({1.0, 0.8}), dyadic_scales(1, 10), 512);
    EXPECT_LE(s.last(), s.first() / 2);
}

TEST(Strict, AlternatingValuesStayAboveOne)
{
    auto b = build("jarnik");
    const auto s = strict_residual(b.e, b.c.jets, vec({0.0}), dyadic_scales(1, 6), 1024);
    EXPECT_GE(s.last(), 0.9);
}

TEST(Hoelder, SquareRootIsHalfHoelder)
{
    auto b = build("sqrt_hoelder");
    const auto s = hoelder_residual(b.e, vec({0.0}), 0.5, dyadic_scales(1, 12), 128);
    EXPECT_LE(s.max(), 3.0);
}

TEST(Hoelder, AffineAndConstant)
{
    auto b = build("affine");
    const Matrix M = b.c.jets.op(vec({0.0, 0.0}));
    EXPECT_LE(hoelder_residual(b.e, vec({0.0, 0.0}), 1.0, dyadic_scales(1, 8), 128).max(), operator_norm(M) + 1e-6);
    auto k = constant_case();
    for (double alpha : {0.3, 1.0}) EXPECT_LE(hoelder_residual(k.e, vec({0.5, 0.0}), alpha, dyadic_scales(1, 8), 64).max(), 1e-9);
    EXPECT_THROW(hoelder_residual(b.e, vec({0.0, 0.0}), 1.5, {0.5}, 8), InputError);
}

TEST(ClaimParams, ConstantsFollowTheStatedFormulas)
{
    const auto c = make_case("affine");
    const auto rep = fake_report(7, 1.5);
    const double eps = 1e-3;
    const auto p = claim_params(c.jets, rep, vec({0.0, 0.0}), 3.0, 6.0, eps, eps);
    EXPECT_NEAR(p.K3, (1.0 + 220.0 * 7 * 1.5) * eps, 1e-15);
    EXPECT_DOUBLE_EQ(p.r3, 1.0);
    const auto q = claim_params(c.jets, rep, vec({0.0, 0.0}), 3.0, 6.0, 0.0, 0.0);
    EXPECT_EQ(q.K3, 0.0);
    const auto w = claim_params(c.jets, rep, vec({0.0, 0.0}), 1.0, 5.0, 0.2, 0.3);
    EXPECT_NEAR(w.K3, (1 + 100.0 * 7 * 1.5) * 0.2 + 120.0 * 7 * 1.5 * 0.3, 1e-12);
    EXPECT_DOUBLE_EQ(w.r3, 1.0 / 3.0);
    EXPECT_NEAR(w.M, operator_norm(c.jets.op(vec({0.0, 0.0}))) + 0.2, 1e-15);
    EXPECT_THROW(claim_params(c.jets, PartitionReport{}, vec({0.0, 0.0}), 3.0, 6.0, eps, eps), InputError);
}

TEST(Exy, ZeroForEqualPointsAndAffineData)
{
    auto b = build("affine");
    const Vector a = vec({0.0, 0.0});
    EXPECT_EQ(exy(b.e, b.c.jets, a, vec({0.3, 0.3}), vec({0.3, 0.3})), 0.0);
    EXPECT_LE(exy(b.e, b.c.jets, a, vec({0.3, 0.3}), vec({-0.4, 0.9})), 1e-9);
}

TEST(Exy, AgreesWithAnIndependentFieldChoice)
{
    // the increment only depends on f-bar; evaluate it through a second extension built from scratch
    auto b = build("quadratic");
    const Partition p2 = Partition::build(b.c.set);
    const Extension e2(b.c.jets, p2, AField::nearest_jet(b.c.jets));
    const Vector a = vec({1.0, 1.0}), x = vec({1.1, 1.05}), y = vec({1.2, 0.8});
    const double direct = (e2.value(y) - e2.value(x) - b.c.jets.op(a) * (y - x)).norm();
    EXPECT_DOUBLE_EQ(exy(b.e, b.c.jets, a, x, y), direct);
}

TEST(ClaimBounds, AffineHoldsTrivially)
{
    auto b = build("affine");
    const auto rep = verify_partition(b.p, {vec({0.2, 0.2}), vec({2.0, 2.0})});
    const Vector a = vec({0.0, 0.0});
    const double k1 = measure_k1(b.a, b.c.jets, a, 1.5, 64);
    const double k2 = measure_k2(b.c.jets, a, 3.0, 50);
    EXPECT_LE(k1, 1e-12);
    EXPECT_LE(k2, 1e-12);
    const auto params = claim_params(b.c.jets, rep, a, 1.5, 3.0, k1, k2);
    const auto cr = check_claim_bounds(b.e, params, 256, 1024);
    EXPECT_TRUE(cr.passed());
    EXPECT_LE(cr.max_derivative_dev, 1e-9);
    EXPECT_LE(cr.max_exy_ratio, 1e-6);
}

TEST(ClaimBounds, ConstantJetsHaveConstantDerivative)
{
    auto k = constant_case();
    const auto rep = verify_partition(k.p, {vec({0.2, 0.2})});
    const auto params = claim_params(k.c.jets, rep, vec({0.5, 0.0}), 1.5, 3.0, 0.0, 0.0);
    const auto cr = check_claim_bounds(k.e, params, 256, 256);
    EXPECT_FALSE(cr.vacuous);
    EXPECT_LE(cr.max_derivative_dev, 1e-9);
}

TEST(Lipschitz, AffineApproachesTheOperatorNorm)
{
    auto b = build("affine");
    const double M = operator_norm(b.c.jets.op(vec({0.0, 0.0})));
    const double sup = lipschitz_on_ball(b.e, vec({0.0, 0.0}), 0.5, 4096);
    EXPECT_LE(sup, M + 1e-6);
    EXPECT_GE(sup, 0.9 * M);
    auto k = constant_case();
    EXPECT_LE(lipschitz_on_ball(k.e, vec({0.5, 0.0}), 0.5, 1024), 1e-9);
}

TEST(Lipschitz, TwoSegmentCaseObeysTheFinalConstant)
{
    auto b = build("lipschitz2seg");
    const Vector a = vec({0.0, 0.0});
    const double r = 0.25;
    Rng rng(1);
    const auto rep = verify_partition(b.p, sample_off_set(b.c.set, 300, rng));
    const double k1 = measure_k1(b.a, b.c.jets, a, 6 * r, 512);
    const double k2 = measure_k2(b.c.jets, a, 12 * r, 300);
    const auto params = claim_params(b.c.jets, rep, a, 6 * r, 12 * r, k1, k2);
    EXPECT_DOUBLE_EQ(params.r3 / 2.0, r);
    const auto cr = check_claim_bounds(b.e, params, 512, 2048);
    EXPECT_TRUE(cr.passed());
    EXPECT_LE(lipschitz_on_ball(b.e, a, r, 2048), 33.0 * params.K3 + params.La_norm);
}

TEST(Continuity, AffineAndOscillation)
{
    auto b = build("affine");
    EXPECT_LE(derivative_continuity_at(b.e, b.c.jets, vec({0.0, 0.0}), dyadic_scales(1, 8), 64).max(), 1e-9);
    auto o = build("oscillation");
    const auto s = derivative_continuity_at(o.e, o.c.jets, vec({0.0, 0.0}), dyadic_scales(1, 10), 128);
    EXPECT_LE(s.last(), s.first() / 2);
}

TEST(Cones, SegmentHasOnlyTheAxisDirection)
{
    std::vector<Vector> seg;
    for (int i = -50; i <= 50; ++i) seg.push_back(vec({i / 50.0, 0.0}));
    const auto rep = cone_directions(seg, vec({0.0, 0.0}), 0.05, 0.5);
    ASSERT_EQ(rep.paratingent_dirs.size(), 2u);
    ASSERT_EQ(rep.tangent_dirs.size(), 2u);
    for (const auto& d : rep.paratingent_dirs) EXPECT_NEAR(std::abs(d[0]), 1.0, 1e-12);
    EXPECT_EQ(rep.best_det, 0.0);
    EXPECT_EQ(rep.f_m_index, 0);
    auto r2 = rep;
    std::vector<Jet> jets;
    for (const auto& p : seg) jets.push_back(Jet{p, vec({0.0}), Matrix::Zero(1, 2)});
    const JetField j = JetField::tabulated(ClosedSet::points(seg), jets);
    EXPECT_THROW(uniqueness_bound_check(j, seg, vec({0.0, 0.0}), r2, 0.5), QueryError);
}

TEST(Cones, IsolatedPointHasNoDirections)
{
    const auto rep = cone_directions({vec({0.0, 0.0}), vec({3.0, 0.0})}, vec({0.0, 0.0}), 0.05, 0.5);
    EXPECT_TRUE(rep.tangent_dirs.empty());
    EXPECT_TRUE(rep.paratingent_dirs.empty());
}

TEST(Cones, CrossSpansThePlane)
{
    const auto c = make_case("cross");
    auto rep = cone_directions(c.cones->sample, c.cones->x, 0.05, 0.5);
    EXPECT_NEAR(rep.best_det, 1.0, 1e-12);
    EXPECT_EQ(rep.f_m_index, 1);
    EXPECT_EQ(rep.tangent_dirs.size(), 4u);
    const auto u = uniqueness_bound_check(c.jets, c.cones->sample, c.cones->x, rep, 0.5, 0.1);
    EXPECT_TRUE(u.passed);
    EXPECT_NEAR(u.lhs, 2.0, 1e-12);
    EXPECT_GE(u.rhs, 2.0);
}

TEST(Cones, ZeroOperatorPassesAndFlatDataFail)
{
    const auto flat = make_case("cross_flat");
    auto rep = cone_directions(flat.cones->sample, flat.cones->x, 0.05, 0.5);
    EXPECT_FALSE(uniqueness_bound_check(flat.jets, flat.cones->sample, flat.cones->x, rep, 0.5, 0.1).passed);
    std::vector<Jet> zero;
    for (const auto& p : flat.cones->sample) zero.push_back(Jet{p, vec({0.0, 0.0}), Matrix::Zero(2, 2)});
    const JetField z = JetField::tabulated(flat.set, zero);
    EXPECT_TRUE(uniqueness_bound_check(z, flat.cones->sample, flat.cones->x, rep, 0.5, 0.1).passed);
}

TEST(Cones, InputValidation)
{
    EXPECT_THROW(cone_directions({}, vec({0.0, 0.0}), 0.05, 0.5), InputError);
    EXPECT_THROW(cone_directions({vec({0.0, 0.0})}, vec({0.0, 0.0}), 0.5, 0.05), InputError);
    EXPECT_THROW(cone_directions({vec({1.0, 0.0})}, vec({0.0, 0.0}), 0.05, 0.5), QueryError);
    EXPECT_EQ(f_m_index(1.0), 1);
    EXPECT_EQ(f_m_index(0.3), 4);
    EXPECT_EQ(f_m_index(0.0), 0);
}

TEST(Estimators, IndependentOfThreadCount)
{
    auto b = build("quadratic");
    const auto s1 = strict_residual(b.e, b.c.jets, vec({1.0, 1.0}), dyadic_scales(1, 6), 256, {9, 1});
    const auto s4 = strict_residual(b.e, b.c.jets, vec({1.0, 1.0}), dyadic_scales(1, 6), 256, {9, 4});
    EXPECT_EQ(s1.residuals, s4.residuals);
}
