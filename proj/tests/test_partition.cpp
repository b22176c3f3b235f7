#include "whitney/catalog.hpp"
#include "whitney/partition.hpp"
#include "whitney/sampling.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

using namespace whitney;

namespace {

Vector vec(std::initializer_list<double> v)
{
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

std::vector<Vector> samples_for(const ClosedSet& set, std::size_t n, std::uint64_t seed)
{
    Rng rng(seed);
    return sample_off_set(set, n, rng);
}

std::map<MemberId, double> weight_map(const Partition& p, const Vector& x)
{
    std::map<MemberId, double> out;
    for (const auto& w : p.weights_at(x)) out[w.member.id] = w.weight;
    return out;
}

} // namespace

TEST(Partition, SumsToOneWithCancellingGradients)
{
    for (const auto& name : catalog_set_names()) {
        const ClosedSet F = make_catalog_set(name);
        const Partition p = Partition::build(F);
        for (const auto& x : samples_for(F, 60, 11)) {
            double sum = 0.0;
            Vector grad = Vector::Zero(x.size());
            for (const auto& w : p.weights_at(x)) {
                EXPECT_GE(w.weight, 0.0);
                sum += w.weight;
                grad += w.gradient;
            }
            EXPECT_NEAR(sum, 1.0, 1e-10) << name;
            EXPECT_LE(p.radius(x) * grad.norm(), 1e-8) << name;
        }
    }
}

TEST(Partition, EveryPointOffSetIsCovered)
{
    const Partition p = Partition::build(ClosedSet::points({vec({0.0})}));
    for (double t : {-100.0, -1.0, -1e-3, 1e-6, 0.37, 5.0, 1e4}) {
        EXPECT_FALSE(p.active_set(vec({t})).members.empty()) << t;
        EXPECT_FALSE(p.weights_at(vec({t})).empty()) << t;
    }
}

TEST(Partition, ActiveAnchorsStayWithinTwiceTheDistance)
{
    const Partition p = Partition::build(ClosedSet::points({vec({0.0, 0.0})}));
    const Vector x = vec({1.0, 0.0});
    const ActiveSet s = p.active_set(x);
    ASSERT_FALSE(s.members.empty());
    for (const auto& m : s.members) {
        EXPECT_LE((m.anchor - x).norm(), 2.0 + 1e-12);
        const double ratio = p.radius(x) / m.radius;
        EXPECT_GE(ratio, 1.0 / 3.0);
        EXPECT_LE(ratio, 3.0);
    }
}

TEST(Partition, ActiveSetIsBoundedAndGradientsScaleWithRadius)
{
    const ClosedSet F = ClosedSet::points({vec({0.0})});
    const Partition p = Partition::build(F);
    const auto xs = samples_for(F, 500, 5);
    const PartitionReport rep = verify_partition(p, xs);
    ASSERT_TRUE(rep.passed());
    const Vector x = vec({1.0});
    EXPECT_DOUBLE_EQ(p.radius(x), 0.05);
    EXPECT_LE(p.active_set(x).size(), rep.c1_measured);
    for (const auto& w : p.weights_at(x)) EXPECT_LE(w.gradient.norm(), rep.c2_measured / p.radius(x) * (1 + 1e-12));
}

TEST(Partition, NonzeroMembersAreActive)
{
    const ClosedSet F = make_catalog_set("box");
    const Partition p = Partition::build(F);
    for (const auto& x : samples_for(F, 40, 2)) {
        const ActiveSet s = p.active_set(x);
        std::set<MemberId> ids;
        for (const auto& m : s.members) ids.insert(m.id);
        for (const auto& w : p.weights_at(x)) EXPECT_TRUE(ids.count(w.member.id));
    }
}

TEST(Partition, GradientsMatchRichardsonDifferences)
{
    const ClosedSet F = make_catalog_set("twopoints");
    const Partition p = Partition::build(F);
    for (const auto& x : samples_for(F, 12, 9)) {
        const double h = 1e-3 * p.radius(x);
        for (const auto& w : p.weights_at(x)) {
            for (int i = 0; i < 2; ++i) {
                Vector e = Vector::Zero(2);
                e[i] = 1.0;
                auto at = [&](double t) {
                    const auto m = weight_map(p, x + t * e);
                    auto it = m.find(w.member.id);
                    return it == m.end() ? 0.0 : it->second;
                };
                const double d1 = (at(h) - at(-h)) / (2 * h);
                const double d2 = (at(h / 2) - at(-h / 2)) / h;
                const double rich = (4 * d2 - d1) / 3;
                EXPECT_NEAR(w.gradient[i] * p.radius(x), rich * p.radius(x), 1e-6);
            }
        }
    }
}

TEST(Partition, ScaledFamilyMatchesUnitFamilyOfScaledSet)
{
    const ClosedSet F = make_catalog_set("segment");
    const double s = 6.0;
    const Partition scaled = Partition::build_capped(F, s);
    const Partition unit = Partition::build_capped(F.scaled(1.0 / s), 1.0);
    for (const auto& x : samples_for(F, 25, 4)) {
        const auto a = scaled.weights_at(x);
        const auto b = unit.weights_at(x / s);
        ASSERT_EQ(a.size(), b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            EXPECT_NEAR(a[i].weight, b[i].weight, 1e-14);
            EXPECT_NEAR((a[i].gradient - b[i].gradient / s).norm(), 0.0, 1e-12);
        }
    }
}

TEST(Partition, CappedAgreesWithUncappedDeepInsideTheCap)
{
    const ClosedSet F = make_catalog_set("box");
    const double s = 4.0;
    const Partition capped = Partition::build_capped(F, s);
    const Partition plain = Partition::build(F);
    int checked = 0;
    for (const auto& x : samples_for(F, 200, 8)) {
        if (F.distance(x) >= s / 4.0) continue;
        ++checked;
        const auto a = capped.weights_at(x);
        const auto b = plain.weights_at(x);
        ASSERT_EQ(a.size(), b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            EXPECT_EQ(a[i].member.anchor, b[i].member.anchor);
            EXPECT_NEAR(a[i].weight, b[i].weight, 1e-14);
        }
    }
    EXPECT_GT(checked, 20);
}

TEST(Partition, CappedRadiusBoundsSupports)
{
    const ClosedSet F = ClosedSet::points({vec({0.0})});
    const Partition p = Partition::build_capped(F, 1.0);
    for (double t : {0.5, 3.0, 50.0, 1e3}) {
        EXPECT_DOUBLE_EQ(p.radius(vec({t})), std::min(1.0, t) / 20.0);
        for (const auto& w : p.weights_at(vec({t}))) EXPECT_LE(w.member.bump.core_halfwidth + w.member.bump.collar, 0.5);
    }
}

TEST(Partition, QueriesOnTheSetAreRejected)
{
    const Partition p = Partition::build(make_catalog_set("box"));
    EXPECT_THROW(p.weights_at(vec({0.5, 0.5})), QueryError);
    EXPECT_THROW(verify_partition(p, {vec({0.5, 0.5})}), QueryError);
}

TEST(Partition, ConfigValidation)
{
    PartitionConfig c;
    c.dilation = 1.0;
    EXPECT_THROW(c.validate(), InputError);
    c = PartitionConfig{};
    c.window_lo = 1.2;
    EXPECT_THROW(c.validate(), InputError);
    c = PartitionConfig{};
    c.window_hi = 3.0;
    EXPECT_THROW(c.validate(), InputError);
    EXPECT_THROW(Partition::build_capped(make_catalog_set("box"), 0.5), InputError);
}

TEST(Partition, ProfilesAllCertify)
{
    const ClosedSet F = make_catalog_set("balls");
    for (const char* prof : {"exp", "poly2", "poly4"}) {
        PartitionConfig c;
        c.profile = TransitionProfile::parse(prof);
        const auto rep = verify_partition(Partition::build(F, c), samples_for(F, 200, 1));
        EXPECT_TRUE(rep.passed()) << prof;
        EXPECT_LE(rep.max_sum_error, 1e-10);
    }
}

TEST(Partition, ReportIsIndependentOfThreadCount)
{
    const ClosedSet F = make_catalog_set("segment");
    const auto xs = samples_for(F, 300, 77);
    const auto a = verify_partition(Partition::build(F), xs, 1);
    const auto b = verify_partition(Partition::build(F), xs, 4);
    EXPECT_EQ(a.c1_measured, b.c1_measured);
    EXPECT_EQ(a.c2_measured, b.c2_measured);
    EXPECT_EQ(a.max_sum_error, b.max_sum_error);
    EXPECT_EQ(a.p2_ratio_min, b.p2_ratio_min);
}

TEST(Combiner, GatesSumToOneOnTheValidityShell)
{
    const ClosedSet F = make_catalog_set("segment");
    auto [p, state] = combine_capped(F, 3);
    const double lim = p.combined()->validity_radius();
    EXPECT_DOUBLE_EQ(lim, 6.0);
    EXPECT_EQ(state.scales(), (std::vector<double>{6.0, 36.0, 216.0}));
    int checked = 0;
    for (const auto& x : samples_for(F, 300, 3)) {
        if (F.distance(x) >= lim) continue;
        ++checked;
        double sum = 0.0;
        for (const auto& g : state.gates_at(x)) sum += g.v;
        EXPECT_NEAR(sum, 1.0, 1e-10);
        double wsum = 0.0;
        for (const auto& w : p.weights_at(x)) wsum += w.weight;
        EXPECT_NEAR(wsum, 1.0, 1e-10);
    }
    EXPECT_GT(checked, 100);
    Vector far(2);
    far << 0.5, 10.0;
    EXPECT_THROW(p.weights_at(far), QueryError);
}

TEST(Combiner, AtMostFourScalesAreActive)
{
    const ClosedSet F = make_catalog_set("twopoints");
    const Partition p = Partition::combine_capped(F, 3);
    for (const auto& x : samples_for(F, 150, 6)) {
        if (F.distance(x) >= p.combined()->validity_radius()) continue;
        std::set<int> scales;
        for (const auto& m : p.active_set(x).members) scales.insert(m.id.scale);
        EXPECT_LE(scales.size(), 4u);
    }
}

TEST(Combiner, ConstantsStayWithinTheStatedFactors)
{
    const ClosedSet F = make_catalog_set("twopoints");
    const auto base_xs = samples_for(F, 800, 12);
    const auto base = verify_partition(Partition::build_capped(F, 1.0), base_xs);
    const Partition comb = Partition::combine_capped(F, 2);
    std::vector<Vector> xs;
    for (const auto& x : base_xs)
        if (F.distance(x) < comb.combined()->validity_radius()) xs.push_back(x);
    const auto rep = verify_partition(comb, xs);
    EXPECT_TRUE(rep.passed());
    EXPECT_LE(static_cast<double>(rep.c1_measured), 4.0 * static_cast<double>(base.c1_measured));
    EXPECT_LE(rep.c2_measured, 3.0 * static_cast<double>(base.c1_measured) * base.c2_measured);
}
