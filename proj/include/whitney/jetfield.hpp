#pragma once

#include "whitney/core.hpp"
#include "whitney/geomset.hpp"
#include "whitney/parallel.hpp"
#include "whitney/partition.hpp"
#include "whitney/sampling.hpp"

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace whitney {

/// A point a of F with the value f(a) and the candidate derivative L(a).
struct Jet {
    Vector a;
    Vector value;
    Matrix op;
};

/// Values f and operators L on F: tabulated per point of a finite set, or given as rules.
class JetField {
public:
    using ValueRule = std::function<Vector(const Vector&)>;
    using OperatorRule = std::function<Matrix(const Vector&)>;

    /// One jet per point of a finite set; `tolerance` is the admissible offset of a jet's base point.
    static JetField tabulated(const ClosedSet& set, std::vector<Jet> jets, double tolerance = 1e-12)
    {
        const auto* fp = std::get_if<ClosedSet::FinitePoints>(&set.variant());
        if (!fp) throw InputError("tabulated jets require a finite point set");
        if (jets.empty()) throw InputError("jet list is empty");
        const int n = set.dimension();
        const auto m = jets.front().value.size();
        if (m < 1) throw InputError("jet values must have dimension >= 1");
        std::vector<std::optional<Jet>> slots(fp->points.size());
        for (std::size_t k = 0; k < jets.size(); ++k) {
            Jet& j = jets[k];
            const std::string where = "jet " + std::to_string(k);
            if (j.a.size() != n) throw InputError(where + ": base point has wrong dimension");
            if (j.value.size() != m) throw InputError(where + ": value has wrong dimension");
            if (j.op.rows() != m || j.op.cols() != n) throw InputError(where + ": operator has wrong shape");
            if (!j.a.allFinite() || !j.value.allFinite() || !j.op.allFinite()) throw InputError(where + ": non-finite entry");
            const NearestResult nr = set.nearest(j.a);
            if (nr.distance > tolerance) throw InputError(where + ": base point does not lie in F");
            auto& slot = slots[nr.primitive];
            if (slot) throw InputError(where + ": duplicate jet for a point of F");
            j.a = fp->points[nr.primitive];
            slot = std::move(j);
        }
        auto table = std::make_shared<std::vector<Jet>>();
        for (std::size_t i = 0; i < slots.size(); ++i) {
            if (!slots[i]) throw InputError("point " + std::to_string(i) + " of F has no jet");
            table->push_back(std::move(*slots[i]));
        }
        JetField out(set, static_cast<int>(m));
        out.table_ = std::move(table);
        return out;
    }

    /// Analytic rules evaluated on F; queries farther than `tolerance` from F are rejected.
    static JetField rule(const ClosedSet& set, int range_dim, ValueRule f, OperatorRule L, double tolerance = 1e-9)
    {
        if (range_dim < 1) throw InputError("range dimension must be >= 1");
        if (!f || !L) throw InputError("jet rules must be callable");
        JetField out(set, range_dim);
        out.f_ = std::move(f);
        out.L_ = std::move(L);
        out.tolerance_ = tolerance;
        return out;
    }

    const ClosedSet& set() const { return set_; }
    int domain_dim() const { return set_.dimension(); }
    int range_dim() const { return range_dim_; }
    bool is_tabulated() const { return static_cast<bool>(table_); }
    const std::vector<Jet>& table() const
    {
        if (!table_) throw QueryError("jet field is not tabulated");
        return *table_;
    }

    Vector value(const Vector& a) const
    {
        if (table_) return (*table_)[lookup(a)].value;
        check_on_set(a);
        return checked_value(f_(a));
    }

    Matrix op(const Vector& a) const
    {
        if (table_) return (*table_)[lookup(a)].op;
        check_on_set(a);
        return checked_op(L_(a));
    }

    Jet jet(const Vector& a) const { return Jet{a, value(a), op(a)}; }

    /// The jet at a nearest point of F already computed by the caller.
    Jet jet_at_foot(const NearestResult& foot) const
    {
        if (table_) return (*table_)[foot.primitive];
        return Jet{foot.foot, checked_value(f_(foot.foot)), checked_op(L_(foot.foot))};
    }

private:
    JetField(const ClosedSet& set, int m) : set_(set), range_dim_(m) {}

    std::size_t lookup(const Vector& a) const
    {
        require_dimension(a, domain_dim(), "jet lookup");
        const NearestResult nr = set_.nearest(a);
        if (nr.distance > 1e-12) throw QueryError("no jet at a point outside F");
        return nr.primitive;
    }

    void check_on_set(const Vector& a) const
    {
        require_dimension(a, domain_dim(), "jet lookup");
        if (set_.distance(a) > tolerance_) throw QueryError("jet requested at a point outside F");
    }

    Vector checked_value(Vector v) const
    {
        if (v.size() != range_dim_) throw InputError("jet rule returned a value of wrong dimension");
        return v;
    }

    Matrix checked_op(Matrix m) const
    {
        if (m.rows() != range_dim_ || m.cols() != domain_dim()) throw InputError("jet rule returned an operator of wrong shape");
        return m;
    }

    ClosedSet set_;
    int range_dim_;
    std::shared_ptr<const std::vector<Jet>> table_;
    ValueRule f_;
    OperatorRule L_;
    double tolerance_ = 1e-12;
};

/// The operator field A on R^n \ F used by the extension.
///
/// NearestJet: A(x) = L(x^) for the deterministic nearest point x^. Averaged: A(x) =
/// sum phi_j(x) L(x^_j) over the partition. External: caller-supplied, either a callable or
/// an exact-lookup table (a miss is an error).
class AField {
public:
    enum class Kind { NearestJet, Averaged, External };
    using Rule = std::function<Matrix(const Vector&)>;

    static AField nearest_jet(const JetField& jets)
    {
        AField a(Kind::NearestJet, jets);
        return a;
    }

    static AField averaged(const JetField& jets, const Partition& partition)
    {
        if (partition.dimension() != jets.domain_dim()) throw InputError("partition and jets differ in dimension");
        AField a(Kind::Averaged, jets);
        a.partition_ = partition;
        return a;
    }

    static AField external(const JetField& jets, Rule rule)
    {
        if (!rule) throw InputError("external A-field rule must be callable");
        AField a(Kind::External, jets);
        a.rule_ = std::move(rule);
        return a;
    }

    /// Exact-lookup table keyed by the bit pattern of the query point.
    static AField external_table(const JetField& jets, const std::vector<std::pair<Vector, Matrix>>& entries)
    {
        auto table = std::make_shared<std::map<std::vector<double>, Matrix>>();
        for (const auto& [x, m] : entries) {
            require_dimension(x, jets.domain_dim(), "A-field table");
            if (m.rows() != jets.range_dim() || m.cols() != jets.domain_dim()) throw InputError("A-field table entry has wrong shape");
            (*table)[std::vector<double>(x.data(), x.data() + x.size())] = m;
        }
        AField a(Kind::External, jets);
        a.rule_ = [table](const Vector& x) -> Matrix {
            auto it = table->find(std::vector<double>(x.data(), x.data() + x.size()));
            if (it == table->end()) throw QueryError("external A-field has no entry at the requested point");
            return it->second;
        };
        return a;
    }

    Kind kind() const { return kind_; }
    std::string kind_name() const
    {
        switch (kind_) {
        case Kind::NearestJet: return "nearest";
        case Kind::Averaged: return "averaged";
        default: return "external";
        }
    }
    const JetField& jets() const { return jets_; }

    Matrix operator()(const Vector& x) const
    {
        require_dimension(x, jets_.domain_dim(), "A-field");
        const NearestResult nr = jets_.set().nearest(x);
        if (nr.distance == 0.0) throw QueryError("A-field is defined off F only");
        switch (kind_) {
        case Kind::NearestJet: return jets_.jet_at_foot(nr).op;
        case Kind::Averaged: {
            Matrix out = Matrix::Zero(jets_.range_dim(), jets_.domain_dim());
            for (const auto& w : partition_->weights_at(x)) {
                out += w.weight * jets_.jet_at_foot(jets_.set().nearest(w.member.anchor)).op;
            }
            return out;
        }
        default: {
            Matrix m = rule_(x);
            if (m.rows() != jets_.range_dim() || m.cols() != jets_.domain_dim()) throw InputError("external A-field returned wrong shape");
            return m;
        }
        }
    }

private:
    AField(Kind k, const JetField& jets) : kind_(k), jets_(jets) {}

    Kind kind_;
    JetField jets_;
    std::optional<Partition> partition_;
    Rule rule_;
};

/// Shell-sampled sup estimates of the (NT), (C) and (B) contract quantities at a point a of F.
struct ContractReport {
    Vector a;
    std::vector<double> shells;
    std::vector<double> nt_residuals; ///< sup ||A(x) - L(a)|| dist(x, F) / |x - a| per shell
    std::vector<double> c_residuals;  ///< sup ||A(x) - L(a)|| per shell
    double b_bound = 0.0;             ///< sup ||A|| on B(a, r) \ F, r = shells[0]
    double l_bound_12r = 0.0;         ///< sup ||L|| on B(a, 12 r) and F
    double l_bound_72r = 0.0;         ///< sup ||L|| on B(a, 72 r) and F
};

inline ContractReport check_contracts(const AField& field, const JetField& jets, const Vector& a, const std::vector<double>& shells,
                                      std::size_t samples_per_shell, std::uint64_t seed = 0, unsigned threads = 1)
{
    require_dimension(a, jets.domain_dim(), "check_contracts");
    if (jets.set().distance(a) > 1e-12) throw QueryError("check_contracts: a does not lie in F");
    if (shells.empty()) throw InputError("check_contracts: no shells given");
    for (std::size_t i = 0; i < shells.size(); ++i) {
        if (!(shells[i] > 0.0)) throw InputError("check_contracts: shell radii must be positive");
        if (i > 0 && !(shells[i] < shells[i - 1])) throw InputError("check_contracts: shell radii must be strictly decreasing");
    }
    const Matrix La = jets.op(a);
    ContractReport rep;
    rep.a = a;
    rep.shells = shells;
    for (double rho : shells) {
        Rng rng(derive_seed(seed, "contracts", a, rho));
        auto xs = sample_annulus(a, rho / 2.0, rho, samples_per_shell, rng);
        std::vector<double> nt(xs.size(), 0.0), c(xs.size(), 0.0);
        parallel_for(xs.size(), threads, [&](std::size_t i) {
            const double d = jets.set().distance(xs[i]);
            if (d == 0.0) return;
            const double dev = operator_norm(field(xs[i]) - La);
            c[i] = dev;
            nt[i] = dev * d / (xs[i] - a).norm();
        });
        rep.nt_residuals.push_back(*std::max_element(nt.begin(), nt.end()));
        rep.c_residuals.push_back(*std::max_element(c.begin(), c.end()));
    }
    const double r = shells.front();
    {
        Rng rng(derive_seed(seed, "contracts-b", a, r));
        auto xs = sample_ball(a, r, samples_per_shell, rng);
        std::vector<double> b(xs.size(), 0.0);
        parallel_for(xs.size(), threads, [&](std::size_t i) {
            if (jets.set().distance(xs[i]) == 0.0) return;
            b[i] = operator_norm(field(xs[i]));
        });
        rep.b_bound = *std::max_element(b.begin(), b.end());
    }
    for (double factor : {12.0, 72.0}) {
        Rng rng(derive_seed(seed, "contracts-l", a, factor * r));
        double sup = 0.0;
        for (const auto& p : sample_set_in_ball(jets.set(), a, factor * r, samples_per_shell, rng)) {
            sup = std::max(sup, operator_norm(jets.op(p)));
        }
        (factor == 12.0 ? rep.l_bound_12r : rep.l_bound_72r) = sup;
    }
    return rep;
}

} // namespace whitney
