#pragma once

#include "whitney/core.hpp"
#include "whitney/jetfield.hpp"
#include "whitney/parallel.hpp"
#include "whitney/partition.hpp"

#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <unordered_map>
#include <vector>

namespace whitney {

/// The rank-one operator u -> psi(u) y, as an m x n matrix.
inline Matrix tensor(const Vector& y, const Vector& psi)
{
    return y * psi.transpose();
}

struct MemberIdHash {
    std::size_t operator()(const MemberId& id) const noexcept
    {
        return DyadicCubeHash{}(id.cube) ^ (static_cast<std::size_t>(id.scale) * 0x9E3779B97F4A7C15ULL);
    }
};

/// Per-member data of the extension: the nearest point of F to the anchor, f there, and A(x_j).
struct MemberJet {
    Vector foot;
    Vector value;
    Matrix a_field;
};

/// f-bar(x) = sum phi_j(x) [f(x^_j) + A(x_j)(x - x^_j)] off F, and f on F.
class Extension {
public:
    Extension(const JetField& jets, const Partition& partition, const AField& afield)
        : jets_(jets), partition_(partition), afield_(afield), memo_(std::make_shared<Memo>())
    {
        if (partition.dimension() != jets.domain_dim()) throw InputError("partition and jets differ in dimension");
        if (afield.jets().domain_dim() != jets.domain_dim() || afield.jets().range_dim() != jets.range_dim()) {
            throw InputError("A-field and jets differ in dimensions");
        }
    }

    const JetField& jets() const { return jets_; }
    const Partition& partition() const { return partition_; }
    const AField& afield() const { return afield_; }
    const ClosedSet& set() const { return jets_.set(); }
    int domain_dim() const { return jets_.domain_dim(); }
    int range_dim() const { return jets_.range_dim(); }

    Vector value(const Vector& x) const
    {
        require_dimension(x, domain_dim(), "extend_value");
        const NearestResult nr = set().nearest(x);
        if (nr.distance == 0.0) return jets_.jet_at_foot(nr).value;
        Vector out = Vector::Zero(range_dim());
        for (const auto& w : partition_.weights_at(x)) {
            const MemberJet mj = member_jet(w.member);
            out += w.weight * (mj.value + mj.a_field * (x - mj.foot));
        }
        return out;
    }

    /// Sum phi_j A(x_j) + sum [f(x^_j) + A(x_j)(x - x^_j)] (x) phi_j'.
    Matrix jacobian(const Vector& x) const
    {
        require_dimension(x, domain_dim(), "extend_jacobian");
        if (set().distance(x) == 0.0) throw QueryError("extend_jacobian: x lies in F; the on-set derivative is L(x) from the jet field");
        Matrix out = Matrix::Zero(range_dim(), domain_dim());
        for (const auto& w : partition_.weights_at(x)) {
            const MemberJet mj = member_jet(w.member);
            out += w.weight * mj.a_field;
            out += tensor(mj.value + mj.a_field * (x - mj.foot), w.gradient);
        }
        return out;
    }

    /// The derivative expanded about a point a of F:
    /// L(a) + sum phi_j [A(x_j) - L(a)] + sum [f(x^_j) - f(a) - L(a)(x^_j - a) + (A(x_j) - L(a))(x - x^_j)] (x) phi_j'.
    Matrix jacobian_about(const Vector& x, const Vector& a) const
    {
        require_dimension(x, domain_dim(), "jacobian_about");
        if (set().distance(x) == 0.0) throw QueryError("jacobian_about: x lies in F");
        const Jet ja = jets_.jet(a);
        Matrix out = ja.op;
        for (const auto& w : partition_.weights_at(x)) {
            const MemberJet mj = member_jet(w.member);
            const Matrix dev = mj.a_field - ja.op;
            out += w.weight * dev;
            out += tensor(mj.value - ja.value - ja.op * (mj.foot - a) + dev * (x - mj.foot), w.gradient);
        }
        return out;
    }

    MemberJet member_jet(const Member& m) const
    {
        {
            std::shared_lock lock(memo_->mutex);
            auto it = memo_->entries.find(m.id);
            if (it != memo_->entries.end()) return it->second;
        }
        const NearestResult nr = set().nearest(m.anchor);
        const Jet j = jets_.jet_at_foot(nr);
        MemberJet mj{nr.foot, j.value, afield_(m.anchor)};
        std::unique_lock lock(memo_->mutex);
        if (memo_->entries.size() < kMemoCapacity) memo_->entries.emplace(m.id, mj);
        return mj;
    }

private:
    struct Memo {
        std::shared_mutex mutex;
        std::unordered_map<MemberId, MemberJet, MemberIdHash> entries;
    };
    static constexpr std::size_t kMemoCapacity = std::size_t{1} << 20;

    JetField jets_;
    Partition partition_;
    AField afield_;
    std::shared_ptr<Memo> memo_;
};

struct FieldSample {
    Vector x;
    Vector value;
    std::optional<Matrix> jacobian;
    bool on_set = false;
};

/// Lattice samples of f-bar over [lo, hi], row-major (last axis fastest).
inline std::vector<FieldSample> sample_grid(const Extension& ext, const Vector& lo, const Vector& hi,
                                            const std::vector<int>& resolution, bool with_jacobian, unsigned threads = 1)
{
    const int n = ext.domain_dim();
    require_dimension(lo, n, "grid lo");
    require_dimension(hi, n, "grid hi");
    if (static_cast<int>(resolution.size()) != n) throw InputError("grid resolution must have one entry per axis");
    for (int i = 0; i < n; ++i) {
        if (!(lo[i] < hi[i])) throw InputError("grid box is degenerate: lo must be < hi on every axis");
        if (resolution[static_cast<std::size_t>(i)] < 2) throw InputError("grid resolution must be >= 2 per axis");
    }
    std::size_t total = 1;
    for (int r : resolution) total *= static_cast<std::size_t>(r);
    std::vector<FieldSample> out(total);
    parallel_for(total, threads, [&](std::size_t flat) {
        Vector x(n);
        std::size_t rest = flat;
        for (int i = n - 1; i >= 0; --i) {
            const auto res = static_cast<std::size_t>(resolution[static_cast<std::size_t>(i)]);
            const std::size_t idx = rest % res;
            rest /= res;
            x[i] = lo[i] + (hi[i] - lo[i]) * static_cast<double>(idx) / static_cast<double>(res - 1);
        }
        FieldSample& s = out[flat];
        const NearestResult nr = ext.set().nearest(x);
        s.on_set = nr.distance <= 1e-12;
        if (s.on_set) {
            s.value = ext.jets().jet_at_foot(nr).value;
        } else {
            s.value = ext.value(x);
            if (with_jacobian) s.jacobian = ext.jacobian(x);
        }
        s.x = std::move(x);
    });
    return out;
}

} // namespace whitney
