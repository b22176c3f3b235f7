#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace whitney {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Malformed user input: bad dimensions, out-of-range parameters, invalid datasets.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A well-formed query outside an operation's domain (for example evaluating on F).
class QueryError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Largest singular value; the induced operator norm between Euclidean spaces.
inline double operator_norm(const Matrix& m)
{
    if (m.size() == 0) return 0.0;
    if (m.rows() == 1 || m.cols() == 1) return m.norm();
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues()(0);
}

inline bool all_finite(const Vector& v)
{
    return v.allFinite();
}

inline void require_dimension(const Vector& x, int n, const char* what)
{
    if (x.size() != n) {
        throw InputError(std::string(what) + ": expected dimension " + std::to_string(n) +
                         ", got " + std::to_string(x.size()));
    }
    if (!x.allFinite()) throw InputError(std::string(what) + ": non-finite coordinate");
}

/// Lexicographic strict order on equally sized vectors.
inline bool lex_less(const Vector& a, const Vector& b)
{
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a[i] < b[i]) return true;
        if (a[i] > b[i]) return false;
    }
    return false;
}

} // namespace whitney
