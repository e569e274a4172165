#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

namespace osc {

/// Dense symmetric n x n matrix for n in {1, 2}, stored as (m11, m22, m12).
/// The norm is Frobenius: sqrt(m11^2 + m22^2 + 2 m12^2) in 2-D.
class SymMatrix {
public:
    SymMatrix() : dim_(1), a_{0.0, 0.0, 0.0} {}

    explicit SymMatrix(double m11) : dim_(1), a_{m11, 0.0, 0.0} {}

    SymMatrix(double m11, double m22, double m12) : dim_(2), a_{m11, m22, m12} {}

    static SymMatrix zero(int dim) {
        return dim == 1 ? SymMatrix(0.0) : SymMatrix(0.0, 0.0, 0.0);
    }

    static SymMatrix identity(int dim) {
        return dim == 1 ? SymMatrix(1.0) : SymMatrix(1.0, 1.0, 0.0);
    }

    int dim() const { return dim_; }

    double operator()(int i, int j) const {
        if (i == j) return i == 0 ? a_[0] : a_[1];
        return a_[2];
    }

    double m11() const { return a_[0]; }
    double m22() const { return a_[1]; }
    double m12() const { return a_[2]; }

    double trace() const { return dim_ == 1 ? a_[0] : a_[0] + a_[1]; }

    double frobenius() const {
        if (dim_ == 1) return std::abs(a_[0]);
        return std::sqrt(a_[0] * a_[0] + a_[1] * a_[1] + 2.0 * a_[2] * a_[2]);
    }

    /// tr(A * M) where A is this matrix; symmetric product picks up the
    /// off-diagonal entry twice.
    double inner(const SymMatrix& m) const {
        if (dim_ == 1) return a_[0] * m.a_[0];
        return a_[0] * m.a_[0] + a_[1] * m.a_[1] + 2.0 * a_[2] * m.a_[2];
    }

    /// Eigenvalues, ascending. Closed form for the 2 x 2 case.
    std::array<double, 2> eigenvalues() const {
        if (dim_ == 1) return {a_[0], 0.0};
        const double mean = 0.5 * (a_[0] + a_[1]);
        const double rad = std::sqrt(0.25 * (a_[0] - a_[1]) * (a_[0] - a_[1]) + a_[2] * a_[2]);
        return {mean - rad, mean + rad};
    }

    double min_eigenvalue() const { return eigenvalues()[0]; }
    double max_eigenvalue() const { return dim_ == 1 ? a_[0] : eigenvalues()[1]; }

    bool positive_semidefinite(double tol = 0.0) const { return min_eigenvalue() >= -tol; }

    SymMatrix operator+(const SymMatrix& o) const {
        check_dim(o);
        return with(a_[0] + o.a_[0], a_[1] + o.a_[1], a_[2] + o.a_[2]);
    }

    SymMatrix operator-(const SymMatrix& o) const {
        check_dim(o);
        return with(a_[0] - o.a_[0], a_[1] - o.a_[1], a_[2] - o.a_[2]);
    }

    SymMatrix operator*(double s) const { return with(a_[0] * s, a_[1] * s, a_[2] * s); }

    friend SymMatrix operator*(double s, const SymMatrix& m) { return m * s; }

    bool operator==(const SymMatrix& o) const {
        return dim_ == o.dim_ && a_[0] == o.a_[0] && a_[1] == o.a_[1] && a_[2] == o.a_[2];
    }

private:
    SymMatrix with(double m11, double m22, double m12) const {
        SymMatrix r;
        r.dim_ = dim_;
        r.a_ = {m11, m22, m12};
        return r;
    }

    void check_dim(const SymMatrix& o) const {
        if (dim_ != o.dim_) throw std::invalid_argument("SymMatrix: dimension mismatch");
    }

    int dim_;
    std::array<double, 3> a_;
};

}  // namespace osc
