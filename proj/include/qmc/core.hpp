#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qmc {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input: wrong shapes, missing fields, invalid densities.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// A computation that could not be carried out reliably in floating point.
class NumericalError : public Error {
public:
    using Error::Error;
};

struct Tolerances {
    double herm = 1e-10;
    double trace = 1e-10;
    double tp = 1e-10;
    double psd = 1e-10;
};

inline constexpr Tolerances default_tolerances{};

/// How a site block is stored: full N^2 superoperators or the 3x3 real compact form.
enum class Representation { full, compact };

inline const char* to_string(Representation r) { return r == Representation::full ? "full" : "compact"; }

inline bool is_finite(const CMatrix& m) { return m.allFinite(); }

inline CMatrix identity(Eigen::Index n) { return CMatrix::Identity(n, n); }

inline int exact_sqrt(Eigen::Index len) {
    const auto r = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(len))));
    return r * r == len ? static_cast<int>(r) : -1;
}

/// Row-stacking vectorization: the rows of `a` are concatenated.
inline CVector vec(const CMatrix& a) {
    if (a.rows() != a.cols()) throw SchemaError("vec: matrix is not square");
    const Eigen::Index n = a.rows();
    CVector v(n * n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) v(i * n + j) = a(i, j);
    return v;
}

inline CMatrix unvec(const CVector& v) {
    const int n = exact_sqrt(v.size());
    if (n < 0) throw SchemaError("unvec: length " + std::to_string(v.size()) + " is not a perfect square");
    CMatrix a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = v(i * n + j);
    return a;
}

/// The superoperator of X -> B X B^*, i.e. B (x) conj(B) under row-stacking.
inline CMatrix conj_rep(const CMatrix& b) {
    if (b.rows() != b.cols()) throw SchemaError("conj_rep: matrix is not square");
    return Eigen::kroneckerProduct(b, b.conjugate()).eval();
}

/// A completely positive map X -> sum_i K_i X K_i^*.
class KrausMap {
public:
    KrausMap() = default;

    explicit KrausMap(std::vector<CMatrix> effects) : effects_(std::move(effects)) {
        if (effects_.empty()) throw SchemaError("Kraus map needs at least one effect");
        const auto n = effects_.front().rows();
        for (const auto& k : effects_) {
            if (k.rows() != n || k.cols() != n) throw SchemaError("Kraus effects must be square and of equal size");
            if (!is_finite(k)) throw SchemaError("Kraus effect has non-finite entries");
        }
    }

    int dim() const { return effects_.empty() ? 0 : static_cast<int>(effects_.front().rows()); }
    const std::vector<CMatrix>& effects() const { return effects_; }

    CMatrix apply(const CMatrix& x) const {
        CMatrix out = CMatrix::Zero(x.rows(), x.cols());
        for (const auto& k : effects_) out += k * x * k.adjoint();
        return out;
    }

    /// sum_i K_i^* K_i, the image of the identity under the dual map.
    CMatrix dual_identity() const {
        CMatrix s = CMatrix::Zero(dim(), dim());
        for (const auto& k : effects_) s += k.adjoint() * k;
        return s;
    }

private:
    std::vector<CMatrix> effects_;
};

inline CMatrix superop_of(const KrausMap& map) {
    if (map.effects().empty()) throw SchemaError("superop_of: empty effect list");
    const auto d = map.dim() * map.dim();
    CMatrix s = CMatrix::Zero(d, d);
    for (const auto& k : map.effects()) s += conj_rep(k);
    return s;
}

namespace detail {

inline void require_real(const CMatrix& m, const char* what, double tol = 1e-14) {
    if (m.imag().cwiseAbs().maxCoeff() > tol)
        throw SchemaError(std::string(what) + ": compact form needs real entries");
}

}  // namespace detail

/// Reduce a real 4x4 superoperator (acting on vec of 2x2 matrices) to its action on
/// real symmetric inputs written as (x, y, z) for [[x, y], [y, z]].
inline CMatrix compact_of_superop(const CMatrix& s) {
    if (s.rows() != 4 || s.cols() != 4) throw SchemaError("compact form exists only for 2x2 densities");
    detail::require_real(s, "compact_of_superop");
    const Eigen::Matrix4d r = s.real();
    Eigen::Matrix3d c;
    const int keep[3] = {0, 1, 3};
    for (int a = 0; a < 3; ++a) {
        const int row = keep[a];
        c(a, 0) = r(row, 0);
        c(a, 1) = r(row, 1) + r(row, 2);
        c(a, 2) = r(row, 3);
    }
    return c.cast<Complex>();
}

/// Compact form of the conjugation by a real 2x2 matrix.
inline CMatrix compact_form(const CMatrix& m) {
    if (m.rows() != 2 || m.cols() != 2) throw SchemaError("compact_form: expected a 2x2 matrix");
    detail::require_real(m, "compact_form");
    return compact_of_superop(conj_rep(m));
}

/// Linear functional v -> trace of the block encoded by v.
inline CVector trace_functional(int dim, Representation rep, int copies = 1) {
    CVector base;
    if (rep == Representation::compact) {
        base = CVector::Zero(3);
        base(0) = 1.0;
        base(2) = 1.0;
    } else {
        base = vec(identity(dim));
    }
    CVector t(base.size() * copies);
    for (int c = 0; c < copies; ++c) t.segment(c * base.size(), base.size()) = base;
    return t;
}

/// Encode a density-shaped matrix as a block vector.
inline CVector encode(const CMatrix& rho, Representation rep) {
    if (rep == Representation::full) return vec(rho);
    if (rho.rows() != 2 || rho.cols() != 2) throw SchemaError("compact mode needs 2x2 densities");
    CVector v(3);
    v << rho(0, 0).real(), rho(0, 1).real(), rho(1, 1).real();
    return v;
}

/// Inverse of encode; compact vectors become real symmetric matrices.
inline CMatrix decode(const CVector& v, Representation rep) {
    if (rep == Representation::full) return unvec(v);
    if (v.size() != 3) throw SchemaError("compact vectors have length 3");
    CMatrix m(2, 2);
    m << v(0), v(1), v(1), v(2);
    return m;
}

/// Hermitian matrix E with tr(Phi(X)) = tr(E X); for a Kraus map E = sum K^*K.
inline CMatrix dual_identity(const CMatrix& superop, int dim, Representation rep) {
    const CVector t = trace_functional(dim, rep);
    const CVector row = superop.transpose() * t;
    if (rep == Representation::compact) {
        CMatrix e(2, 2);
        e << row(0), 0.5 * row(1), 0.5 * row(1), row(2);
        return e;
    }
    return unvec(row).transpose();
}

inline double hermitian_defect(const CMatrix& m) { return (m - m.adjoint()).norm(); }

/// Density operator, validated on construction.
class Density {
public:
    Density() = default;

    explicit Density(CMatrix m, const Tolerances& tol = default_tolerances) : m_(std::move(m)) {
        if (m_.rows() == 0 || m_.rows() != m_.cols()) throw SchemaError("density must be a non-empty square matrix");
        if (!is_finite(m_)) throw SchemaError("density has non-finite entries");
        if (hermitian_defect(m_) > tol.herm) throw SchemaError("density is not Hermitian");
        if (std::abs(m_.trace() - Complex(1.0)) > tol.trace) throw SchemaError("density does not have unit trace");
        const CMatrix h = 0.5 * (m_ + m_.adjoint());
        Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -tol.psd) throw SchemaError("density is not positive semidefinite");
    }

    /// Qubit density [[a, b], [conj(b), 1 - a]].
    static Density qubit(double a, Complex b) {
        CMatrix m(2, 2);
        m << a, b, std::conj(b), 1.0 - a;
        return Density(m);
    }

    static Density maximally_mixed(int n) { return Density(identity(n) / static_cast<double>(n)); }

    int dim() const { return static_cast<int>(m_.rows()); }
    const CMatrix& matrix() const { return m_; }

private:
    CMatrix m_;
};

struct TpCheck {
    bool trace_preserving = false;
    double defect = 0.0;
};

/// Trace preservation of the sum of several Kraus maps: sum_k K_k^* K_k = I.
inline TpCheck check_tp_column(const std::vector<KrausMap>& maps, const Tolerances& tol = default_tolerances) {
    if (maps.empty()) return {false, 1.0};
    const int n = maps.front().dim();
    CMatrix s = CMatrix::Zero(n, n);
    for (const auto& m : maps) {
        if (m.dim() != n) throw SchemaError("check_tp_column: maps of different dimension");
        s += m.dual_identity();
    }
    const double defect = (s - identity(n)).norm();
    return {defect <= tol.tp, defect};
}

/// M A^{-1} through a pivoted LU of A, refusing ill-conditioned pivots.
inline CMatrix right_divide(const CMatrix& m, const CMatrix& a, const std::string& what, double max_cond = 1e12) {
    Eigen::PartialPivLU<CMatrix> lu(a.transpose());
    const double rc = lu.rcond();
    if (!(rc > 1.0 / max_cond))
        throw NumericalError(what + " is singular or ill-conditioned (reciprocal condition " + std::to_string(rc) + ")");
    return lu.solve(m.transpose()).transpose();
}

/// A^{-1} M with the same conditioning guard.
inline CMatrix left_divide(const CMatrix& a, const CMatrix& m, const std::string& what, double max_cond = 1e12) {
    Eigen::PartialPivLU<CMatrix> lu(a);
    const double rc = lu.rcond();
    if (!(rc > 1.0 / max_cond))
        throw NumericalError(what + " is singular or ill-conditioned (reciprocal condition " + std::to_string(rc) + ")");
    return lu.solve(m);
}

inline CMatrix inverse(const CMatrix& a, const std::string& what, double max_cond = 1e14) {
    return left_divide(a, identity(a.rows()), what, max_cond);
}

}  // namespace qmc
