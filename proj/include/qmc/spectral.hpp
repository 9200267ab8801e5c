#pragma once

#include "qmc/model.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace qmc {

// ---------------------------------------------------------------------------
// Symmetrizer
// ---------------------------------------------------------------------------

struct Symmetrizer {
    bool success = false;
    std::vector<CMatrix> pi;  ///< Pi_0..Pi_k (up to the last computed index)
    std::vector<CMatrix> r;   ///< Cholesky factors, Pi_n = R_n^* R_n
    std::vector<CMatrix> e;   ///< R_n B_n R_n^{-1}
    int failing_index = -1;
    double defect = 0.0;
    std::string reason;
};

inline constexpr double tol_sym = 1e-9;

namespace detail {

inline double relative_hermitian_defect(const CMatrix& m) {
    return hermitian_defect(m) / std::max(1.0, m.norm());
}

}  // namespace detail

/// Dette-type symmetrizer: Pi_{n+1} = (A_n^*)^{-1} Pi_n C_{n+1}, each Pi_n Hermitian positive definite
/// and Pi_n B_n Hermitian. `pi0` defaults to the identity.
inline Symmetrizer find_symmetrizer(const QmcModel& m, int n_max, std::optional<CMatrix> pi0 = std::nullopt,
                                    double tol = tol_sym) {
    if (n_max < 0) throw SchemaError("n_max must be non-negative");
    const int d = m.block_dim();
    Symmetrizer s;
    CMatrix pi = pi0.value_or(identity(d));
    if (pi.rows() != d || pi.cols() != d) throw SchemaError("Pi_0 has the wrong size");
    auto fail = [&](int n, double defect, std::string why) {
        s.success = false;
        s.failing_index = n;
        s.defect = defect;
        s.reason = std::move(why);
        return s;
    };
    for (int n = 0; n <= n_max; ++n) {
        if (n > 0) {
            const CMatrix rhs = s.pi.back() * m.C(n);
            pi = left_divide(m.A(n - 1).adjoint(), rhs, "A_" + std::to_string(n - 1) + "^*");
        }
        s.pi.push_back(pi);
        const double hd = detail::relative_hermitian_defect(pi);
        if (hd > tol) return fail(n, hd, "Pi_" + std::to_string(n) + " is not Hermitian");
        const CMatrix h = 0.5 * (pi + pi.adjoint());
        Eigen::LLT<CMatrix> llt(h);
        if (llt.info() != Eigen::Success) return fail(n, hd, "Pi_" + std::to_string(n) + " is not positive definite");
        Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() <= tol * std::max(1.0, es.eigenvalues().maxCoeff()))
            return fail(n, es.eigenvalues().minCoeff(), "Pi_" + std::to_string(n) + " is not positive definite");
        const CMatrix r = llt.matrixU();
        const CMatrix e = r * right_divide(m.B(n), r, "R_" + std::to_string(n));
        s.r.push_back(r);
        s.e.push_back(e);
        const double ed = hermitian_defect(e) / std::max(1.0, e.norm());
        if (ed > tol) return fail(n, ed, "R_" + std::to_string(n) + " B_" + std::to_string(n) + " R^{-1} is not Hermitian");
    }
    s.success = true;
    return s;
}

// ---------------------------------------------------------------------------
// Finite-case weights
// ---------------------------------------------------------------------------

struct WeightPoint {
    Complex node;
    int multiplicity = 1;
    CMatrix weight;
    double derivative_check = 0.0;  ///< residue minus the derivative formula, for multiplicity >= 2
};

struct DiscreteWeight {
    std::vector<WeightPoint> points;

    CMatrix total() const { return moment(0); }

    /// sum_k lambda_k^n W_k
    CMatrix moment(int n) const {
        if (points.empty()) return CMatrix();
        CMatrix s = CMatrix::Zero(points.front().weight.rows(), points.front().weight.cols());
        for (const auto& p : points) s += std::pow(p.node, n) * p.weight;
        return s;
    }
};

struct WeightOptions {
    double group_tol = 1e-8;
    int contour_points = 64;
    double max_radius = 1e-4;
    /// Weights are normalized to sum to Pi_0^{-1}. This Pi_0 is the inverse of the one produced by
    /// find_symmetrizer, so pass Symmetrizer::pi[0].inverse() for a symmetrizable chain.
    std::optional<CMatrix> pi0;
};

/// (1 / 2 pi i) times the contour integral of g over the circle |z - c| = r (trapezoid rule).
/// Nodes sit at half-steps so none of them lands on the real axis.
template <typename F>
CMatrix contour_residue(F&& g, Complex center, double radius, int points) {
    CMatrix acc;
    for (int k = 0; k < points; ++k) {
        const Complex u = std::polar(1.0, 2.0 * std::numbers::pi * (k + 0.5) / points);
        const CMatrix v = g(center + radius * u);
        if (k == 0) acc = CMatrix::Zero(v.rows(), v.cols());
        acc += v * u;
    }
    return acc * (radius / points);
}

struct EigenCluster {
    Complex center;
    int multiplicity;
    double gap;  ///< distance to the nearest other cluster
};

/// Group eigenvalues by single linkage at `tol`; clusters closer than 10 tol are refused.
inline std::vector<EigenCluster> group_eigenvalues(const CVector& ev, double tol) {
    const auto n = ev.size();
    std::vector<int> label(static_cast<std::size_t>(n), -1);
    int next = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (label[i] >= 0) continue;
        std::vector<Eigen::Index> stack{i};
        label[i] = next;
        while (!stack.empty()) {
            const auto a = stack.back();
            stack.pop_back();
            for (Eigen::Index b = 0; b < n; ++b) {
                if (label[b] < 0 && std::abs(ev(a) - ev(b)) <= tol) {
                    label[b] = next;
                    stack.push_back(b);
                }
            }
        }
        ++next;
    }
    std::vector<EigenCluster> out(static_cast<std::size_t>(next), EigenCluster{0.0, 0, 0.0});
    for (Eigen::Index i = 0; i < n; ++i) {
        out[label[i]].center += ev(i);
        out[label[i]].multiplicity += 1;
    }
    for (auto& c : out) c.center /= static_cast<double>(c.multiplicity);
    for (std::size_t a = 0; a < out.size(); ++a) {
        double gap = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < n; ++i) {
            if (label[i] == static_cast<int>(a)) continue;
            gap = std::min(gap, std::abs(ev(i) - out[a].center));
        }
        // Minimal distance between members of different clusters.
        for (Eigen::Index i = 0; i < n; ++i) {
            if (label[i] != static_cast<int>(a)) continue;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (label[j] == static_cast<int>(a)) continue;
                const double dist = std::abs(ev(i) - ev(j));
                if (dist <= 10.0 * tol) {
                    std::ostringstream os;
                    os << "eigenvalue grouping is ambiguous: clusters near " << ev(i) << " and " << ev(j)
                       << " are separated by " << dist << " (grouping tolerance " << tol << ")";
                    throw NumericalError(os.str());
                }
            }
        }
        out[a].gap = gap;
    }
    std::sort(out.begin(), out.end(), [](const EigenCluster& x, const EigenCluster& y) {
        if (x.center.real() != y.center.real()) return x.center.real() < y.center.real();
        return x.center.imag() < y.center.imag();
    });
    return out;
}

namespace detail {

/// z -> ((z I - Phi)^{-1})_{00} on a dense block matrix.
inline CMatrix resolvent_corner(const CMatrix& phi, int d, Complex z) {
    const auto n = phi.rows();
    CMatrix a = z * CMatrix::Identity(n, n) - phi;
    Eigen::PartialPivLU<CMatrix> lu(a);
    CMatrix rhs = CMatrix::Zero(n, d);
    rhs.topRows(d) = identity(d);
    return lu.solve(rhs).topRows(d);
}

}  // namespace detail

/// Nodes and weights of a block matrix whose corner resolvent is the transform of the weight.
inline DiscreteWeight weights_of_matrix(const CMatrix& phi, int d, const WeightOptions& opt = {}) {
    Eigen::ComplexEigenSolver<CMatrix> es(phi, false);
    if (es.info() != Eigen::Success) throw NumericalError("eigenvalue computation failed");
    const auto clusters = group_eigenvalues(es.eigenvalues(), opt.group_tol);
    DiscreteWeight w;
    std::optional<CMatrix> norm_left;
    if (opt.pi0) norm_left = inverse(*opt.pi0, "Pi_0");
    auto g = [&](Complex z) { return detail::resolvent_corner(phi, d, z); };
    for (const auto& c : clusters) {
        const double r = std::min(opt.max_radius, c.gap / 10.0);
        WeightPoint p;
        p.node = c.center;
        p.multiplicity = c.multiplicity;
        p.weight = contour_residue(g, c.center, r, opt.contour_points);
        if (c.multiplicity >= 2) {
            // Residue of a pole of order <= 2 as the derivative of (z - lambda)^2 G(z).
            const double h = r;
            auto f = [&](Complex z) { return ((z - c.center) * (z - c.center) * g(z)).eval(); };
            const CMatrix deriv = (f(c.center + h) - f(c.center - h)) / (2.0 * h);
            p.derivative_check = (deriv - p.weight).norm();
        }
        if (norm_left) p.weight = *norm_left * p.weight;
        w.points.push_back(std::move(p));
    }
    return w;
}

/// Weights of a finite model: residues of z -> (Phi - z I)^{-1}_{00} at the grouped eigenvalues.
inline DiscreteWeight finite_spectrum_weights(const QmcModel& m, const WeightOptions& opt = {}) {
    if (!m.topology().finite()) throw SchemaError("finite_spectrum_weights needs a segment model");
    const TruncatedOperator t = truncate(m, 0, m.topology().num_sites() - 1);
    return weights_of_matrix(t.matrix, m.block_dim(), opt);
}

// ---------------------------------------------------------------------------
// Stieltjes transforms
// ---------------------------------------------------------------------------

struct StieltjesValue {
    CMatrix value;
    double residual = 0.0;
};

/// z -> B(z; W) with a declared method and a residual for every value.
class StieltjesEvaluator {
public:
    virtual ~StieltjesEvaluator() = default;
    virtual std::string method() const = 0;
    virtual int dim() const = 0;
    virtual StieltjesValue evaluate(Complex z) const = 0;
    CMatrix operator()(Complex z) const { return evaluate(z).value; }
};

using EvaluatorPtr = std::shared_ptr<const StieltjesEvaluator>;

/// Continued-fraction evaluation of ((z - Phi)^{-1})_{ss} on a window around `site`.
class TruncatedStieltjes final : public StieltjesEvaluator {
public:
    TruncatedStieltjes(QmcModel model, int site = 0, std::optional<int> radius = std::nullopt,
                       std::optional<CMatrix> pi0 = std::nullopt)
        : model_(std::move(model)), site_(site), radius_(radius) {
        if (!model_.topology().contains(site_)) throw SchemaError("site outside topology");
        if (!model_.topology().finite() && !radius_) radius_ = 800;
        if (pi0) normalization_ = inverse(*pi0, "Pi_0");
    }

    std::string method() const override { return "truncated"; }
    int dim() const override { return model_.block_dim(); }

    StieltjesValue evaluate(Complex z) const override {
        StieltjesValue out;
        out.value = at(z, full_or_window(model_, {site_}, radius_));
        if (!model_.topology().finite()) {
            const int half = std::max(1, *radius_ / 2);
            out.residual = (out.value - at(z, window_around(model_, {site_}, half))).norm();
        }
        return out;
    }

    /// Transform on an explicit window.
    CMatrix at(Complex z, Window w) const {
        const int d = model_.block_dim();
        const CMatrix zi = z * identity(d);
        auto blk = [&](BlockKind k, int n) -> CMatrix {
            const Block* b = model_.active_block(k, n);
            return b ? b->matrix : CMatrix::Zero(d, d);
        };
        CMatrix self = zi - blk(BlockKind::B, site_);
        if (site_ < w.hi) {
            CMatrix x = inverse(zi - blk(BlockKind::B, w.hi), "truncated tail");
            for (int n = w.hi - 1; n > site_; --n)
                x = inverse(zi - blk(BlockKind::B, n) - blk(BlockKind::C, n + 1) * x * blk(BlockKind::A, n), "truncated tail");
            self -= blk(BlockKind::C, site_ + 1) * x * blk(BlockKind::A, site_);
        }
        if (site_ > w.lo) {
            CMatrix y = inverse(zi - blk(BlockKind::B, w.lo), "truncated tail");
            for (int n = w.lo + 1; n < site_; ++n)
                y = inverse(zi - blk(BlockKind::B, n) - blk(BlockKind::A, n - 1) * y * blk(BlockKind::C, n), "truncated tail");
            self -= blk(BlockKind::A, site_ - 1) * y * blk(BlockKind::C, site_);
        }
        CMatrix g = inverse(self, "z - Phi at site " + std::to_string(site_));
        if (normalization_) g = *normalization_ * g;
        return g;
    }

private:
    QmcModel model_;
    int site_;
    std::optional<int> radius_;
    std::optional<CMatrix> normalization_;
};

enum class HomogeneousMethod { fixed_point, cyclic_reduction, continuation };

struct HomogeneousOptions {
    HomogeneousMethod method = HomogeneousMethod::fixed_point;
    double tol = 1e-12;
    int max_iter = 10000;
};

inline const char* to_string(HomogeneousMethod m) {
    switch (m) {
        case HomogeneousMethod::fixed_point: return "homogeneous_fp";
        case HomogeneousMethod::cyclic_reduction: return "homogeneous_cr";
        case HomogeneousMethod::continuation: return "homogeneous_newton";
    }
    return "homogeneous";
}

/// Minimal solution G of a_minus + a_zero G + a_plus G^2 = 0 (spectral radius of G below that of
/// every other solution) by cyclic reduction.
inline CMatrix minimal_solvent(const CMatrix& a_minus, const CMatrix& a_zero, const CMatrix& a_plus, double tol = 1e-12,
                               int max_iter = 200) {
    if (a_minus.norm() == 0.0) return CMatrix::Zero(a_zero.rows(), a_zero.cols());
    CMatrix am = a_minus, a0 = a_zero, ap = a_plus, ah = a_zero;
    for (int it = 0; it < max_iter; ++it) {
        if (std::min(am.norm(), ap.norm()) < tol * std::max(1.0, a0.norm()))
            return -left_divide(ah, a_minus, "cyclic reduction result", 1e16);
        const CMatrix k = inverse(a0, "cyclic reduction pivot", 1e16);
        const CMatrix amk = am * k, apk = ap * k;
        const CMatrix am2 = -amk * am;
        const CMatrix ap2 = -apk * ap;
        a0 = a0 - amk * ap - apk * am;
        ah = ah - apk * am;
        am = am2;
        ap = ap2;
        if (!a0.allFinite()) break;
    }
    throw NumericalError("cyclic reduction did not converge");
}

namespace detail {

struct Quadratic {
    const CMatrix& a;
    const CMatrix& b;
    const CMatrix& c;

    Eigen::Index dim() const { return b.rows(); }

    CMatrix residual(const CMatrix& x, Complex z) const {
        return x * (z * identity(dim()) - b - c * x * a) - identity(dim());
    }
};

inline CMatrix fixed_point(const Quadratic& q, Complex z, const HomogeneousOptions& opt) {
    const CMatrix zi = z * identity(q.dim());
    CMatrix x = identity(q.dim()) / z;
    double delta = 0.0;
    for (int it = 0; it < opt.max_iter; ++it) {
        CMatrix next = inverse(zi - q.b - q.c * x * q.a, "fixed-point step");
        delta = (next - x).norm();
        x = std::move(next);
        if (delta < opt.tol * std::max(1.0, x.norm())) return x;
    }
    std::ostringstream os;
    os << "fixed-point iteration did not converge at z = " << z << " after " << opt.max_iter
       << " iterations (last step " << delta << ")";
    throw NumericalError(os.str());
}

/// Cyclic reduction for X = (z - B - C G)^{-1}, G the minimal solution of A + (B - z) G + C G^2 = 0.
inline CMatrix cyclic_reduction(const Quadratic& q, Complex z, const HomogeneousOptions& opt) {
    const CMatrix zi = z * identity(q.dim());
    std::optional<CMatrix> g;
    try {
        g = minimal_solvent(-q.a, zi - q.b, -q.c, opt.tol);
    } catch (const NumericalError& e) {
        std::ostringstream os;
        os << e.what() << " at z = " << z;
        throw NumericalError(os.str());
    }
    return inverse(zi - q.b - q.c * *g, "z - B - C G", 1e16);
}

/// Newton's method on X (z - B - C X A) = I, continued along a vertical path from a point where
/// the fixed-point iteration contracts quickly.
inline CMatrix continuation(const Quadratic& q, Complex z, const HomogeneousOptions& opt) {
    const auto d = q.dim();
    const double reach = q.b.norm() + 2.0 * std::sqrt(q.a.norm() * q.c.norm()) + 1.0;
    const double y_target = z.imag();
    double y = std::max(std::abs(y_target), reach);
    const double sign = y_target < 0 ? -1.0 : 1.0;
    CMatrix x = fixed_point(q, Complex(z.real(), sign * y), opt);
    auto newton = [&](Complex w) {
        for (int it = 0; it < 50; ++it) {
            const CMatrix m = w * identity(d) - q.b - q.c * x * q.a;
            const CMatrix f = x * m - identity(d);
            // vec(P dX Q) = (P kron Q^T) vec(dX) for row stacking.
            const CMatrix jac = Eigen::kroneckerProduct(identity(d), m.transpose()).eval() -
                                Eigen::kroneckerProduct(x * q.c, q.a.transpose()).eval();
            Eigen::PartialPivLU<CMatrix> lu(jac);
            const CVector step = lu.solve(-vec(f));
            if (!step.allFinite()) break;
            x += unvec(step);
            if (step.norm() < opt.tol * std::max(1.0, x.norm())) return true;
        }
        return false;
    };
    const double floor = std::max(std::abs(y_target), 1e-13 * std::max(1.0, std::abs(z.real())));
    double factor = 0.5;
    while (y > floor) {
        const double next = std::max(floor, y * factor);
        const CMatrix saved = x;
        if (newton(Complex(z.real(), sign * next))) {
            y = next;
            factor = std::max(0.1, factor * factor);
        } else {
            x = saved;
            factor = std::sqrt(factor);
            if (factor > 1.0 - 1e-6) {
                std::ostringstream os;
                os << "Newton continuation stalled near z = " << Complex(z.real(), sign * y);
                throw NumericalError(os.str());
            }
        }
    }
    if (y != std::abs(y_target) && !newton(z)) {
        std::ostringstream os;
        os << "Newton continuation did not converge at z = " << z;
        throw NumericalError(os.str());
    }
    return x;
}

}  // namespace detail

/// Solution of X = (z - B - C X A)^{-1} on the branch of the genuine half-line measure.
inline StieltjesValue stieltjes_homogeneous(const CMatrix& a, const CMatrix& b, const CMatrix& c, Complex z,
                                            const HomogeneousOptions& opt = {}) {
    const auto d = b.rows();
    if (a.rows() != d || c.rows() != d || a.cols() != d || c.cols() != d) throw SchemaError("blocks of different sizes");
    const detail::Quadratic q{a, b, c};
    CMatrix x;
    switch (opt.method) {
        case HomogeneousMethod::fixed_point: x = detail::fixed_point(q, z, opt); break;
        case HomogeneousMethod::cyclic_reduction: x = detail::cyclic_reduction(q, z, opt); break;
        case HomogeneousMethod::continuation: x = detail::continuation(q, z, opt); break;
    }
    return {x, q.residual(x, z).norm()};
}

class HomogeneousStieltjes final : public StieltjesEvaluator {
public:
    HomogeneousStieltjes(CMatrix a, CMatrix b, CMatrix c, HomogeneousOptions opt = {})
        : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)), opt_(opt) {}

    std::string method() const override { return to_string(opt_.method); }
    int dim() const override { return static_cast<int>(b_.rows()); }
    StieltjesValue evaluate(Complex z) const override { return stieltjes_homogeneous(a_, b_, c_, z, opt_); }

private:
    CMatrix a_, b_, c_;
    HomogeneousOptions opt_;
};

/// Half-line model with a homogeneous bulk and finitely many overridden sites:
/// homogeneous transform beyond the last override, continued fraction down to site 0.
class HalfLineStieltjes final : public StieltjesEvaluator {
public:
    explicit HalfLineStieltjes(QmcModel model, HomogeneousOptions opt = {}) : model_(std::move(model)), opt_(opt) {
        if (model_.topology().kind() != TopologyKind::half_line) throw SchemaError("HalfLineStieltjes needs a half-line model");
        const auto& h = model_.homogeneous();
        if (!h.A || !h.C) throw SchemaError("HalfLineStieltjes needs homogeneous A and C blocks");
        const int d = model_.block_dim();
        tail_ = std::make_shared<HomogeneousStieltjes>(h.A->matrix, h.B ? h.B->matrix : CMatrix::Zero(d, d), h.C->matrix, opt);
        if (auto r = model_.override_range()) last_ = r->second;
    }

    std::string method() const override { return last_ >= 0 ? "corner" : to_string(opt_.method); }
    int dim() const override { return model_.block_dim(); }

    StieltjesValue evaluate(Complex z) const override {
        StieltjesValue t = tail_->evaluate(z);
        CMatrix x = t.value;
        const CMatrix zi = z * identity(model_.block_dim());
        for (int n = last_; n >= 0; --n)
            x = inverse(zi - model_.B(n) - model_.C(n + 1) * x * model_.A(n), "corner step at site " + std::to_string(n));
        return {x, t.residual};
    }

private:
    QmcModel model_;
    HomogeneousOptions opt_;
    std::shared_ptr<HomogeneousStieltjes> tail_;
    int last_ = -1;
};

/// Corner identities on top of an inner evaluator.
/// Shift form: (B(z)^{-1} - delta)^{-1}. Perturbation form: (z - B_0 - C B(z) A_0)^{-1}.
class CornerStieltjes final : public StieltjesEvaluator {
public:
    static CornerStieltjes shift(EvaluatorPtr inner, CMatrix delta) {
        return CornerStieltjes(std::move(inner), std::move(delta), {}, {}, true);
    }
    static CornerStieltjes perturbation(EvaluatorPtr inner, CMatrix b0, CMatrix a0, CMatrix c) {
        return CornerStieltjes(std::move(inner), std::move(b0), std::move(a0), std::move(c), false);
    }

    std::string method() const override { return "corner"; }
    int dim() const override { return inner_->dim(); }

    StieltjesValue evaluate(Complex z) const override {
        StieltjesValue in = inner_->evaluate(z);
        CMatrix v;
        try {
            if (shift_) {
                v = inverse(inverse(in.value, "inner transform") - b_, "corner shift");
            } else {
                v = inverse(z * identity(dim()) - b_ - c_ * in.value * a0_, "corner perturbation");
            }
        } catch (const NumericalError& e) {
            std::ostringstream os;
            os << e.what() << "; z = " << z << " is a candidate point-mass location";
            throw NumericalError(os.str());
        }
        return {v, in.residual};
    }

private:
    CornerStieltjes(EvaluatorPtr inner, CMatrix b, CMatrix a0, CMatrix c, bool shift)
        : inner_(std::move(inner)), b_(std::move(b)), a0_(std::move(a0)), c_(std::move(c)), shift_(shift) {}

    EvaluatorPtr inner_;
    CMatrix b_, a0_, c_;
    bool shift_;
};

inline CMatrix stieltjes_corner(const CMatrix& b_corner, const StieltjesEvaluator& inner, Complex z) {
    return inverse(inverse(inner(z), "inner transform") - b_corner, "corner shift");
}

/// Point mass of the measure at `x` from a small contour around it.
inline CMatrix point_mass(const StieltjesEvaluator& ev, Complex x, double radius = 1e-5, int points = 64) {
    return contour_residue([&](Complex z) { return ev(z); }, x, radius, points);
}

struct FoldedBlocks {
    CMatrix b11, b22, b12, b21;

    CMatrix full() const {
        CMatrix f(b11.rows() + b22.rows(), b11.cols() + b22.cols());
        f << b11, b12, b21, b22;
        return f;
    }
};

/// Split identities for a line, given P = Pi_0^+ B(z; W+) and M = Pi_{-1}^- B(z; W-).
inline FoldedBlocks stieltjes_folded(const CMatrix& a_m1, const CMatrix& c0, const CMatrix& p, const CMatrix& m) {
    const auto d = p.rows();
    const CMatrix left = inverse(identity(d) - a_m1 * m * c0 * p, "I - A_{-1} M C_0 P");
    const CMatrix right = inverse(identity(d) - c0 * p * a_m1 * m, "I - C_0 P A_{-1} M");
    FoldedBlocks f;
    f.b11 = p * left;
    f.b22 = m * right;
    f.b12 = p * left * a_m1 * m;
    f.b21 = m * right * c0 * p;
    return f;
}

}  // namespace qmc
