#pragma once

#include "qmc/folding.hpp"
#include "qmc/polynomials.hpp"
#include "qmc/spectral.hpp"
#include "qmc/statistics.hpp"

#include <map>
#include <optional>
#include <utility>
#include <vector>

namespace qmc {

inline constexpr double tol_semi = 1e-8;

/// Discrete weight of a finite chain together with its polynomials at the nodes.
/// Row-0 sums hold without any symmetry: sum_k lambda_k^i W_k Q_j(lambda_k) vanishes for i < j.
struct SemiOrthogonalSystem {
    QmcModel model;
    DiscreteWeight weight;
    int max_index = 0;                            ///< last site; polynomials are kept for 0..max_index
    std::vector<std::vector<CMatrix>> q;          ///< q[k][j] = Q_j(lambda_k)
    std::map<std::pair<int, int>, double> residuals;  ///< (i, j) with i < j <= max_index

    double worst_residual() const {
        double worst = 0.0;
        for (const auto& [ij, r] : residuals) worst = std::max(worst, r);
        return worst;
    }

    /// sum_k lambda_k^i W_k Q_j(lambda_k)
    CMatrix moment(int i, int j) const {
        check_index(j);
        const auto d = model.block_dim();
        CMatrix acc = CMatrix::Zero(d, d);
        for (std::size_t k = 0; k < weight.points.size(); ++k) {
            const auto& p = weight.points[k];
            acc += std::pow(p.node, i) * p.weight * q[k][static_cast<std::size_t>(j)];
        }
        return acc;
    }

    /// sum_k Q_i(lambda_k)^* W_k Q_j(lambda_k)
    CMatrix pairing(int i, int j) const {
        check_index(i);
        check_index(j);
        const auto d = model.block_dim();
        CMatrix acc = CMatrix::Zero(d, d);
        for (std::size_t k = 0; k < weight.points.size(); ++k)
            acc += q[k][static_cast<std::size_t>(i)].adjoint() * weight.points[k].weight * q[k][static_cast<std::size_t>(j)];
        return acc;
    }

private:
    void check_index(int j) const {
        if (j < 0 || j > max_index)
            throw SchemaError("polynomial index " + std::to_string(j) + " outside 0.." + std::to_string(max_index));
    }
};

/// Residues of the corner resolvent at every eigenvalue (complex nodes kept as they are), plus the residual table.
inline SemiOrthogonalSystem nonsym_finite_weights(const QmcModel& m, const WeightOptions& opt = {}) {
    if (!m.topology().finite()) throw SchemaError("nonsym_finite_weights needs a segment model");
    SemiOrthogonalSystem s{m, finite_spectrum_weights(m, opt), m.topology().num_sites() - 1, {}, {}};
    for (const auto& p : s.weight.points) s.q.push_back(eval_main(m, p.node, std::max(s.max_index, 0)));
    for (int j = 1; j <= s.max_index; ++j)
        for (int i = 0; i < j; ++i) s.residuals[{i, j}] = s.moment(i, j).norm();
    return s;
}

/// Block (0, i) of Phi^n: (sum W_k)^{-1} sum lambda_k^n W_k Q_i(lambda_k). Zero whenever n < i.
inline CMatrix km_row0(const SemiOrthogonalSystem& s, int i, int n) {
    if (n < 0) throw SchemaError("number of steps must be non-negative");
    if (!s.model.topology().contains(i)) throw SchemaError("site " + std::to_string(i) + " outside topology");
    const auto d = s.model.block_dim();
    if (n < i) return CMatrix::Zero(d, d);
    return left_divide(s.weight.total(), s.moment(n, i), "sum of weights");
}

inline double km_row0_probability(const SemiOrthogonalSystem& s, int i, const Density& rho, int n) {
    return density_trace(s.model, km_row0(s, i, n), rho);
}

inline double semiorth_residual(const SemiOrthogonalSystem& s, int i, int j) { return s.moment(i, j).norm(); }

/// Two-index formula (Q_j, Q_j)^{-1} (x^n Q_j, Q_i). It needs full orthogonality; with semi-orthogonality alone
/// it generally disagrees with Phi^n.
inline CMatrix general_km_block(const SemiOrthogonalSystem& s, int j, int i, int n) {
    const auto d = s.model.block_dim();
    CMatrix acc = CMatrix::Zero(d, d);
    for (std::size_t k = 0; k < s.weight.points.size(); ++k) {
        const auto& p = s.weight.points[k];
        acc += std::pow(p.node, n) * s.q[k][static_cast<std::size_t>(j)].adjoint() * p.weight *
               s.q[k][static_cast<std::size_t>(i)];
    }
    return left_divide(s.pairing(j, j), acc, "(Q_j, Q_j)");
}

// ---------------------------------------------------------------------------
// Homogeneous chains on the half-line and the line
// ---------------------------------------------------------------------------

enum class LineFormula {
    folded,       ///< upper and reflected lower half-line transforms
    same_halves,  ///< Tr[P (I - A P C P)^{-1} rho] with P the upper half-line transform
};

struct HomogeneousChain {
    TopologyKind kind = TopologyKind::half_line;
    int dim = 2;
    Representation rep = Representation::full;
    CMatrix A, B, C;
    std::optional<CMatrix> A0, B0;  ///< half-line corner at site 0
    LineFormula line_formula = LineFormula::folded;

    QmcModel model() const {
        if (kind == TopologyKind::segment) throw SchemaError("homogeneous chains live on the half-line or the line");
        if (kind == TopologyKind::line && (A0 || B0)) throw SchemaError("corner blocks apply to half-line chains only");
        std::optional<Block> b;
        if (B.size() > 0 && B.norm() > 0.0) b = block_from_matrix(B);
        std::map<int, SiteBlocks> ov;
        if (A0 || B0) {
            ov[0] = SiteBlocks{A0 ? std::optional<Block>(block_from_matrix(*A0)) : std::nullopt,
                               B0 ? std::optional<Block>(block_from_matrix(*B0)) : std::nullopt, std::nullopt};
        }
        const Topology t = kind == TopologyKind::line ? Topology::line() : Topology::half_line();
        return make_homogeneous(t, dim, rep, block_from_matrix(A), b, block_from_matrix(C), kind != TopologyKind::line, ov);
    }
};

namespace detail {

class SameHalvesLineStieltjes final : public StieltjesEvaluator {
public:
    explicit SameHalvesLineStieltjes(QmcModel line) : line_(std::move(line)) {}
    std::string method() const override { return "same_halves"; }
    int dim() const override { return line_.block_dim(); }
    StieltjesValue evaluate(Complex z) const override { return {line_transform_same_halves(line_, z), 0.0}; }

private:
    QmcModel line_;
};

}  // namespace detail

/// Transform of site 0 for a homogeneous chain, following its topology and corner.
inline EvaluatorPtr homogeneous_evaluator(const HomogeneousChain& chain) {
    const QmcModel m = chain.model();
    if (chain.kind == TopologyKind::line) {
        if (chain.line_formula == LineFormula::same_halves) return std::make_shared<detail::SameHalvesLineStieltjes>(m);
        return std::make_shared<LineStieltjes>(m, 0);
    }
    HomogeneousOptions opt;
    opt.method = HomogeneousMethod::cyclic_reduction;
    return std::make_shared<HalfLineStieltjes>(m, opt);
}

inline Classification classify_recurrence_homogeneous(const HomogeneousChain& chain, const Density& rho,
                                                      const ClassifyOptions& opt = {}) {
    auto invertible = [](const CMatrix& x) { return x.rows() == x.cols() && x.size() > 0 && Eigen::FullPivLU<CMatrix>(x).isInvertible(); };
    if (chain.A.rows() != chain.C.rows() || !invertible(chain.A) || !invertible(chain.C))
        throw SchemaError("A and C must be invertible blocks of equal size");
    const QmcModel m = chain.model();
    return classify_recurrence(m, *homogeneous_evaluator(chain), rho, opt);
}

}  // namespace qmc
