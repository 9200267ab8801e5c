#pragma once

#include "qmc/statistics.hpp"

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>

namespace qmc {

/// A line model folded at the origin: folded site k carries the original sites k (copy 1) and -k-1 (copy 2).
struct FoldedModel {
    QmcModel line;
    QmcModel folded;

    int base_block_dim() const { return line.block_dim(); }

    static std::pair<int, int> original_sites(int k) { return {k, -k - 1}; }

    /// Folded index and copy (1 or 2) of an original site.
    static std::pair<int, int> locate(int site) { return site >= 0 ? std::pair{site, 1} : std::pair{-site - 1, 2}; }
};

namespace detail {

inline CMatrix block_diag(const CMatrix& a, const CMatrix& b) {
    CMatrix out = CMatrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
    out.topLeftCorner(a.rows(), a.cols()) = a;
    out.bottomRightCorner(b.rows(), b.cols()) = b;
    return out;
}

inline std::optional<Block> matrix_block(const CMatrix& m) {
    if (m.norm() == 0.0) return std::nullopt;
    return block_from_matrix(m);
}

inline void require_line(const QmcModel& m, const char* what) {
    if (m.topology().kind() != TopologyKind::line) throw SchemaError(std::string(what) + " needs a line model");
}

}  // namespace detail

/// Folds a line model. With `sites`, the folded model is the segment {0..sites-1}, i.e. the line cut to [-sites, sites-1].
inline FoldedModel fold_model(const QmcModel& line, std::optional<int> sites = std::nullopt) {
    detail::require_line(line, "fold_model");
    const int d = line.block_dim();
    const CMatrix z = CMatrix::Zero(d, d);
    auto hom = [&](const std::optional<Block>& b) { return b ? b->matrix : z; };
    const auto& h = line.homogeneous();
    SiteBlocks bulk{detail::matrix_block(detail::block_diag(hom(h.A), hom(h.C))),
                    detail::matrix_block(detail::block_diag(hom(h.B), hom(h.B))),
                    detail::matrix_block(detail::block_diag(hom(h.C), hom(h.A)))};

    std::set<int> touched{0};
    for (const auto& [site, blocks] : line.overrides()) touched.insert(FoldedModel::locate(site).first);
    std::map<int, SiteBlocks> ov;
    for (int k : touched) {
        const int up = k, down = -k - 1;
        SiteBlocks s;
        s.A = block_from_matrix(detail::block_diag(line.A(up), line.C(down)));
        s.C = block_from_matrix(detail::block_diag(line.C(up), line.A(down)));
        if (k == 0) {
            CMatrix g0(2 * d, 2 * d);
            g0 << line.B(0), line.A(-1), line.C(0), line.B(-1);
            s.B = block_from_matrix(g0);
        } else {
            s.B = block_from_matrix(detail::block_diag(line.B(up), line.B(down)));
        }
        ov[k] = s;
    }
    const Topology topo = sites ? Topology::segment(*sites) : Topology::half_line();
    if (sites && !ov.empty() && ov.rbegin()->first >= *sites) throw SchemaError("overrides lie outside the folded segment");
    QmcModel folded(topo, line.dim(), line.mode(), bulk, ov, true, 2 * line.copies(), line.tolerances());
    return {line, folded};
}

/// Quadrant (row_copy, col_copy), copies numbered 1 and 2, of a folded block.
inline CMatrix unfold_block(const CMatrix& folded_block, int row_copy, int col_copy) {
    if (folded_block.rows() != folded_block.cols() || folded_block.rows() % 2 != 0)
        throw SchemaError("folded block must be square with even size");
    if (row_copy < 1 || row_copy > 2 || col_copy < 1 || col_copy > 2)
        throw SchemaError("quadrant must be one of 11, 12, 21, 22");
    const auto d = folded_block.rows() / 2;
    return folded_block.block((row_copy - 1) * d, (col_copy - 1) * d, d, d);
}

inline CMatrix unfold_block(const CMatrix& folded_block, const std::string& quadrant) {
    if (quadrant.size() != 2) throw SchemaError("quadrant must be one of 11, 12, 21, 22, got '" + quadrant + "'");
    return unfold_block(folded_block, quadrant[0] - '0', quadrant[1] - '0');
}

/// Original n-step block (j, i) read off the folded power.
inline CMatrix line_block_via_fold(const FoldedModel& fm, int j, int i, int n) {
    const auto [fj, a] = FoldedModel::locate(j);
    const auto [fi, b] = FoldedModel::locate(i);
    return unfold_block(power_block(fm.folded, fj, fi, n), a, b);
}

/// Pi_0 of the folded model: diag(I, Pi_{-1}) with Pi_{-1} = A_{-1}^* C_0^{-1}, the choice that makes Pi_0 G_0 Hermitian.
inline CMatrix folded_pi0(const FoldedModel& fm) {
    const int d = fm.base_block_dim();
    const CMatrix pim1 = right_divide(fm.line.A(-1).adjoint(), fm.line.C(0), "C_0");
    return detail::block_diag(identity(d), pim1);
}

/// Discrete weight of a folded segment, normalized so that the Karlin-McGregor sums hold.
inline DiscreteWeight folded_weight(const FoldedModel& fm, WeightOptions opt = {}) {
    opt.pi0 = inverse(folded_pi0(fm), "folded Pi_0");
    return finite_spectrum_weights(fm.folded, opt);
}

/// Karlin-McGregor on the line: the 2x2 quadrant sum over a discrete folded weight with two-sided polynomials.
inline CMatrix km_on_line(const FoldedModel& fm, const DiscreteWeight& w, int j, int i, int n) {
    if (n < 0) throw SchemaError("number of steps must be non-negative");
    const auto [fj, a] = FoldedModel::locate(j);
    const auto [fi, b] = FoldedModel::locate(i);
    const Symmetrizer sym = find_symmetrizer(fm.folded, std::max(fj, fi), folded_pi0(fm));
    if (!sym.success) throw SchemaError("folded model is not symmetrizable: " + sym.reason);
    const int d = fm.base_block_dim();
    const int top = std::max({fj, fi}) + 1;
    // Columns of the folded polynomial at folded index k: (Q_k^1, Q_k^2) and (Q_{-k-1}^1, Q_{-k-1}^2).
    auto folded_poly = [&](const std::map<int, CMatrix>& q1, const std::map<int, CMatrix>& q2, int k) {
        CMatrix out(2 * d, 2 * d);
        out << q1.at(k), q1.at(-k - 1), q2.at(k), q2.at(-k - 1);
        return out;
    };
    CMatrix norm = CMatrix::Zero(2 * d, 2 * d), acc = CMatrix::Zero(2 * d, 2 * d);
    for (const auto& p : w.points) {
        const auto q1 = eval_two_sided(fm.line, 1, p.node, -top - 1, top);
        const auto q2 = eval_two_sided(fm.line, 2, p.node, -top - 1, top);
        const CMatrix qj = folded_poly(q1, q2, fj), qi = folded_poly(q1, q2, fi);
        const CMatrix left = qj.adjoint() * p.weight;
        norm += left * qj;
        acc += std::pow(p.node, n) * left * qi;
    }
    return unfold_block(left_divide(norm, acc, "(Q_j, Q_j) on the folded model"), a, b);
}

// ---------------------------------------------------------------------------
// Split into half-lines and the folded transforms
// ---------------------------------------------------------------------------

struct LineHalves {
    QmcModel plus;   ///< sites 0, 1, 2, ... of the line
    QmcModel minus;  ///< sites -1, -2, ... relabelled 0, 1, ... (A and C exchange roles)
    CMatrix a_m1;    ///< A_{-1}: -1 -> 0
    CMatrix c0;      ///< C_0: 0 -> -1
};

inline LineHalves split_line(const QmcModel& line) {
    detail::require_line(line, "split_line");
    const auto& h = line.homogeneous();
    std::map<int, SiteBlocks> plus_ov, minus_ov;
    for (const auto& [site, b] : line.overrides()) {
        if (site >= 0) plus_ov[site] = b;
        else minus_ov[-site - 1] = SiteBlocks{b.C, b.B, b.A};
    }
    const QmcModel plus(Topology::half_line(), line.dim(), line.mode(), h, plus_ov, true, line.copies(), line.tolerances());
    const QmcModel minus(Topology::half_line(), line.dim(), line.mode(), SiteBlocks{h.C, h.B, h.A}, minus_ov, true,
                         line.copies(), line.tolerances());
    return {plus, minus, line.A(-1), line.C(0)};
}

namespace detail {

inline EvaluatorPtr half_line_evaluator(const QmcModel& half) {
    const auto& h = half.homogeneous();
    if (h.A && h.C) {
        HomogeneousOptions opt;
        opt.method = HomogeneousMethod::cyclic_reduction;
        return std::make_shared<HalfLineStieltjes>(half, opt);
    }
    return std::make_shared<SiteTransform>(half, 0);
}

}  // namespace detail

/// Transform of the line at site 0 (W_11) or -1 (W_22) from the two half-line transforms.
class LineStieltjes final : public StieltjesEvaluator {
public:
    LineStieltjes(const QmcModel& line, int site, EvaluatorPtr plus = nullptr, EvaluatorPtr minus = nullptr)
        : site_(site) {
        if (site != 0 && site != -1) throw SchemaError("line transforms are available at sites 0 and -1");
        LineHalves halves = split_line(line);
        a_m1_ = halves.a_m1;
        c0_ = halves.c0;
        plus_ = plus ? std::move(plus) : detail::half_line_evaluator(halves.plus);
        minus_ = minus ? std::move(minus) : detail::half_line_evaluator(halves.minus);
    }

    std::string method() const override { return "folded(" + plus_->method() + ", " + minus_->method() + ")"; }
    int dim() const override { return static_cast<int>(a_m1_.rows()); }

    FoldedBlocks blocks(Complex z) const { return stieltjes_folded(a_m1_, c0_, (*plus_)(z), (*minus_)(z)); }

    StieltjesValue evaluate(Complex z) const override {
        const StieltjesValue p = plus_->evaluate(z), m = minus_->evaluate(z);
        const FoldedBlocks f = stieltjes_folded(a_m1_, c0_, p.value, m.value);
        return {site_ == 0 ? f.b11 : f.b22, std::max(p.residual, m.residual)};
    }

private:
    int site_;
    CMatrix a_m1_, c0_;
    EvaluatorPtr plus_, minus_;
};

/// Recurrence of site 0 or -1 of a line model for rho, via the folded transforms.
inline Classification classify_recurrence_on_line(const QmcModel& line, int site, const Density& rho,
                                                  const ClassifyOptions& opt = {}, EvaluatorPtr plus = nullptr,
                                                  EvaluatorPtr minus = nullptr) {
    const LineStieltjes ev(line, site, std::move(plus), std::move(minus));
    return classify_recurrence(line, ev, rho, opt);
}

/// Homogeneous-line shortcut that feeds the same half-line transform P into both halves:
/// Tr[P (I - A P C P)^{-1} rho]. It coincides with the folded transform only when the reflected half-line
/// has the same transform as the original one (for instance A = C).
inline CMatrix line_transform_same_halves(const QmcModel& line, Complex z) {
    detail::require_line(line, "line_transform_same_halves");
    const auto& h = line.homogeneous();
    if (!h.A || !h.C) throw SchemaError("homogeneous A and C blocks are required");
    const auto p = (*detail::half_line_evaluator(split_line(line).plus))(z);
    return p * inverse(identity(p.rows()) - h.A->matrix * p * h.C->matrix * p, "I - A P C P");
}

}  // namespace qmc
