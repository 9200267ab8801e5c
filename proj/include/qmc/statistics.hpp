#pragma once

#include "qmc/polynomials.hpp"
#include "qmc/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace qmc {

/// Tr of the density obtained by applying `block` to rho placed in copy `copy`.
inline double density_trace(const QmcModel& m, const CMatrix& block, const Density& rho, int copy = 0) {
    if (rho.dim() != m.dim()) throw SchemaError("density dimension does not match the model");
    if (copy < 0 || copy >= m.copies()) throw SchemaError("invalid copy index");
    const CVector e = encode(rho.matrix(), m.mode());
    CVector v = CVector::Zero(m.block_dim());
    v.segment(copy * e.size(), e.size()) = e;
    return m.trace_functional().dot(block * v).real();
}

// ---------------------------------------------------------------------------
// Karlin-McGregor
// ---------------------------------------------------------------------------

/// Block (j, i) of Phi^n from a discrete weight:
/// (sum_k Q_j^* W_k Q_j)^{-1} sum_k lambda_k^n Q_j(lambda_k)^* W_k Q_i(lambda_k).
inline CMatrix km_block(const QmcModel& m, const DiscreteWeight& w, int j, int i, int n) {
    if (i < 0 || j < 0) throw SchemaError("Karlin-McGregor sites must be non-negative");
    if (n < 0) throw SchemaError("number of steps must be non-negative");
    const Symmetrizer sym = find_symmetrizer(m, std::max(i, j));
    if (!sym.success) throw SchemaError("Karlin-McGregor formula needs a symmetrizable model: " + sym.reason);
    const int d = m.block_dim();
    CMatrix norm = CMatrix::Zero(d, d), acc = CMatrix::Zero(d, d);
    for (const auto& p : w.points) {
        const auto q = eval_main(m, p.node, std::max(i, j));
        const CMatrix left = q[j].adjoint() * p.weight;
        norm += left * q[j];
        acc += std::pow(p.node, n) * left * q[i];
    }
    return left_divide(norm, acc, "(Q_j, Q_j)");
}

inline double km_probability(const QmcModel& m, const DiscreteWeight& w, int i, int j, const Density& rho, int n) {
    return density_trace(m, km_block(m, w, j, i, n), rho);
}

// ---------------------------------------------------------------------------
// Generating functions with exact homogeneous tails
// ---------------------------------------------------------------------------

namespace detail {

/// Block column Y = (I - s K Phi)^{-1} e_source, where K removes the rows of `absorbed`.
/// Sites outside [lo, hi] are covered by the decaying solution of the homogeneous bulk.
class ColumnSolve {
public:
    ColumnSolve(const QmcModel& m, Complex s, int source, std::optional<int> absorbed, int margin)
        : m_(m), s_(s), absorbed_(absorbed) {
        const Topology& t = m.topology();
        if (!t.contains(source)) throw SchemaError("site " + std::to_string(source) + " outside topology");
        if (absorbed && !t.contains(*absorbed)) throw SchemaError("site " + std::to_string(*absorbed) + " outside topology");
        if (margin < 1) throw SchemaError("margin must be positive");
        lo_ = std::min(source, absorbed.value_or(source));
        hi_ = std::max(source, absorbed.value_or(source));
        if (auto r = m.override_range()) {
            lo_ = std::min(lo_, r->first);
            hi_ = std::max(hi_, r->second);
        }
        lo_ -= margin;
        hi_ += margin;
        // A bounded side is solved up to its boundary; an unbounded side gets the homogeneous tail.
        if (auto l = t.lowest()) lo_ = *l;
        if (auto h = t.highest()) hi_ = *h;
        const int d = m.block_dim();
        const CMatrix id = identity(d);
        const auto& h = m.homogeneous();
        auto hom = [&](const std::optional<Block>& b) { return b ? b->matrix : CMatrix::Zero(d, d); };
        if (!t.highest() && h.A) up_ = minimal_solvent(s * h.A->matrix, s * hom(h.B) - id, s * hom(h.C));
        if (!t.lowest() && h.C) down_ = minimal_solvent(s * h.C->matrix, s * hom(h.B) - id, s * hom(h.A));
        solve(source);
    }

    int lo() const { return lo_; }
    int hi() const { return hi_; }

    CMatrix at(int n) const {
        const int d = m_.block_dim();
        if (n >= lo_ && n <= hi_) return y_[static_cast<std::size_t>(n - lo_)];
        if (n > hi_ && up_) {
            CMatrix v = y_.back();
            for (int k = hi_; k < n; ++k) v = *up_ * v;
            return v;
        }
        if (n < lo_ && down_) {
            CMatrix v = y_.front();
            for (int k = lo_; k > n; --k) v = *down_ * v;
            return v;
        }
        return CMatrix::Zero(d, d);
    }

private:
    CMatrix blk(BlockKind k, int site) const {
        const Block* b = m_.active_block(k, site);
        return b ? b->matrix : CMatrix::Zero(m_.block_dim(), m_.block_dim());
    }

    void solve(int source) {
        const int d = m_.block_dim();
        const auto len = static_cast<std::size_t>(hi_ - lo_ + 1);
        std::vector<CMatrix> diag(len), lower(len), upper(len), rhs(len, CMatrix::Zero(d, d));
        for (int n = lo_; n <= hi_; ++n) {
            const auto k = static_cast<std::size_t>(n - lo_);
            if (absorbed_ && n == *absorbed_) {
                diag[k] = identity(d);
                lower[k] = upper[k] = CMatrix::Zero(d, d);
            } else {
                diag[k] = identity(d) - s_ * blk(BlockKind::B, n);
                lower[k] = -s_ * blk(BlockKind::A, n - 1);
                upper[k] = -s_ * blk(BlockKind::C, n + 1);
                if (n == hi_ && up_) diag[k] += upper[k] * *up_;
                if (n == lo_ && down_) diag[k] += lower[k] * *down_;
            }
            if (n == source) rhs[k] = identity(d);
        }
        // Block Thomas elimination.
        std::vector<Eigen::PartialPivLU<CMatrix>> piv;
        piv.reserve(len);
        for (std::size_t k = 0; k < len; ++k) {
            if (k > 0) {
                const CMatrix f = lower[k] * piv[k - 1].solve(CMatrix::Identity(d, d));
                diag[k] -= f * upper[k - 1];
                rhs[k] -= f * rhs[k - 1];
            }
            piv.emplace_back(diag[k]);
            if (!(piv.back().rcond() > 1e-14)) {
                std::ostringstream os;
                os << "I - s Phi is singular at s = " << s_ << " (site " << lo_ + static_cast<int>(k) << ")";
                throw NumericalError(os.str());
            }
        }
        y_.assign(len, CMatrix());
        for (std::size_t k = len; k-- > 0;) {
            CMatrix r = rhs[k];
            if (k + 1 < len) r -= upper[k] * y_[k + 1];
            y_[k] = piv[k].solve(r);
        }
    }

    const QmcModel& m_;
    Complex s_;
    std::optional<int> absorbed_;
    int lo_ = 0, hi_ = 0;
    std::optional<CMatrix> up_, down_;
    std::vector<CMatrix> y_;
};

}  // namespace detail

inline constexpr int default_tail_margin = 2;

/// Block (target, source) of (I - s Phi)^{-1} with exact homogeneous tails.
inline CMatrix generating_block(const QmcModel& m, int target, int source, Complex s, int margin = default_tail_margin) {
    const detail::ColumnSolve col(m, s, source, std::nullopt, margin);
    return col.at(target);
}

/// First-passage generating function F_{ji}(s): block (j, i) of s P_j Phi (I - s Q_j Phi)^{-1}.
inline CMatrix first_passage_gf(const QmcModel& m, int j, int i, Complex s, int margin = default_tail_margin) {
    const detail::ColumnSolve col(m, s, i, j, margin);
    const int d = m.block_dim();
    CMatrix f = CMatrix::Zero(d, d);
    if (const Block* a = m.active_block(BlockKind::A, j - 1)) f += a->matrix * col.at(j - 1);
    if (const Block* b = m.active_block(BlockKind::B, j)) f += b->matrix * col.at(j);
    if (const Block* c = m.active_block(BlockKind::C, j + 1)) f += c->matrix * col.at(j + 1);
    return s * f;
}

/// F_{ji}(s) = Q_j(1/s)^{-1} Q_i(1/s) for 0 <= i < j on a model starting at site 0.
inline CMatrix first_passage_gf_poly(const QmcModel& m, int j, int i, Complex s) {
    if (m.topology().lowest() != 0) throw SchemaError("the polynomial path needs a model starting at site 0");
    if (!(0 <= i && i < j)) throw SchemaError("the polynomial path needs 0 <= i < j");
    if (s == Complex(0.0)) return CMatrix::Zero(m.block_dim(), m.block_dim());
    const auto q = eval_main(m, 1.0 / s, j);
    return left_divide(q[j], q[i], "Q_" + std::to_string(j) + "(1/s)");
}

/// F_{10}(s) = s A_0 (I - s B_0)^{-1}.
inline CMatrix first_passage_f10(const QmcModel& m, Complex s) {
    const int d = m.block_dim();
    return s * right_divide(m.A(0), identity(d) - s * m.B(0), "I - s B_0");
}

// ---------------------------------------------------------------------------
// Limits along ladders
// ---------------------------------------------------------------------------

/// Repeated Richardson elimination of error terms h^1, h^2, ... for samples at h_k = h_0 / ratio^k.
/// Returns the table of passes; passes.back().back() is the most refined estimate.
inline std::vector<std::vector<double>> richardson_table(const std::vector<double>& values, double ratio, int passes) {
    std::vector<std::vector<double>> table{values};
    for (int p = 1; p <= passes; ++p) {
        const auto& prev = table.back();
        if (prev.size() < 2) break;
        const double t = std::pow(ratio, p);
        std::vector<double> next;
        for (std::size_t k = 0; k + 1 < prev.size(); ++k) next.push_back((t * prev[k + 1] - prev[k]) / (t - 1.0));
        table.push_back(std::move(next));
    }
    return table;
}

struct PassageResult {
    int from = 0;
    int to = 0;
    double probability = 0.0;
    std::vector<std::pair<double, double>> ladder;  ///< (s, Tr F(s) rho)
};

struct LadderOptions {
    int m_first = 4;
    int m_last = 24;
    double stability = 1e-6;
    int margin = default_tail_margin;
};

/// p(rho at i -> j) = lim_{s -> 1} Tr(F_{ji}(s) rho) along s_m = 1 - 2^{-m}, extrapolated in sqrt(1 - s).
inline PassageResult reach_probability(const QmcModel& m, int i, int j, const Density& rho, const LadderOptions& opt = {}) {
    PassageResult r{i, j, 1.0, {}};
    if (!m.topology().contains(i) || !m.topology().contains(j)) throw SchemaError("site outside topology");
    if (i == j) return r;
    std::vector<double> values;
    for (int k = opt.m_first; k <= opt.m_last; ++k) {
        const double s = 1.0 - std::ldexp(1.0, -k);
        const double v = density_trace(m, first_passage_gf(m, j, i, s, opt.margin), rho);
        r.ladder.emplace_back(s, v);
        values.push_back(v);
    }
    const auto table = richardson_table(values, std::sqrt(2.0), 2);
    const auto& best = table.back();
    if (best.size() < 2) throw NumericalError("reach probability ladder is too short");
    const double p = best.back(), prev = best[best.size() - 2];
    if (!std::isfinite(p) || std::abs(p - prev) > opt.stability * std::max(1.0, std::abs(p))) {
        std::ostringstream os;
        os << "reach probability is inconclusive: extrapolated values " << prev << " and " << p << " disagree";
        throw NumericalError(os.str());
    }
    if (p < -1e-6 || p > 1.0 + 1e-6) {
        std::ostringstream os;
        os << "reach probability extrapolated outside [0, 1]: " << p;
        throw NumericalError(os.str());
    }
    r.probability = std::clamp(p, 0.0, 1.0);
    return r;
}

enum class Verdict { recurrent, transient, inconclusive };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::recurrent: return "recurrent";
        case Verdict::transient: return "transient";
        case Verdict::inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

struct Classification {
    Verdict verdict = Verdict::inconclusive;
    std::vector<std::pair<double, double>> evidence;  ///< (z_m, T_m)
    std::optional<double> limit;
};

struct ClassifyOptions {
    int m_first = 2;
    int m_last = 8;
    double divergence_threshold = 1e6;
    double slope_threshold = 0.25;
    double stability = 1e-6;
};

/// Decide from T_m = trace at z_m = 1 + 10^{-m} whether the trace diverges as z -> 1.
inline Classification classify_trace_ladder(const std::vector<std::pair<double, double>>& ladder,
                                            const ClassifyOptions& opt = {}) {
    Classification c;
    c.evidence = ladder;
    const auto n = ladder.size();
    if (n < 3) return c;
    std::vector<double> t;
    for (const auto& e : ladder) t.push_back(e.second);
    bool increasing = true;
    for (std::size_t k = 1; k < n; ++k) increasing = increasing && t[k] > t[k - 1];
    auto slope = [&](std::size_t k) {
        const double h0 = ladder[k - 1].first - 1.0, h1 = ladder[k].first - 1.0;
        return std::log(t[k] / t[k - 1]) / std::log(h0 / h1);
    };
    const bool all_positive = std::all_of(t.begin(), t.end(), [](double x) { return x > 0; });
    if (std::abs(t.back()) > opt.divergence_threshold ||
        (increasing && all_positive && slope(n - 1) >= opt.slope_threshold && slope(n - 2) >= opt.slope_threshold)) {
        c.verdict = Verdict::recurrent;
        return c;
    }
    const double ratio = std::sqrt((ladder[0].first - 1.0) / (ladder[1].first - 1.0));
    const auto table = richardson_table(t, ratio, 2);
    const auto& best = table.back();
    if (best.size() >= 2) {
        const double l = best.back(), prev = best[best.size() - 2];
        if (std::isfinite(l) && std::abs(l - prev) <= opt.stability * std::max(1.0, std::abs(l))) {
            c.verdict = Verdict::transient;
            c.limit = l;
        }
    }
    return c;
}

/// Recurrence of `site` for rho from the transform B(z) at that site (z -> 1 from above).
inline Classification classify_recurrence(const QmcModel& m, const StieltjesEvaluator& ev, const Density& rho,
                                          const ClassifyOptions& opt = {}, int copy = 0) {
    std::vector<std::pair<double, double>> ladder;
    for (int k = opt.m_first; k <= opt.m_last; ++k) {
        const double z = 1.0 + std::pow(10.0, -k);
        ladder.emplace_back(z, density_trace(m, ev(z), rho, copy));
    }
    return classify_trace_ladder(ladder, opt);
}

/// Transform at an arbitrary site from the exact-tail generating function: B(z) = s Phi_jj(s), s = 1/z.
class SiteTransform final : public StieltjesEvaluator {
public:
    SiteTransform(QmcModel model, int site, int margin = default_tail_margin)
        : model_(std::move(model)), site_(site), margin_(margin) {
        if (!model_.topology().contains(site_)) throw SchemaError("site outside topology");
    }
    std::string method() const override { return "generating_function"; }
    int dim() const override { return model_.block_dim(); }
    StieltjesValue evaluate(Complex z) const override {
        const Complex s = 1.0 / z;
        StieltjesValue v;
        v.value = s * generating_block(model_, site_, site_, s, margin_);
        // Residual: row `site` of (z - Phi) applied to the resolvent column.
        const detail::ColumnSolve col(model_, s, site_, std::nullopt, margin_);
        const int d = model_.block_dim();
        CMatrix r = (identity(d) - s * model_.B(site_)) * col.at(site_) - identity(d);
        if (const Block* a = model_.active_block(BlockKind::A, site_ - 1)) r -= s * a->matrix * col.at(site_ - 1);
        if (const Block* c = model_.active_block(BlockKind::C, site_ + 1)) r -= s * c->matrix * col.at(site_ + 1);
        v.residual = r.norm();
        return v;
    }

private:
    QmcModel model_;
    int site_;
    int margin_;
};

inline Classification classify_recurrence(const QmcModel& m, int site, const Density& rho, const ClassifyOptions& opt = {}) {
    return classify_recurrence(m, SiteTransform(m, site), rho, opt);
}

struct JumpResult {
    CMatrix jump;
    bool nonzero = false;
    std::optional<bool> positive_recurrent;  ///< only when the caller vouches for irreducibility
    std::vector<std::pair<double, double>> evidence;  ///< (epsilon, ||epsilon B(1 + epsilon)||)
};

/// Point mass of the weight at x = 1: lim epsilon B(1 + epsilon), extrapolated in sqrt(epsilon).
inline JumpResult jump_at_one(const StieltjesEvaluator& ev, std::optional<bool> irreducible = std::nullopt,
                              int m_first = 3, int m_last = 9) {
    std::vector<CMatrix> samples;
    JumpResult out;
    for (int k = m_first; k <= m_last; ++k) {
        const double eps = std::pow(10.0, -k);
        samples.push_back(eps * ev(1.0 + eps));
        out.evidence.emplace_back(eps, samples.back().norm());
    }
    const double ratio = std::sqrt(10.0);
    std::vector<CMatrix> level = samples;
    for (int p = 1; p <= 2 && level.size() >= 2; ++p) {
        const double t = std::pow(ratio, p);
        std::vector<CMatrix> next;
        for (std::size_t k = 0; k + 1 < level.size(); ++k) next.push_back((t * level[k + 1] - level[k]) / (t - 1.0));
        level = std::move(next);
    }
    if (level.size() < 2) throw NumericalError("jump ladder is too short");
    const CMatrix& best = level.back();
    const double spread = (best - level[level.size() - 2]).norm();
    if (!best.allFinite() || spread > 1e-5 * std::max(1.0, best.norm())) {
        std::ostringstream os;
        os << "jump estimate at x = 1 is unstable (successive estimates differ by " << spread << ")";
        throw NumericalError(os.str());
    }
    out.jump = best;
    out.nonzero = best.norm() >= 1e-6;
    if (!out.nonzero) out.jump.setZero();
    if (irreducible) out.positive_recurrent = *irreducible && out.nonzero;
    return out;
}

}  // namespace qmc
