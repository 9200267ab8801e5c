#pragma once

#include "qmc/core.hpp"

#include <algorithm>
#include <climits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace qmc {

enum class TopologyKind { segment, half_line, line };

class Topology {
public:
    static Topology segment(int num_sites) {
        if (num_sites < 1) throw SchemaError("segment needs at least one site");
        return Topology(TopologyKind::segment, num_sites);
    }
    static Topology half_line() { return Topology(TopologyKind::half_line, 0); }
    static Topology line() { return Topology(TopologyKind::line, 0); }

    TopologyKind kind() const { return kind_; }
    int num_sites() const { return num_sites_; }
    bool finite() const { return kind_ == TopologyKind::segment; }

    bool contains(int site) const {
        switch (kind_) {
            case TopologyKind::segment: return site >= 0 && site < num_sites_;
            case TopologyKind::half_line: return site >= 0;
            case TopologyKind::line: return true;
        }
        return false;
    }

    std::optional<int> lowest() const {
        if (kind_ == TopologyKind::line) return std::nullopt;
        return 0;
    }
    std::optional<int> highest() const {
        if (kind_ == TopologyKind::segment) return num_sites_ - 1;
        return std::nullopt;
    }

    std::string name() const {
        switch (kind_) {
            case TopologyKind::segment: return "segment";
            case TopologyKind::half_line: return "half_line";
            case TopologyKind::line: return "line";
        }
        return "?";
    }

private:
    Topology(TopologyKind k, int n) : kind_(k), num_sites_(n) {}
    TopologyKind kind_;
    int num_sites_;
};

/// One transition block: its superoperator and, when known, the Kraus effects behind it.
struct Block {
    CMatrix matrix;
    std::vector<CMatrix> kraus;

    bool has_kraus() const { return !kraus.empty(); }
};

inline Block block_from_kraus(std::vector<CMatrix> effects, Representation rep) {
    const KrausMap map(effects);
    Block b;
    if (rep == Representation::compact) {
        b.matrix = CMatrix::Zero(3, 3);
        for (const auto& k : effects) b.matrix += compact_form(k);
    } else {
        b.matrix = superop_of(map);
    }
    b.kraus = std::move(effects);
    return b;
}

inline Block block_from_matrix(CMatrix m) { return Block{std::move(m), {}}; }

struct SiteBlocks {
    std::optional<Block> A;
    std::optional<Block> B;
    std::optional<Block> C;
};

enum class BlockKind { A, B, C };

/// Trace balance of one column of the operator (all blocks leaving a site).
struct ColumnReport {
    std::optional<int> site;  ///< empty for the homogeneous bulk column
    double defect = 0.0;      ///< spectral norm of E - I with tr(Phi(X)) = tr(E X)
    bool leaks = false;       ///< some input loses trace
    bool gains = false;       ///< some input gains trace
};

class QmcModel {
public:
    QmcModel(Topology topology, int dim, Representation mode, SiteBlocks homogeneous,
             std::map<int, SiteBlocks> overrides, bool substochastic, int copies = 1,
             const Tolerances& tol = default_tolerances)
        : topology_(topology),
          dim_(dim),
          mode_(mode),
          copies_(copies),
          homogeneous_(std::move(homogeneous)),
          overrides_(std::move(overrides)),
          declared_substochastic_(substochastic),
          tol_(tol) {
        if (dim_ < 1) throw SchemaError("internal dimension must be positive");
        if (copies_ < 1) throw SchemaError("copies must be positive");
        if (mode_ == Representation::compact && dim_ != 2) throw SchemaError("compact mode requires dim = 2");
        block_dim_ = (mode_ == Representation::compact ? 3 : dim_ * dim_) * copies_;
        validate_blocks();
        compute_columns();
    }

    const Topology& topology() const { return topology_; }
    int dim() const { return dim_; }
    Representation mode() const { return mode_; }
    int copies() const { return copies_; }
    int block_dim() const { return block_dim_; }
    bool declared_substochastic() const { return declared_substochastic_; }
    const SiteBlocks& homogeneous() const { return homogeneous_; }
    const std::map<int, SiteBlocks>& overrides() const { return overrides_; }
    const std::vector<ColumnReport>& columns() const { return columns_; }
    const Tolerances& tolerances() const { return tol_; }

    /// Columns that lose trace although the model was not declared substochastic.
    std::vector<ColumnReport> undeclared_leaks() const {
        std::vector<ColumnReport> out;
        if (declared_substochastic_) return out;
        for (const auto& c : columns_)
            if (c.leaks) out.push_back(c);
        return out;
    }

    bool substochastic() const {
        return std::any_of(columns_.begin(), columns_.end(), [](const ColumnReport& c) { return c.leaks; });
    }

    bool trace_preserving() const {
        return std::none_of(columns_.begin(), columns_.end(), [](const ColumnReport& c) { return c.leaks || c.gains; });
    }

    /// Block stored for `site`, ignoring whether its target lies inside the topology.
    const Block* raw_block(BlockKind kind, int site) const {
        if (auto it = overrides_.find(site); it != overrides_.end()) {
            if (const auto* b = pick(it->second, kind)) return b;
        }
        return pick(homogeneous_, kind);
    }

    CMatrix raw(BlockKind kind, int site) const {
        const Block* b = raw_block(kind, site);
        return b ? b->matrix : CMatrix::Zero(block_dim_, block_dim_);
    }
    CMatrix A(int n) const { return raw(BlockKind::A, n); }
    CMatrix B(int n) const { return raw(BlockKind::B, n); }
    CMatrix C(int n) const { return raw(BlockKind::C, n); }

    /// Block that is part of the operator: source and target both inside the topology.
    const Block* active_block(BlockKind kind, int site) const {
        if (!topology_.contains(site)) return nullptr;
        const int target = site + (kind == BlockKind::A ? 1 : kind == BlockKind::C ? -1 : 0);
        if (!topology_.contains(target)) return nullptr;
        return raw_block(kind, site);
    }

    /// Smallest and largest overridden site, if any.
    std::optional<std::pair<int, int>> override_range() const {
        if (overrides_.empty()) return std::nullopt;
        return std::make_pair(overrides_.begin()->first, overrides_.rbegin()->first);
    }

    bool has_homogeneous_bulk() const { return homogeneous_.A || homogeneous_.B || homogeneous_.C; }

    /// True when every block carries Kraus effects.
    bool is_oqw() const {
        auto ok = [](const SiteBlocks& s) {
            return (!s.A || s.A->has_kraus()) && (!s.B || s.B->has_kraus()) && (!s.C || s.C->has_kraus());
        };
        if (!ok(homogeneous_)) return false;
        return std::all_of(overrides_.begin(), overrides_.end(), [&](const auto& kv) { return ok(kv.second); });
    }

    QmcModel with_topology(Topology t) const {
        return QmcModel(t, dim_, mode_, homogeneous_, overrides_, true, copies_, tol_);
    }

    CVector trace_functional() const { return qmc::trace_functional(dim_, mode_, copies_); }

private:
    static const Block* pick(const SiteBlocks& s, BlockKind kind) {
        const std::optional<Block>* b = kind == BlockKind::A ? &s.A : kind == BlockKind::B ? &s.B : &s.C;
        return b->has_value() ? &**b : nullptr;
    }

    void check_block(const std::optional<Block>& b, const std::string& where) const {
        if (!b) return;
        if (b->matrix.rows() != block_dim_ || b->matrix.cols() != block_dim_)
            throw SchemaError(where + ": block must be " + std::to_string(block_dim_) + "x" + std::to_string(block_dim_));
        if (!is_finite(b->matrix)) throw SchemaError(where + ": non-finite entries");
        if (mode_ == Representation::compact && b->matrix.imag().cwiseAbs().maxCoeff() > 1e-14)
            throw SchemaError(where + ": compact blocks must be real");
        for (const auto& k : b->kraus)
            if (k.rows() != dim_ || k.cols() != dim_) throw SchemaError(where + ": Kraus effect has wrong size");
    }

    void validate_blocks() const {
        check_block(homogeneous_.A, "homogeneous A");
        check_block(homogeneous_.B, "homogeneous B");
        check_block(homogeneous_.C, "homogeneous C");
        for (const auto& [site, s] : overrides_) {
            if (!topology_.contains(site)) throw SchemaError("override for site " + std::to_string(site) + " outside topology");
            const std::string w = "site " + std::to_string(site);
            check_block(s.A, w + " A");
            check_block(s.B, w + " B");
            check_block(s.C, w + " C");
        }
    }

    ColumnReport column(std::optional<int> site) const {
        CMatrix sum = CMatrix::Zero(block_dim_, block_dim_);
        if (site) {
            for (auto k : {BlockKind::A, BlockKind::B, BlockKind::C})
                if (const Block* b = active_block(k, *site)) sum += b->matrix;
        } else {
            for (auto k : {BlockKind::A, BlockKind::B, BlockKind::C})
                if (const Block* b = pick(homogeneous_, k)) sum += b->matrix;
        }
        ColumnReport r;
        r.site = site;
        const int base = block_dim_ / copies_;
        for (int in = 0; in < copies_; ++in) {
            // Total output trace as a functional of one input copy.
            CMatrix sub = CMatrix::Zero(base, base);
            for (int out = 0; out < copies_; ++out) sub += sum.block(out * base, in * base, base, base);
            const CMatrix e = dual_identity(sub, dim_, mode_) - identity(dim_);
            Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (e + e.adjoint()), Eigen::EigenvaluesOnly);
            const double lo = es.eigenvalues().minCoeff();
            const double hi = es.eigenvalues().maxCoeff();
            r.defect = std::max({r.defect, std::abs(lo), std::abs(hi)});
            r.leaks = r.leaks || lo < -tol_.tp;
            r.gains = r.gains || hi > tol_.tp;
        }
        return r;
    }

    void compute_columns() {
        std::set<int> sites;
        if (topology_.finite()) {
            for (int n = 0; n < topology_.num_sites(); ++n) sites.insert(n);
        } else {
            if (topology_.kind() == TopologyKind::half_line) sites.insert(0);
            if (auto r = override_range()) {
                for (int n = r->first - 1; n <= r->second + 1; ++n)
                    if (topology_.contains(n)) sites.insert(n);
            }
            if (has_homogeneous_bulk()) columns_.push_back(column(std::nullopt));
        }
        for (int n : sites) columns_.push_back(column(n));
    }

    Topology topology_;
    int dim_;
    Representation mode_;
    int copies_;
    int block_dim_ = 0;
    SiteBlocks homogeneous_;
    std::map<int, SiteBlocks> overrides_;
    bool declared_substochastic_;
    Tolerances tol_;
    std::vector<ColumnReport> columns_;
};

/// Homogeneous model from three blocks, with optional per-site overrides.
inline QmcModel make_homogeneous(Topology t, int dim, Representation mode, std::optional<Block> a,
                                 std::optional<Block> b, std::optional<Block> c, bool substochastic = false,
                                 std::map<int, SiteBlocks> overrides = {}) {
    SiteBlocks h{std::move(a), std::move(b), std::move(c)};
    return QmcModel(t, dim, mode, std::move(h), std::move(overrides), substochastic);
}

/// Inclusive range of sites.
struct Window {
    int lo = 0;
    int hi = 0;
    int size() const { return hi - lo + 1; }
    bool contains(int s) const { return s >= lo && s <= hi; }
};

inline constexpr int default_window_radius = 64;

/// Window covering `sites` plus a margin of `radius`, clipped to the topology.
inline Window window_around(const QmcModel& m, std::initializer_list<int> sites, int radius) {
    int lo = *std::min_element(sites.begin(), sites.end()) - radius;
    int hi = *std::max_element(sites.begin(), sites.end()) + radius;
    if (auto l = m.topology().lowest()) lo = std::max(lo, *l);
    if (auto h = m.topology().highest()) hi = std::min(hi, *h);
    if (lo > hi) throw SchemaError("window is empty");
    return {lo, hi};
}

inline Window full_or_window(const QmcModel& m, std::initializer_list<int> sites, std::optional<int> radius) {
    if (m.topology().finite() && !radius) return {0, m.topology().num_sites() - 1};
    return window_around(m, sites, radius.value_or(default_window_radius));
}

/// Dense block matrix of the operator restricted to a window (absorbing outside).
struct TruncatedOperator {
    Window window;
    int block_dim = 0;
    CMatrix matrix;

    Eigen::Index offset(int site) const {
        if (!window.contains(site)) throw SchemaError("site " + std::to_string(site) + " is outside the window");
        return static_cast<Eigen::Index>(site - window.lo) * block_dim;
    }
    auto block(int i, int j) const { return matrix.block(offset(i), offset(j), block_dim, block_dim); }
};

inline TruncatedOperator truncate(const QmcModel& m, int lo, int hi) {
    if (lo > hi) throw SchemaError("truncate: empty window");
    if (!m.topology().contains(lo) || !m.topology().contains(hi))
        throw SchemaError("truncate: window [" + std::to_string(lo) + ", " + std::to_string(hi) + "] leaves the topology");
    TruncatedOperator t;
    t.window = {lo, hi};
    t.block_dim = m.block_dim();
    const int d = t.block_dim;
    t.matrix = CMatrix::Zero(static_cast<Eigen::Index>(t.window.size()) * d, static_cast<Eigen::Index>(t.window.size()) * d);
    for (int n = lo; n <= hi; ++n) {
        if (const Block* b = m.active_block(BlockKind::B, n)) t.matrix.block(t.offset(n), t.offset(n), d, d) = b->matrix;
        if (n < hi)
            if (const Block* a = m.active_block(BlockKind::A, n)) t.matrix.block(t.offset(n + 1), t.offset(n), d, d) = a->matrix;
        if (n > lo)
            if (const Block* c = m.active_block(BlockKind::C, n)) t.matrix.block(t.offset(n - 1), t.offset(n), d, d) = c->matrix;
    }
    return t;
}

inline TruncatedOperator truncate(const QmcModel& m, Window w) { return truncate(m, w.lo, w.hi); }

/// Apply the operator once to a site-indexed table of blocks (vectors or block columns).
template <typename Blockish>
std::map<int, Blockish> step(const QmcModel& m, const std::map<int, Blockish>& in) {
    std::map<int, Blockish> out;
    auto add = [&](int site, Blockish v) {
        auto it = out.find(site);
        if (it == out.end()) out.emplace(site, std::move(v));
        else it->second += v;
    };
    for (const auto& [site, v] : in) {
        if (const Block* b = m.active_block(BlockKind::B, site)) add(site, b->matrix * v);
        if (const Block* a = m.active_block(BlockKind::A, site)) add(site + 1, a->matrix * v);
        if (const Block* c = m.active_block(BlockKind::C, site)) add(site - 1, c->matrix * v);
    }
    return out;
}

template <typename Blockish>
std::map<int, Blockish> propagate(const QmcModel& m, std::map<int, Blockish> state, int steps) {
    if (steps < 0) throw SchemaError("number of steps must be non-negative");
    for (int k = 0; k < steps; ++k) state = step(m, state);
    return state;
}

/// Site-indexed state; each site holds the encoded (vec or compact) block.
class LatticeState {
public:
    LatticeState(const QmcModel& m, std::map<int, CVector> blocks)
        : trace_(m.trace_functional()),
          mode_(m.mode()),
          base_(m.block_dim() / m.copies()),
          blocks_(std::move(blocks)) {}

    static LatticeState point(const QmcModel& m, int site, const Density& rho, int copy = 0) {
        if (!m.topology().contains(site)) throw SchemaError("site " + std::to_string(site) + " outside topology");
        if (rho.dim() != m.dim()) throw SchemaError("density dimension does not match the model");
        if (copy < 0 || copy >= m.copies()) throw SchemaError("invalid copy index");
        const CVector e = encode(rho.matrix(), m.mode());
        CVector v = CVector::Zero(m.block_dim());
        v.segment(copy * e.size(), e.size()) = e;
        return LatticeState(m, {{site, v}});
    }

    const std::map<int, CVector>& blocks() const { return blocks_; }

    double trace_at(int site) const {
        auto it = blocks_.find(site);
        return it == blocks_.end() ? 0.0 : trace_.dot(it->second).real();
    }

    double total_trace() const {
        double t = 0.0;
        for (const auto& [s, v] : blocks_) t += trace_.dot(v).real();
        return t;
    }

    /// Density-shaped block at a site, for copy `copy` of a folded model.
    CMatrix matrix_at(int site, int copy = 0) const {
        auto it = blocks_.find(site);
        if (it == blocks_.end()) return decode(CVector::Zero(base_), mode_);
        return decode(it->second.segment(copy * base_, base_), mode_);
    }

private:
    CVector trace_;
    Representation mode_;
    Eigen::Index base_;
    std::map<int, CVector> blocks_;
};

inline LatticeState evolve(const QmcModel& m, const LatticeState& s, int steps) {
    return LatticeState(m, propagate(m, s.blocks(), steps));
}

/// Probability of finding the walker at `target` after n steps from rho at `source`.
inline double site_prob(const QmcModel& m, int source, int target, const Density& rho, int n) {
    if (!m.topology().contains(target)) throw SchemaError("site " + std::to_string(target) + " outside topology");
    return evolve(m, LatticeState::point(m, source, rho), n).trace_at(target);
}

/// Block (target, source) of the n-th power of the operator.
inline CMatrix power_block(const QmcModel& m, int target, int source, int n) {
    if (!m.topology().contains(source) || !m.topology().contains(target)) throw SchemaError("site outside topology");
    std::map<int, CMatrix> col{{source, identity(m.block_dim())}};
    auto out = propagate(m, std::move(col), n);
    auto it = out.find(target);
    return it == out.end() ? CMatrix::Zero(m.block_dim(), m.block_dim()) : it->second;
}

/// Block (target, source) of (I - s Phi)^{-1} on a truncation.
inline CMatrix resolvent_block(const QmcModel& m, int target, int source, Complex s,
                               std::optional<int> radius = std::nullopt) {
    const TruncatedOperator t = truncate(m, full_or_window(m, {target, source}, radius));
    const auto n = t.matrix.rows();
    const int d = t.block_dim;
    Eigen::PartialPivLU<CMatrix> lu(CMatrix::Identity(n, n) - s * t.matrix);
    const double rc = lu.rcond();
    if (!(rc > 1e-14))
        throw NumericalError("resolvent: I - s Phi is singular (condition estimate " + std::to_string(1.0 / rc) + ")");
    CMatrix rhs = CMatrix::Zero(n, d);
    rhs.block(t.offset(source), 0, d, d) = identity(d);
    const CMatrix x = lu.solve(rhs);
    return x.block(t.offset(target), 0, d, d);
}

}  // namespace qmc
