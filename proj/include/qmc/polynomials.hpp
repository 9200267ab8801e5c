#pragma once

#include "qmc/model.hpp"

#include <map>
#include <string>
#include <vector>

namespace qmc {

inline constexpr double poly_max_cond = 1e12;

/// Q_0..Q_{n_max} of the main family: Q_{-1} = 0, Q_0 = I,
/// x Q_n = Q_{n+1} A_n + Q_n B_n + Q_{n-1} C_n.
inline std::vector<CMatrix> eval_main(const QmcModel& m, Complex x, int n_max) {
    if (n_max < 0) throw SchemaError("n_max must be non-negative");
    const int d = m.block_dim();
    std::vector<CMatrix> q;
    q.reserve(static_cast<std::size_t>(n_max) + 1);
    q.push_back(identity(d));
    CMatrix prev = CMatrix::Zero(d, d);
    for (int n = 0; n < n_max; ++n) {
        const CMatrix rhs = x * q[n] - q[n] * m.B(n) - prev * m.C(n);
        prev = q[n];
        q.push_back(right_divide(rhs, m.A(n), "A_" + std::to_string(n), poly_max_cond));
    }
    return q;
}

/// k-th associated family: Q^{(k)}_n = 0 for n <= k, and
/// x Q^{(k)}_n = delta_{nk} I + Q^{(k)}_{n+1} A_n + Q^{(k)}_n B_n + Q^{(k)}_{n-1} C_n.
inline std::vector<CMatrix> eval_associated(const QmcModel& m, int k, Complex x, int n_max) {
    if (k < 0) throw SchemaError("associated index must be non-negative");
    if (n_max < 0) throw SchemaError("n_max must be non-negative");
    const int d = m.block_dim();
    std::vector<CMatrix> q(static_cast<std::size_t>(n_max) + 1, CMatrix::Zero(d, d));
    for (int n = k; n < n_max; ++n) {
        CMatrix rhs = x * q[n] - q[n] * m.B(n);
        if (n > 0) rhs -= q[n - 1] * m.C(n);
        if (n == k) rhs -= identity(d);
        q[n + 1] = right_divide(rhs, m.A(n), "A_" + std::to_string(n), poly_max_cond);
    }
    return q;
}

/// Two-sided family on the line, alpha = 1 (Q_0 = I, Q_{-1} = 0) or alpha = 2 (Q_0 = 0, Q_{-1} = I),
/// evaluated on n_lo..n_hi with n_lo <= -1 <= 0 <= n_hi.
inline std::map<int, CMatrix> eval_two_sided(const QmcModel& m, int alpha, Complex x, int n_lo, int n_hi) {
    if (m.topology().kind() != TopologyKind::line) throw SchemaError("two-sided polynomials need a line model");
    if (alpha != 1 && alpha != 2) throw SchemaError("alpha must be 1 or 2");
    if (n_lo > -1 || n_hi < 0) throw SchemaError("range must contain -1 and 0");
    const int d = m.block_dim();
    std::map<int, CMatrix> q;
    q[0] = alpha == 1 ? identity(d) : CMatrix::Zero(d, d);
    q[-1] = alpha == 1 ? CMatrix::Zero(d, d) : identity(d);
    for (int n = 0; n < n_hi; ++n) {
        const CMatrix rhs = x * q[n] - q[n] * m.B(n) - q[n - 1] * m.C(n);
        q[n + 1] = right_divide(rhs, m.A(n), "A_" + std::to_string(n) + " (forward)", poly_max_cond);
    }
    for (int n = -1; n > n_lo; --n) {
        const CMatrix rhs = x * q[n] - q[n] * m.B(n) - q[n + 1] * m.A(n);
        q[n - 1] = right_divide(rhs, m.C(n), "C_" + std::to_string(n) + " (backward)", poly_max_cond);
    }
    return q;
}

/// Folded family [[Q^1_n, Q^1_{-n-1}], [Q^2_n, Q^2_{-n-1}]] for n = 0..n_max.
inline std::vector<CMatrix> eval_folded(const QmcModel& m, Complex x, int n_max) {
    if (n_max < 0) throw SchemaError("n_max must be non-negative");
    const auto q1 = eval_two_sided(m, 1, x, -n_max - 1, n_max);
    const auto q2 = eval_two_sided(m, 2, x, -n_max - 1, n_max);
    const int d = m.block_dim();
    std::vector<CMatrix> out;
    for (int n = 0; n <= n_max; ++n) {
        CMatrix f(2 * d, 2 * d);
        f << q1.at(n), q1.at(-n - 1), q2.at(n), q2.at(-n - 1);
        out.push_back(std::move(f));
    }
    return out;
}

/// ||x Q_n - (Q_{n+1} A_n + Q_n B_n + Q_{n-1} C_n)|| for n = 0..size-2 of a main-family list.
inline double main_recurrence_residual(const QmcModel& m, Complex x, const std::vector<CMatrix>& q) {
    double worst = 0.0;
    for (std::size_t n = 0; n + 1 < q.size(); ++n) {
        const int i = static_cast<int>(n);
        CMatrix r = x * q[n] - q[n + 1] * m.A(i) - q[n] * m.B(i);
        if (n > 0) r -= q[n - 1] * m.C(i);
        worst = std::max(worst, r.norm());
    }
    return worst;
}

}  // namespace qmc
