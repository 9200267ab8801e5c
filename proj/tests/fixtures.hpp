#pragma once

// Example chains shared by the unit tests and the acceptance runner.

#include "qmc/qmc.hpp"

#include <cmath>
#include <random>

namespace fixtures {

using qmc::Block;
using qmc::block_from_kraus;
using qmc::CMatrix;
using qmc::Complex;
using qmc::QmcModel;
using qmc::Representation;
using qmc::SiteBlocks;
using qmc::Topology;

inline CMatrix mat2(Complex a, Complex b, Complex c, Complex d) {
    CMatrix m(2, 2);
    m << a, b, c, d;
    return m;
}

inline CMatrix mat3(std::initializer_list<double> v) {
    CMatrix m(3, 3);
    auto it = v.begin();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) m(i, j) = *it++;
    return m;
}

inline CMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const auto n = static_cast<Eigen::Index>(rows.size());
    CMatrix m(n, static_cast<Eigen::Index>(rows.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& r : rows) {
        Eigen::Index j = 0;
        for (double x : r) m(i, j++) = x;
        ++i;
    }
    return m;
}

inline Block kraus(std::initializer_list<CMatrix> effects, Representation rep = Representation::full) {
    return block_from_kraus(std::vector<CMatrix>(effects), rep);
}

inline CMatrix scaled_identity(double c) { return c * qmc::identity(2); }

// Three-site walk with absorbing ends.
inline CMatrix absorbing_A() { return 0.5 * mat2(-1, 0, 1, std::sqrt(2.0)); }
inline CMatrix absorbing_C() { return 0.5 * mat2(1, -std::sqrt(2.0), -1, 0); }

inline QmcModel absorbing_three_site() {
    return qmc::make_homogeneous(Topology::segment(3), 2, Representation::full, kraus({absorbing_A()}), std::nullopt,
                                 kraus({absorbing_C()}), true);
}

// Half-line whose first passage 0 -> 1 only sees the site-0 blocks.
inline QmcModel passage_half_line(double gamma) {
    const double k = 2.0 + 2.0 * gamma * gamma;
    const double s2 = std::sqrt(2.0);
    const CMatrix b0 = mat2(-1, s2 * gamma, 0, 1) / std::sqrt(k);
    const CMatrix a0 = mat2(s2 * gamma, 1, 1, 0) / std::sqrt(k);
    std::map<int, SiteBlocks> ov;
    ov[0] = SiteBlocks{kraus({a0}), kraus({b0}), std::nullopt};
    return qmc::make_homogeneous(Topology::half_line(), 2, Representation::full, kraus({scaled_identity(std::sqrt(0.5))}),
                                 std::nullopt, kraus({scaled_identity(std::sqrt(0.5))}), false, ov);
}

// Internal coin V1, V2 with tr(sigma(X)) = s tr(X).
inline std::vector<CMatrix> lazy_coin(double s, double a, double b) {
    return {std::sqrt(s) * mat2(a, b, b, -a), std::sqrt(s * (1 - a * a - b * b)) * qmc::identity(2)};
}

inline QmcModel lazy_chain(Topology topo, double r, double s, double t, double a, double b, bool substochastic) {
    const auto coin = lazy_coin(s, a, b);
    return qmc::make_homogeneous(topo, 2, Representation::full, kraus({scaled_identity(std::sqrt(t))}),
                                 block_from_kraus(coin, Representation::full), kraus({scaled_identity(std::sqrt(r))}),
                                 substochastic);
}

/// Finite segment with N + 1 sites, forward rate t and backward rate r.
inline QmcModel lazy_segment(int n, double r, double s, double t, double a, double b) {
    return lazy_chain(Topology::segment(n + 1), r, s, t, a, b, true);
}

inline QmcModel lazy_half_line(double r, double s, double t, double a, double b) {
    return lazy_chain(Topology::half_line(), r, s, t, a, b, true);
}

inline QmcModel lazy_line(double r, double s, double t, double a, double b) {
    return lazy_chain(Topology::line(), r, s, t, a, b, false);
}

/// The two rank-one weights of the lazy coin.
inline CMatrix lazy_weight_1(double a, double b) {
    const double a2 = a * a, b2 = b * b, ab = a * b;
    return from_rows({{2 * a2 + b2, ab, ab, b2}, {ab, b2, b2, -ab}, {ab, b2, b2, -ab}, {b2, -ab, -ab, 2 * a2 + b2}}) /
           (2 * (a2 + b2));
}

inline CMatrix lazy_weight_2(double a, double b) {
    const double a2 = a * a, b2 = b * b, ab = a * b;
    return from_rows({{b2, -ab, -ab, -b2}, {-ab, b2 + 2 * a2, -b2, ab}, {-ab, -b2, b2 + 2 * a2, ab}, {-b2, ab, ab, b2}}) /
           (2 * (a2 + b2));
}

// Compact half-line with commuting A and C.
inline std::vector<CMatrix> flip_right(double q) {
    return {std::sqrt(q / 2) * mat2(1, 0, 0, -1), std::sqrt((1 - q) / 2) * mat2(0, 1, 1, 0)};
}
inline std::vector<CMatrix> flip_left(double p) {
    return {std::sqrt(p / 2) * qmc::identity(2), std::sqrt((1 - p) / 2) * mat2(0, 1, 1, 0)};
}

inline QmcModel flip_half_line(double p, double q) {
    return qmc::make_homogeneous(Topology::half_line(), 2, Representation::compact,
                                 block_from_kraus(flip_right(q), Representation::compact), std::nullopt,
                                 block_from_kraus(flip_left(p), Representation::compact), true);
}

/// Same chain with B = A at the origin.
inline QmcModel flip_half_line_corner(double p, double q) {
    std::map<int, SiteBlocks> ov;
    ov[0] = SiteBlocks{std::nullopt, block_from_kraus(flip_right(q), Representation::compact), std::nullopt};
    return qmc::make_homogeneous(Topology::half_line(), 2, Representation::compact,
                                 block_from_kraus(flip_right(q), Representation::compact), std::nullopt,
                                 block_from_kraus(flip_left(p), Representation::compact), false, ov);
}

inline CMatrix flip_basis() {
    return mat3({1, 0, -1, 0, std::sqrt(2.0), 0, 1, 0, 1}) / std::sqrt(2.0);
}

/// Closed form of the transform of flip_half_line.
inline CMatrix flip_transform(double p, double q, Complex z) {
    const double a2 = 1 - 2 * q, a3 = (1 - 2 * p) * (1 - 2 * q);
    auto root = [&](double a) {
        // Branch with root ~ z at infinity.
        Complex w = std::sqrt(z * z - a);
        if ((w / z).real() < 0) w = -w;
        return w;
    };
    CMatrix d = CMatrix::Zero(3, 3);
    d(0, 0) = z - root(1.0);
    d(1, 1) = (z - root(a2)) / a2;
    d(2, 2) = (z - root(a3)) / a3;
    const CMatrix u = flip_basis();
    return 2.0 * u * d * u.adjoint();
}

// Diagonal line walk with R, L.
inline CMatrix diag_R() { return mat2(1 / std::sqrt(3.0), 0, 0, 1 / std::sqrt(2.0)); }
inline CMatrix diag_L() { return mat2(std::sqrt(2.0) / std::sqrt(3.0), 0, 0, 1 / std::sqrt(2.0)); }

inline QmcModel diagonal_line() {
    return qmc::make_homogeneous(Topology::line(), 2, Representation::full, kraus({diag_R()}), std::nullopt,
                                 kraus({diag_L()}));
}

// Non-symmetrizable shear walk on three sites.
inline CMatrix shear_A() { return mat2(1, 1, 0, 1) / std::sqrt(3.0); }
inline CMatrix shear_C() { return mat2(1, 0, -1, 1) / std::sqrt(3.0); }

inline QmcModel shear_segment(int sites = 3) {
    return qmc::make_homogeneous(Topology::segment(sites), 2, Representation::full, kraus({shear_A()}), std::nullopt,
                                 kraus({shear_C()}), true);
}

// Five-site compact chain with two-effect blocks.
inline QmcModel double_effect_segment(int sites = 5) {
    const double c = 1 / std::sqrt(5.0);
    const auto rep = Representation::compact;
    const Block b = kraus({c * mat2(0, 0, 0, 1)}, rep);
    const Block cc = kraus({c * mat2(1, 0, 0, 1), c * mat2(0, 0, 0, 1)}, rep);
    const Block a = kraus({c * mat2(1, 0, -1, 1), c * mat2(1, 0, 1, 1)}, rep);
    return qmc::make_homogeneous(Topology::segment(sites), 2, rep, a, b, cc, true);
}

// Compact shear chain on the half-line and on the line.
inline std::vector<CMatrix> shear_right() {
    const double s3 = std::sqrt(3.0), c = 1 / std::sqrt(7.0);
    return {c * mat2(1, 0, -1, s3), c * mat2(1, 0, 1, s3)};
}
inline std::vector<CMatrix> shear_left() { return {mat2(std::sqrt(3.0), 0, 0, 1) / std::sqrt(7.0)}; }

inline QmcModel shear_half_line() {
    const auto rep = Representation::compact;
    return qmc::make_homogeneous(Topology::half_line(), 2, rep, block_from_kraus(shear_right(), rep), std::nullopt,
                                 block_from_kraus(shear_left(), rep), true);
}

/// The same chain with the left block also acting in place at the origin.
inline QmcModel shear_half_line_corner() {
    const auto rep = Representation::compact;
    std::map<int, SiteBlocks> ov;
    ov[0] = SiteBlocks{std::nullopt, block_from_kraus(shear_left(), rep), std::nullopt};
    return qmc::make_homogeneous(Topology::half_line(), 2, rep, block_from_kraus(shear_right(), rep), std::nullopt,
                                 block_from_kraus(shear_left(), rep), false, ov);
}

inline QmcModel shear_line() {
    const auto rep = Representation::compact;
    return qmc::make_homogeneous(Topology::line(), 2, rep, block_from_kraus(shear_right(), rep), std::nullopt,
                                 block_from_kraus(shear_left(), rep));
}

inline qmc::Density qubit(double a, Complex b) { return qmc::Density::qubit(a, b); }

/// Random valid qubit density.
inline qmc::Density random_density(std::mt19937_64& rng, int dim = 2) {
    std::normal_distribution<double> g;
    CMatrix x(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) x(i, j) = Complex(g(rng), g(rng));
    CMatrix rho = x * x.adjoint();
    rho /= rho.trace().real();
    rho = 0.5 * (rho + rho.adjoint());
    return qmc::Density(rho);
}

/// Random qubit density with real entries (compact mode).
inline qmc::Density random_real_density(std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    CMatrix x(2, 2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) x(i, j) = g(rng);
    CMatrix rho = x * x.transpose();
    rho /= rho.trace().real();
    return qmc::Density(rho);
}

inline CMatrix random_matrix(std::mt19937_64& rng, int n, bool real = false) {
    std::normal_distribution<double> g;
    CMatrix m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = real ? Complex(g(rng), 0.0) : Complex(g(rng), g(rng));
    return m;
}

/// Random positive definite matrix with spectrum in [0.5, 2].
inline CMatrix random_positive(std::mt19937_64& rng, int n) {
    const CMatrix q = Eigen::HouseholderQR<CMatrix>(random_matrix(rng, n)).householderQ();
    std::uniform_real_distribution<double> u(0.5, 2.0);
    qmc::CVector d(n);
    for (int i = 0; i < n; ++i) d(i) = u(rng);
    return q * d.asDiagonal() * q.adjoint();
}

/// Random segment whose operator is self-adjoint for site weights Pi_n, with Pi_0 = I:
/// C_{n+1} = Pi_n^{-1} A_n^* Pi_{n+1} and B_n = Pi_n^{-1} H_n with H_n Hermitian.
inline QmcModel random_symmetrizable_segment(std::mt19937_64& rng, int sites, int dim = 2) {
    const int d = dim * dim;
    std::vector<CMatrix> pi{qmc::identity(d)};
    for (int n = 1; n < sites; ++n) pi.push_back(random_positive(rng, d));
    const double scale = 0.35 / std::sqrt(double(d));
    std::map<int, SiteBlocks> ov;
    std::vector<CMatrix> a(static_cast<std::size_t>(sites));
    for (int n = 0; n < sites; ++n) {
        const CMatrix h = random_matrix(rng, d);
        const CMatrix herm = scale * 0.5 * (h + h.adjoint());
        ov[n].B = qmc::block_from_matrix(pi[static_cast<std::size_t>(n)].inverse() * herm);
        if (n + 1 < sites) {
            const CMatrix v = Eigen::HouseholderQR<CMatrix>(random_matrix(rng, d)).householderQ();
            a[static_cast<std::size_t>(n)] = scale * random_positive(rng, d) * v;  // singular values in [0.5, 2] * scale
            ov[n].A = qmc::block_from_matrix(a[static_cast<std::size_t>(n)]);
        }
        if (n > 0)
            ov[n].C = qmc::block_from_matrix(pi[static_cast<std::size_t>(n - 1)].inverse() * a[static_cast<std::size_t>(n - 1)].adjoint() *
                                             pi[static_cast<std::size_t>(n)]);
    }
    return QmcModel(Topology::segment(sites), dim, Representation::full, SiteBlocks{}, ov, true);
}

}  // namespace fixtures
