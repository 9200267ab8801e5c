// Builds the sample chains with the library API and writes them as model files.
// Usage: write_models OUTPUT_DIR

#include "qmc/io.hpp"
#include "qmc/qmc.hpp"

#include <cmath>
#include <filesystem>
#include <iostream>

using namespace qmc;

namespace {

CMatrix m2(Complex a, Complex b, Complex c, Complex d) {
    CMatrix m(2, 2);
    m << a, b, c, d;
    return m;
}

Block full(std::vector<CMatrix> k) { return block_from_kraus(std::move(k), Representation::full); }
Block compact(std::vector<CMatrix> k) { return block_from_kraus(std::move(k), Representation::compact); }

const double r2 = std::sqrt(2.0), r3 = std::sqrt(3.0);

QmcModel absorbing_walk() {
    return make_homogeneous(Topology::segment(3), 2, Representation::full, full({0.5 * m2(-1, 0, 1, r2)}), std::nullopt,
                            full({0.5 * m2(1, -r2, -1, 0)}), true);
}

/// Half-line whose site-0 blocks are mixed by gamma; bulk moves with probability 1/2 each way.
QmcModel passage_half_line(double gamma) {
    const double k = std::sqrt(2.0 + 2.0 * gamma * gamma);
    std::map<int, SiteBlocks> ov;
    ov[0] = SiteBlocks{full({m2(r2 * gamma, 1, 1, 0) / k}), full({m2(-1, r2 * gamma, 0, 1) / k}), std::nullopt};
    const Block half = full({std::sqrt(0.5) * identity(2)});
    return make_homogeneous(Topology::half_line(), 2, Representation::full, half, std::nullopt, half, false, ov);
}

QmcModel lazy(Topology topo, double r, double s, double t, double a, double b, bool sub) {
    const Block coin = full({std::sqrt(s) * m2(a, b, b, -a), std::sqrt(s * (1 - a * a - b * b)) * identity(2)});
    return make_homogeneous(topo, 2, Representation::full, full({std::sqrt(t) * identity(2)}), coin,
                            full({std::sqrt(r) * identity(2)}), sub);
}

std::vector<CMatrix> flip_right(double q) { return {std::sqrt(q / 2) * m2(1, 0, 0, -1), std::sqrt((1 - q) / 2) * m2(0, 1, 1, 0)}; }
std::vector<CMatrix> flip_left(double p) { return {std::sqrt(p / 2) * identity(2), std::sqrt((1 - p) / 2) * m2(0, 1, 1, 0)}; }

QmcModel flip(double p, double q, bool corner) {
    std::map<int, SiteBlocks> ov;
    if (corner) ov[0] = SiteBlocks{std::nullopt, compact(flip_right(q)), std::nullopt};
    return make_homogeneous(Topology::half_line(), 2, Representation::compact, compact(flip_right(q)), std::nullopt,
                            compact(flip_left(p)), !corner, ov);
}

QmcModel diagonal_line() {
    return make_homogeneous(Topology::line(), 2, Representation::full, full({m2(1 / r3, 0, 0, 1 / r2)}), std::nullopt,
                            full({m2(r2 / r3, 0, 0, 1 / r2)}));
}

QmcModel shear_segment(int sites) {
    return make_homogeneous(Topology::segment(sites), 2, Representation::full, full({m2(1, 1, 0, 1) / r3}), std::nullopt,
                            full({m2(1, 0, -1, 1) / r3}), true);
}

QmcModel double_effect_segment() {
    const double c = 1 / std::sqrt(5.0);
    return make_homogeneous(Topology::segment(5), 2, Representation::compact,
                            compact({c * m2(1, 0, -1, 1), c * m2(1, 0, 1, 1)}), compact({c * m2(0, 0, 0, 1)}),
                            compact({c * identity(2), c * m2(0, 0, 0, 1)}), true);
}

QmcModel shear_chain(Topology topo, bool corner) {
    const double c = 1 / std::sqrt(7.0);
    const Block right = compact({c * m2(1, 0, -1, r3), c * m2(1, 0, 1, r3)});
    const Block left = compact({c * m2(r3, 0, 0, 1)});
    std::map<int, SiteBlocks> ov;
    if (corner) ov[0] = SiteBlocks{std::nullopt, left, std::nullopt};
    return make_homogeneous(topo, 2, Representation::compact, right, std::nullopt, left,
                            topo.kind() == TopologyKind::half_line && !corner, ov);
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: write_models OUTPUT_DIR\n";
        return 1;
    }
    const std::filesystem::path dir(argv[1]);
    std::filesystem::create_directories(dir);
    const std::vector<std::pair<std::string, QmcModel>> models{
        {"absorbing_walk", absorbing_walk()},
        {"passage_half_line", passage_half_line(1.0)},
        {"lazy_segment", lazy(Topology::segment(5), 0.5, 0.5, 0.5, 0.5, 0.5, true)},
        {"lazy_half_line", lazy(Topology::half_line(), 0.2, 0.5, 0.3, 0.4, 0.3, true)},
        {"lazy_line", lazy(Topology::line(), 0.25, 0.5, 0.25, 0.6, 0.5, false)},
        {"flip_half_line", flip(0.3, 0.2, false)},
        {"flip_corner", flip(0.3, 0.2, true)},
        {"diagonal_line", diagonal_line()},
        {"shear_segment", shear_segment(3)},
        {"shear_segment_20", shear_segment(20)},
        {"double_effect_segment", double_effect_segment()},
        {"shear_half_line", shear_chain(Topology::half_line(), false)},
        {"shear_corner", shear_chain(Topology::half_line(), true)},
        {"shear_line", shear_chain(Topology::line(), false)},
    };
    for (const auto& [name, m] : models) write_json_file((dir / (name + ".json")).string(), model_to_json(m));
    const std::vector<std::pair<std::string, Density>> densities{
        {"rho_mixed", Density::maximally_mixed(2)},
        {"rho_up", Density::qubit(1, 0)},
        {"rho_down", Density::qubit(0, 0)},
        {"rho_sample", Density::qubit(0.3, 0.1)},
    };
    for (const auto& [name, rho] : densities) write_json_file((dir / (name + ".json")).string(), density_to_json(rho));
    std::cout << "wrote " << models.size() << " models and " << densities.size() << " densities to " << dir.string() << '\n';
}
