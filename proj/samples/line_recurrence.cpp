// Recurrence of a diagonal walk on the integers through the folded half-line transform.

#include "qmc/qmc.hpp"

#include <cmath>
#include <cstdio>

int main() {
    using namespace qmc;
    const CMatrix right = (CMatrix(2, 2) << 1 / std::sqrt(3.0), 0, 0, 1 / std::sqrt(2.0)).finished();
    const CMatrix left = (CMatrix(2, 2) << std::sqrt(2.0 / 3.0), 0, 0, 1 / std::sqrt(2.0)).finished();
    const QmcModel line = make_homogeneous(Topology::line(), 2, Representation::full,
                                           block_from_kraus({right}, Representation::full), std::nullopt,
                                           block_from_kraus({left}, Representation::full));

    struct Case {
        const char* name;
        Density rho;
    };
    for (const Case& c : {Case{"spin up", Density::qubit(1, 0)}, Case{"spin down", Density::qubit(0, 0)},
                          Case{"mixed", Density::maximally_mixed(2)}}) {
        const Classification cl = classify_recurrence_on_line(line, 0, c.rho);
        std::printf("%-10s %-10s", c.name, to_string(cl.verdict));
        if (cl.limit) std::printf(" expected visits %.9f", *cl.limit);
        std::printf("\n");
    }
}
