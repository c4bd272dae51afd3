// One Hecke eigenform as ingested by the harness: spectral data, Hecke
// eigenvalues and the L-values that weight the variance sums.
#pragma once

#include "qvar/hecke_alg.hpp"

#include <optional>

namespace qvar {

struct EigenformRecord {
    enum class Kind { Maass, Holomorphic };
    Kind kind = Kind::Maass;
    double t = 0;   // Maass spectral parameter, eigenvalue 1/4 + t^2
    int k = 0;      // holomorphic weight
    int parity = 1; // Maass only: phi(-conj z) = parity * phi(z)
    HeckeEigenvalueMap hecke;
    double l_sym2 = 1.0;
    std::optional<double> l_half;

    double laplace_eigenvalue() const { return 0.25 + t * t; }
};

} // namespace qvar
