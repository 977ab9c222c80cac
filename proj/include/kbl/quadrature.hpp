#pragma once

#include <vector>

namespace kbl {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
    int size() const { return static_cast<int>(nodes.size()); }
};

// Gauss-Hermite rule for weight exp(-x^2) on (-inf, inf).
QuadratureRule gauss_hermite(int n);

// Generalized Gauss-Laguerre rule for weight x^alpha exp(-x) on (0, inf).
QuadratureRule gauss_laguerre(int n, double alpha = 0.0);

} // namespace kbl
