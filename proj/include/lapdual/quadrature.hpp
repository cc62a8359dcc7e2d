#pragma once

#include <vector>

namespace lapdual {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [0, 1]. Rules are cached per n.
const QuadratureRule& gauss_legendre01(int n);

}  // namespace lapdual
