#include "lapdual/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace lapdual {

namespace {

QuadratureRule build_rule(int n) {
    QuadratureRule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        // Newton on P_n from the Chebyshev-like initial guess
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
            }
            dp = n * (z * p1 - p2) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::fabs(dz) < 1e-16) break;
        }
        // recompute derivative at the converged root
        double p1 = 1.0, p2 = 0.0;
        for (int j = 1; j <= n; ++j) {
            const double p3 = p2;
            p2 = p1;
            p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
        }
        dp = n * (z * p1 - p2) / (z * z - 1.0);
        const double w = 2.0 / ((1.0 - z * z) * dp * dp);
        // map [-1,1] -> [0,1]
        r.nodes[i] = 0.5 * (1.0 - z);
        r.nodes[n - 1 - i] = 0.5 * (1.0 + z);
        r.weights[i] = 0.5 * w;
        r.weights[n - 1 - i] = 0.5 * w;
    }
    return r;
}

}  // namespace

const QuadratureRule& gauss_legendre01(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre01: need at least one node");
    static std::mutex mu;
    static std::map<int, QuadratureRule> cache;
    std::lock_guard lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, build_rule(n)).first;
    return it->second;
}

}  // namespace lapdual
