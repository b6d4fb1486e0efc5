#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

namespace oracle {

// exp(t S) u for symmetric S via cyclic Jacobi eigendecomposition.
inline std::vector<double> symmetric_expm_apply(std::vector<std::vector<double>> S, double t,
                                                const std::vector<double>& u) {
    const std::size_t n = S.size();
    std::vector<std::vector<double>> V(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) V[i][i] = 1.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += S[p][q] * S[p][q];
        if (off < 1e-30) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(S[p][q]) < 1e-300) continue;
                const double theta = (S[q][q] - S[p][p]) / (2.0 * S[p][q]);
                const double tt = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(tt * tt + 1.0), s = tt * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double skp = S[k][p], skq = S[k][q];
                    S[k][p] = c * skp - s * skq;
                    S[k][q] = s * skp + c * skq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double spk = S[p][k], sqk = S[q][k];
                    S[p][k] = c * spk - s * sqk;
                    S[q][k] = s * spk + c * sqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = V[k][p], vkq = V[k][q];
                    V[k][p] = c * vkp - s * vkq;
                    V[k][q] = s * vkp + c * vkq;
                }
            }
    }
    // u(t) = V diag(e^{t lambda}) V^T u
    std::vector<double> coeff(n, 0.0), out(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < n; ++i) coeff[k] += V[i][k] * u[i];
        coeff[k] *= std::exp(t * S[k][k]);
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k) out[i] += V[i][k] * coeff[k];
    return out;
}

}  // namespace oracle
