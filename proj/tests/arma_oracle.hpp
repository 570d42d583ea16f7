#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <vector>

namespace armaoracle {

// Exact log density of (d_0, ..., d_{n-1}, e_0) under the stationary ARMA(1,1) process
// d_t = phi d_{t-1} - theta e_{t-1} + e_t, built from the autocovariances. The stored
// parameterization (d_0, e_0, ..., e_{n-1}) maps to this vector with unit Jacobian.
inline double mvn_log_density(const std::vector<double>& d, double e0, double phi, double theta, double sigma) {
    const int n = static_cast<int>(d.size());
    const double s2 = sigma * sigma;
    std::vector<double> acov(static_cast<std::size_t>(n));
    acov[0] = (1 - 2 * phi * theta + theta * theta) / (1 - phi * phi) * s2;
    if (n > 1) acov[1] = s2 * (phi - theta) * (1 - phi * theta) / (1 - phi * phi);
    for (int k = 2; k < n; ++k) acov[static_cast<std::size_t>(k)] = phi * acov[static_cast<std::size_t>(k - 1)];
    // psi weights of the MA(infinity) form: psi_0 = 1, psi_k = phi^{k-1} (phi - theta)
    auto psi = [&](int k) { return k == 0 ? 1.0 : std::pow(phi, k - 1) * (phi - theta); };

    Eigen::MatrixXd cov(n + 1, n + 1);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) cov(i, j) = acov[static_cast<std::size_t>(std::abs(i - j))];
    for (int k = 0; k < n; ++k) {
        cov(k, n) = psi(k) * s2;
        cov(n, k) = cov(k, n);
    }
    cov(n, n) = s2;
    Eigen::VectorXd x(n + 1);
    for (int i = 0; i < n; ++i) x(i) = d[static_cast<std::size_t>(i)];
    x(n) = e0;
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    Eigen::VectorXd z = llt.matrixL().solve(x);
    double logdet = 0;
    for (int i = 0; i <= n; ++i) logdet += 2 * std::log(llt.matrixL()(i, i));
    return -0.5 * z.squaredNorm() - 0.5 * logdet - 0.5 * (n + 1) * std::log(2 * std::numbers::pi);
}


}  // namespace armaoracle
