// oracles.hpp — independent reference implementations used only by tests.
// Everything here is deliberately written by a different route than the
// library code it checks: brute-force Taylor series, closed-form special
// functions, finite differences, and 2x2 analytics.

#pragma once

#include <cmath>
#include <complex>
#include <functional>

#include <Eigen/Dense>

namespace oracles {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;

// Poisson pmf e^{-nbar} nbar^n / n!, evaluated in log space.
inline double poisson_pmf(double nbar, int n) {
    if (nbar == 0.0) return n == 0 ? 1.0 : 0.0;
    double log_fact = 0.0;
    for (int k = 2; k <= n; ++k) log_fact += std::log(static_cast<double>(k));
    return std::exp(-nbar + n * std::log(nbar) - log_fact);
}

// Laguerre polynomial L_n(x) by the three-term recurrence.
inline double laguerre(int n, double x) {
    if (n == 0) return 1.0;
    double lm1 = 1.0, l = 1.0 - x;
    for (int k = 2; k <= n; ++k) {
        const double next = ((2.0 * k - 1.0 - x) * l - (k - 1.0) * lm1) / k;
        lm1 = l;
        l = next;
    }
    return l;
}

// Closed-form Wigner function of Fock |n>:
// W(alpha) = (2/pi) (-1)^n e^{-2|alpha|^2} L_n(4 |alpha|^2).
inline double fock_wigner(int n, Complex alpha) {
    const double a2 = std::norm(alpha);
    const double sign = (n % 2 == 0) ? 1.0 : -1.0;
    return (2.0 / M_PI) * sign * std::exp(-2.0 * a2) * laguerre(n, 4.0 * a2);
}

// Brute-force matrix exponential by Taylor series with scaling-and-squaring
// on the series itself (independent of the library's Padé/eigen routes).
inline Matrix expm_taylor(const Matrix& a) {
    const double norm = a.cwiseAbs().maxCoeff() * a.rows();
    int squarings = 0;
    while (norm / std::pow(2.0, squarings) > 0.5) ++squarings;
    const Matrix scaled = a / std::pow(2.0, squarings);
    Matrix term = Matrix::Identity(a.rows(), a.cols());
    Matrix sum = term;
    for (int k = 1; k <= 40; ++k) {
        term = term * scaled / static_cast<double>(k);
        sum += term;
        if (term.cwiseAbs().maxCoeff() < 1e-20) break;
    }
    for (int s = 0; s < squarings; ++s) sum = sum * sum;
    return sum;
}

// Central finite difference of a scalar function.
inline double central_difference(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

} // namespace oracles
