#pragma once

#include <cmath>
#include <optional>

#include "cwhyst/errors.hpp"
#include "cwhyst/rootfind.hpp"

namespace cwhyst {

// Static mean-field theory of the Curie-Weiss magnet: model parameters with
// their derived critical constants, the free energy, the equilibrium
// branches, the macroscopic drift and the critical-window scaling constants.

struct ModelParams {
    double beta;  // inverse temperature, > 1
    double m_c;   // critical magnetization, root of beta*(1 - m^2) = 1 in (0,1)
    double h_c;   // coercive field
    double mu;    // time-scaling coefficient of the critical window
    double nu;    // space-scaling coefficient of the critical window
    double xi;    // variance rate of the limit-SDE noise, (2/beta)*mu*nu^2

    // Amplitude multiplying the Brownian increments of the limit SDE. The
    // rescaled chain martingale has quadratic variation xi*(T + t), so the
    // driving noise is sqrt(xi) dw.
    double sde_noise() const { return std::sqrt(xi); }
};

inline double artanh_checked(double m) {
    if (!(std::abs(m) <= 1.0 - 1e-15))
        throw DomainError("artanh: |m| too close to 1");
    return std::atanh(m);
}

inline ModelParams make_params(double beta) {
    if (!(beta > 1.0)) throw DomainError("make_params: beta must be > 1");
    ModelParams p;
    p.beta = beta;
    // Inflection condition beta*(1 - m^2) = 1 and stationarity
    // m = tanh(beta*(m - h_c)) pin the tangency point of the upper branch.
    const long double b = beta;
    const long double mc = std::sqrt(1.0L - 1.0L / b);
    const long double hc = mc - std::atanh(mc) / b;
    const long double mu = std::pow(2.0L / (b * hc * mc), 0.25L);
    const long double nu = std::pow(b * mc, 0.75L) * std::pow(2.0L / hc, 0.25L);
    p.m_c = static_cast<double>(mc);
    p.h_c = static_cast<double>(hc);
    p.mu = static_cast<double>(mu);
    p.nu = static_cast<double>(nu);
    p.xi = static_cast<double>((2.0L / b) * mu * nu * nu);
    return p;
}

// Binary entropy S(m) = -((1-m)/2) log((1-m)/2) - ((1+m)/2) log((1+m)/2).
inline double entropy(double m) {
    if (!(std::abs(m) < 1.0)) throw DomainError("entropy: |m| must be < 1");
    const double a = 0.5 * (1.0 - m);
    const double c = 0.5 * (1.0 + m);
    const double ta = (a > 0.0) ? -a * std::log(a) : 0.0;
    const double tc = (c > 0.0) ? -c * std::log(c) : 0.0;
    return ta + tc;
}

inline double free_energy(const ModelParams& p, double h, double m) {
    if (!(std::abs(m) < 1.0)) throw DomainError("free_energy: |m| must be < 1");
    return -0.5 * m * m - h * m - entropy(m) / p.beta;
}

// Macroscopic drift F(m,h) = -m + tanh(beta*(m+h)).
inline double drift_F(const ModelParams& p, double m, double h) {
    return -m + std::tanh(p.beta * (m + h));
}

// Lambda(m,h) = 1 - m*tanh(beta*(m+h)); equals 1/beta at (m_c, -h_c).
inline double lambda_factor(const ModelParams& p, double m, double h) {
    return 1.0 - m * std::tanh(p.beta * (m + h));
}

struct BranchSet {
    std::optional<double> m_minus;
    std::optional<double> m_zero;
    std::optional<double> m_plus;
    // Set when |h| == h_c within the tangency tolerance: the collapsing pair
    // is reported once, through the branch that survives the limit.
    bool degenerate = false;

    int count() const {
        return int(m_minus.has_value()) + int(m_zero.has_value()) + int(m_plus.has_value());
    }
};

// All real roots of m = tanh(beta*(m+h)) in [-1,1], ordered. The derivative
// of m - tanh(beta*(m+h)) changes sign exactly where tanh(beta*(m+h)) = +-m_c,
// which splits [-1,1] into at most three monotone pieces.
inline BranchSet branches(const ModelParams& p, double h) {
    auto g = [&](double m) { return m - std::tanh(p.beta * (m + h)); };
    auto dg = [&](double m) {
        const double t = std::tanh(p.beta * (m + h));
        return 1.0 - p.beta * (1.0 - t * t);
    };

    const double a = std::atanh(p.m_c) / p.beta;  // = m_c - h_c
    const double b_lo = -a - h;                   // monotonicity breakpoints
    const double b_hi = a - h;

    constexpr double kTangencyTol = 1e-9;
    BranchSet out;

    double pts[4];
    int n = 0;
    pts[n++] = -1.0;
    if (b_lo > -1.0 && b_lo < 1.0) pts[n++] = b_lo;
    if (b_hi > -1.0 && b_hi < 1.0 && b_hi > b_lo) pts[n++] = b_hi;
    pts[n++] = 1.0;

    double roots[3];
    int nroots = 0;
    for (int i = 0; i + 1 < n; ++i) {
        const double lo = pts[i], hi = pts[i + 1];
        const double flo = g(lo), fhi = g(hi);
        double r;
        bool found = false;
        if (flo == 0.0) {
            r = lo;
            found = (nroots == 0 || std::abs(r - roots[nroots - 1]) > 1e-12);
        } else if (flo * fhi < 0.0) {
            r = find_root(g, dg, lo, hi, 1e-13);
            found = true;
        } else if (std::abs(fhi) <= kTangencyTol && i + 2 == n) {
            // tangency at the upper breakpoint (h == -h_c up to rounding)
            r = hi;
            found = false;  // handled by the endpoint scan below
        }
        if (found && nroots < 3) {
            if (nroots == 0 || std::abs(r - roots[nroots - 1]) > 1e-10) roots[nroots++] = r;
        }
    }
    // Tangency roots sit exactly at a breakpoint where g doesn't change sign.
    for (int i = 1; i + 1 < n; ++i) {
        if (std::abs(g(pts[i])) <= kTangencyTol) {
            bool dup = false;
            for (int j = 0; j < nroots; ++j)
                if (std::abs(pts[i] - roots[j]) < 1e-8) dup = true;
            if (!dup && nroots < 3) {
                roots[nroots++] = pts[i];
                out.degenerate = true;
            }
        }
    }
    // keep sorted
    for (int i = 1; i < nroots; ++i)
        for (int j = i; j > 0 && roots[j] < roots[j - 1]; --j) std::swap(roots[j], roots[j - 1]);

    // |h| within a few ulps of h_c leaves a root pair separated by
    // O(sqrt(||h| - h_c|)); collapse it to the tangent double root, placed at
    // the g'-vertex (a monotonicity breakpoint) between the pair.
    constexpr double kMergeTol = 1e-5;
    for (int i = 0; i + 1 < nroots; ++i) {
        if (roots[i + 1] - roots[i] < kMergeTol) {
            double merged = 0.5 * (roots[i] + roots[i + 1]);
            for (double bp : {b_lo, b_hi})
                if (bp > roots[i] - kMergeTol && bp < roots[i + 1] + kMergeTol) merged = bp;
            roots[i] = merged;
            for (int j = i + 1; j + 1 < nroots; ++j) roots[j] = roots[j + 1];
            --nroots;
            out.degenerate = true;
            break;
        }
    }

    if (nroots == 3) {
        out.m_minus = roots[0];
        out.m_zero = roots[1];
        out.m_plus = roots[2];
    } else if (nroots == 2) {
        // tangency at |h| = h_c: the merged pair is reported once, through
        // the branch that continues past the coercive field
        out.m_minus = roots[0];
        out.m_plus = roots[1];
        out.degenerate = true;
    } else if (nroots == 1) {
        if (roots[0] >= 0.0)
            out.m_plus = roots[0];
        else
            out.m_minus = roots[0];
    } else {
        throw NumericalError("branches: no root found (should be impossible)");
    }
    return out;
}

// Oscillating field at the critical frequency scaling, h_N(t) = -h_c cos(N^{-2/3} t).
inline double oscillating_field(const ModelParams& p, long long N, double t) {
    if (N < 1) throw DomainError("oscillating_field: N must be >= 1");
    const double omega = std::pow(static_cast<double>(N), -2.0 / 3.0);
    return -p.h_c * std::cos(omega * t);
}

// Generalized frequency exponent: omega = N^{-kappa}.
inline double oscillating_field_kappa(const ModelParams& p, long long N, double kappa, double t) {
    if (N < 1) throw DomainError("oscillating_field_kappa: N must be >= 1");
    if (!(kappa > 0.0)) throw DomainError("oscillating_field_kappa: kappa must be > 0");
    const double omega = std::pow(static_cast<double>(N), -kappa);
    return -p.h_c * std::cos(omega * t);
}

}  // namespace cwhyst
