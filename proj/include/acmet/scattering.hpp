#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "acmet/detail/polyfit.hpp"

namespace acmet::scatter {

inline constexpr double pi = 3.14159265358979323846;

// Normalization of the weak-scattering differential coefficient,
// D(phi) = n * k^4 * born_normalization * (beta + q cos(phi))^2, chosen so the
// monopole (q = 0) total integrates to k^4 beta^2 / (4 pi). Kept as a single
// named constant so an alternative convention is a one-line change.
inline constexpr double born_normalization = 1.0 / (16.0 * pi * pi);

/// Contrast moduli of randomly distributed weak scatterers at wavenumber k.
/// number_density is a relative concentration multiplier: scattering is
/// incoherent, so power is linear in it.
struct ContrastProfile {
    double beta = 0.0;            // compressibility contrast modulus
    double q = 0.0;               // density contrast modulus
    double wavenumber = 1.0;      // rad/m
    double number_density = 1.0;  // scatterers per unit volume, relative scale

    void validate() const {
        if (!(wavenumber > 0.0))
            throw std::invalid_argument("contrast profile: wavenumber must be positive");
        if (number_density < 0.0)
            throw std::invalid_argument("contrast profile: negative number density");
    }
};

enum class Scheme { midpoint, gauss };

struct QuadratureSpec {
    int n_polar = 64;
    int n_azimuth = 64;
    Scheme scheme = Scheme::gauss;

    void validate() const {
        if (n_polar < 2) throw std::invalid_argument("quadrature: n_polar must be >= 2");
        if (n_azimuth < 1) throw std::invalid_argument("quadrature: n_azimuth must be >= 1");
    }
};

/// cos of the scattering angle from the incident and scattered wave vectors,
/// dot(k_i, k_s)/|k_i|^2. Only the elastic case |k_s| = |k_i| is meaningful.
inline double scattering_angle_cos(const std::array<double, 3>& k_i,
                                   const std::array<double, 3>& k_s) {
    const auto norm = [](const std::array<double, 3>& v) {
        return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    };
    const double ni = norm(k_i);
    if (!(ni > 0.0)) throw std::invalid_argument("scattering_angle_cos: zero incident vector");
    const double ns = norm(k_s);
    if (std::abs(ns - ni) > 1e-9 * ni)
        throw std::invalid_argument("scattering_angle_cos: inelastic magnitudes");
    return (k_i[0] * k_s[0] + k_i[1] * k_s[1] + k_i[2] * k_s[2]) / (ni * ni);
}

inline double differential_from_cos(const ContrastProfile& p, double cos_phi) {
    const double k2 = p.wavenumber * p.wavenumber;
    const double amp = p.beta + p.q * cos_phi;
    return p.number_density * k2 * k2 * born_normalization * amp * amp;
}

/// Differential scattering coefficient per unit volume, m^-1 sr^-1.
inline double differential_coefficient(const ContrastProfile& p, double phi) {
    p.validate();
    if (phi < 0.0 || phi > pi + 1e-12)
        throw std::invalid_argument("differential_coefficient: angle must be in [0, pi]");
    return differential_from_cos(p, std::cos(phi));
}

/// Backscatter coefficient, the differential coefficient at phi = pi.
inline double backscatter_coefficient(const ContrastProfile& p) {
    p.validate();
    return differential_from_cos(p, -1.0);
}

// Gauss-Legendre nodes and weights on [-1, 1], Newton iteration on P_n.
inline void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = z;
            for (int j = 2; j <= n; ++j) {
                const double p2 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            pp = n * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
    }
}

/// Total scattering coefficient per unit volume, m^-1: the differential
/// coefficient integrated over the full solid angle. Terms are accumulated
/// with a fixed pairwise-summation tree for reproducibility.
inline double total_coefficient(const ContrastProfile& p, const QuadratureSpec& quad = {}) {
    p.validate();
    quad.validate();
    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(quad.n_polar) * quad.n_azimuth);
    if (quad.scheme == Scheme::gauss) {
        // polar integral in x = cos(phi) over [-1, 1]; azimuth over [0, 2 pi]
        std::vector<double> xs, wx;
        gauss_legendre(quad.n_polar, xs, wx);
        std::vector<double> psi_w(quad.n_azimuth, 2.0 * pi / quad.n_azimuth);
        std::vector<double> psi_nodes(quad.n_azimuth);  // uniform rule is exact in azimuth
        for (int j = 0; j < quad.n_azimuth; ++j) {
            for (int i = 0; i < quad.n_polar; ++i) {
                terms.push_back(psi_w[j] * wx[i] * differential_from_cos(p, xs[i]));
            }
        }
    } else {
        const double h_phi = pi / quad.n_polar;
        const double h_psi = 2.0 * pi / quad.n_azimuth;
        for (int j = 0; j < quad.n_azimuth; ++j) {
            for (int i = 0; i < quad.n_polar; ++i) {
                const double phi = (i + 0.5) * h_phi;
                terms.push_back(h_psi * h_phi * std::sin(phi) *
                                differential_from_cos(p, std::cos(phi)));
            }
        }
    }
    return detail::pairwise_sum(terms);
}

/// Invert the two-angle receiver measurements for the contrast pair. Solves
/// |beta + q cos(phi_i)| = s_i with s_i = sqrt(D_i * 16 pi^2 / k^4) for unit
/// number density; returns the (up to 4) sign-consistent candidates. The pair
/// that generated the data is always among them.
inline std::vector<std::pair<double, double>> invert_contrasts(double d1, double phi1, double d2,
                                                               double phi2, double wavenumber) {
    if (d1 < 0.0 || d2 < 0.0)
        throw std::invalid_argument("invert_contrasts: negative differential coefficient");
    if (!(wavenumber > 0.0)) throw std::invalid_argument("invert_contrasts: bad wavenumber");
    const double c1 = std::cos(phi1);
    const double c2 = std::cos(phi2);
    if (std::abs(c1 - c2) < 1e-12)
        throw std::invalid_argument("invert_contrasts: degenerate angle pair");
    const double k2 = wavenumber * wavenumber;
    const double s1 = std::sqrt(d1 / (k2 * k2 * born_normalization));
    const double s2 = std::sqrt(d2 / (k2 * k2 * born_normalization));

    std::vector<std::pair<double, double>> out;
    for (const double sign1 : {1.0, -1.0}) {
        for (const double sign2 : {1.0, -1.0}) {
            const double q = (sign1 * s1 - sign2 * s2) / (c1 - c2);
            const double beta = sign1 * s1 - q * c1;
            bool dup = false;
            for (const auto& [b0, q0] : out) dup = dup || (b0 == beta && q0 == q);
            if (!dup) out.emplace_back(beta, q);
        }
    }
    return out;
}

}  // namespace acmet::scatter
