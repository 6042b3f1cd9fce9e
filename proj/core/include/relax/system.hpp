#pragma once

#include "relax/types.hpp"

#include <memory>
#include <vector>

namespace relax {

/// Two-time-scale control system, affine in the fast state and in both
/// controls:
///   dz/ds      = A1(z) y + B1(z) alpha + C1(z)
///   eps dy/ds  = A2(z) y + B2(z) beta  + C2(z)
///
/// `slow_drift`, when set, replaces the affine slow velocity A1(z)y + C1(z)
/// with an exact evaluator for models whose slow equation is not affine in y
/// (the traffic instance). The affine fields remain the data used by the
/// Hamiltonian-level operations.
struct TwoScaleSystem {
    Index m = 0, n = 0, p = 0, q = 0;
    MatrixField A1, A2, B1, B2, C1, C2;  // C1: m x 1, C2: n x 1
    ControlBox omega_A, omega_B;
    double epsilon = 1.0;

    std::function<Vec(const Vec& z, const Vec& y)> slow_drift;  // optional

    void validate() const;

    /// Slow velocity without controls: A1(z) y + C1(z), or the exact override.
    Vec slow_velocity(const Vec& z, const Vec& y) const;
    /// Fast velocity without the 1/eps factor: A2(z) y + B2(z) beta + C2(z).
    Vec fast_velocity(const Vec& z, const Vec& y, const Vec& beta) const;
};

/// Adds a micro scale:
///   dz/ds        = A0(z) x + A1(z) y + B1(z) alpha + C1(z)
///   eps dy/ds    = A2(z) y + B2(z) beta  + C2(z)
///   eps^2 dx/ds  = A3(z) x + B3(z) gamma + C3(z)
struct ThreeScaleSystem {
    Index m = 0, n = 0, p = 0, q = 0, l = 0, r = 0;
    MatrixField A0, A1, A2, A3, B1, B2, B3, C1, C2, C3;
    ControlBox omega_A, omega_B, omega_G;
    double epsilon = 1.0;

    void validate() const;

    Vec slow_velocity(const Vec& z, const Vec& y, const Vec& x) const;
    Vec meso_velocity(const Vec& z, const Vec& y, const Vec& beta) const;
    Vec micro_velocity(const Vec& z, const Vec& x, const Vec& gamma) const;

    /// The (z, y) system with the micro block dropped entirely (A0 ignored).
    TwoScaleSystem embedded_two_scale() const;
};

struct CostSpec {
    std::function<double(const Vec&)> running;   // l(z)
    std::function<double(const Vec&)> terminal;  // phi(z)
    double horizon = 1.0;
};

struct StabilityReport {
    struct Sample {
        Vec z;
        double max_real_part;
    };
    std::vector<Sample> samples;
    double margin = 0.0;
    bool passed = false;
    double worst() const;
};

/// Checks the fast-block spectral condition: max Re(eig(A2(z))) <= -margin at
/// every sample.
StabilityReport validate_stability(const TwoScaleSystem& sys,
                                   const std::vector<Vec>& samples, double margin);

/// Same check against an arbitrary square matrix field (micro blocks).
StabilityReport validate_stability(const MatrixField& block,
                                   const std::vector<Vec>& samples, double margin);

/// Conservative inner-ball radius of {B2(z) beta : beta in Omega_B}:
/// sigma_min(B2(z)) * min halfwidth of Omega_B, or 0 on rank deficiency.
double validate_controllability(const TwoScaleSystem& sys, const Vec& z);

/// H(z,y,p,q) with both suprema in closed form over the control boxes.
double hamiltonian_full(const TwoScaleSystem& sys, const Vec& z, const Vec& y,
                        const Vec& p, const Vec& q);

/// H1 + H2 + H3 of the three-scale problem.
double hamiltonian_three_scale(const ThreeScaleSystem& sys, const Vec& z,
                               const Vec& y, const Vec& x, const Vec& p,
                               const Vec& q, const Vec& r);

}  // namespace relax
