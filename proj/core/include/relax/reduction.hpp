#pragma once

#include "relax/system.hpp"

#include <memory>

namespace relax {

/// The eps -> 0 limit system. `rhs` composes the static solve with the slow
/// drift; for systems produced by cascade_reduce the alpha slot carries the
/// stacked (alpha, gamma) control.
struct ReducedSystem {
    Index m = 0, p = 0, q = 0;
    std::function<Vec(const Vec& z, const Vec& alpha, const Vec& beta)> rhs;
    ControlBox omega_A, omega_B;
    std::shared_ptr<const TwoScaleSystem> provenance;
};

/// Root of the static equation 0 = A2(z) psi + B2(z) beta + C2(z).
Vec solve_static(const TwoScaleSystem& sys, const Vec& z, const Vec& beta);

/// Static solve for the micro block of a three-scale system.
Vec solve_static_micro(const ThreeScaleSystem& sys, const Vec& z, const Vec& gamma);

ReducedSystem build_reduced(const TwoScaleSystem& sys);

/// Ergodic constant of the meso cell problem in the affine case:
/// sup over beta of -p . A1(z) psi(z, beta), evaluated in closed form.
double lambda1_closed_form(const TwoScaleSystem& sys, const Vec& z, const Vec& p);

/// Effective Hamiltonian -p.C1 + sup_alpha{-p.B1 alpha} + lambda1(z, p).
double effective_hamiltonian(const TwoScaleSystem& sys, const Vec& z, const Vec& p);

/// Micro-level ergodic constant: sup over gamma of -p . A0(z) psi_micro(z, gamma).
double lambda2_closed_form(const ThreeScaleSystem& sys, const Vec& z, const Vec& p);

struct CascadeResult {
    /// Meso-level (z, y) system: micro eliminated, slow control = (alpha, gamma).
    TwoScaleSystem meso;
    /// Macro reduced system; rhs controls are ((alpha, gamma), beta).
    ReducedSystem macro;
};

/// Cascaded reduction of a three-scale system: (i) micro static solve folds
/// A0(z) psi_micro(z, gamma) into the slow drift, (ii)-(iii) the meso system
/// is reduced as usual.
CascadeResult cascade_reduce(const ThreeScaleSystem& sys3);

}  // namespace relax
