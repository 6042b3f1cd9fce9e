#pragma once

#include "relax/signal.hpp"
#include "relax/system.hpp"

#include <map>
#include <optional>
#include <string>
#include <variant>

namespace relax {

enum class UpwindVariant { Backward, Forward };

/// First-order periodic upwind difference matrix. Rows and columns both sum
/// to zero (derivative of constants vanishes, discrete mass is conserved).
struct DiscretizationOp {
    Index d = 0;
    double dx = 1.0;
    UpwindVariant variant = UpwindVariant::Backward;
    Mat matrix;
};

DiscretizationOp make_upwind(Index d, double dx,
                             UpwindVariant variant = UpwindVariant::Backward);

/// Control gain: matrix-valued function of the driving slice (u, rho or h)
/// together with the admissible box.
struct GainField {
    Index cols = 0;
    std::function<Mat(const Vec&)> eval;
    ControlBox box;

    static GainField none(Index rows);
    /// Two sine/cosine spatial columns scaled by `magnitude`, box [-1, 1]^2.
    static GainField spatial_pair(Index d, double dx, double magnitude);
};

/// Explicit eigendecomposition of the Jin-Xin transport block
/// [[0,1,1],[a,0,0],[0,0,0]] = T Lambda T^{-1}.
struct JinXinDiagonalization {
    double a = 1.0;
    Mat T, Lambda, Tinv;
    Mat transport() const;  // the block itself
};

JinXinDiagonalization jin_xin_diagonalize(double a);

/// A semi-discretised relaxation model embedded as a controlled two- or
/// three-scale system, with its state layout, flux/gain evaluators, default
/// initial data and local-equilibrium maps.
struct ModelInstance {
    std::string name;
    std::variant<TwoScaleSystem, ThreeScaleSystem> system;
    Layout layout;

    std::function<Vec(const Vec&)> flux;   // F (or F0); may be empty
    std::function<Vec(const Vec&)> flux1;  // F1 for three-scale models
    /// Local equilibrium of the stiff block at beta = 0, as a function of the
    /// slow state.
    std::function<Vec(const Vec&)> equilibrium;
    /// Micro-level equilibrium at gamma = 0 (three-scale models only).
    std::function<Vec(const Vec&)> micro_equilibrium;

    Vec initial_slow, initial_meso, initial_micro;
    std::optional<JinXinDiagonalization> diagonalization;

    bool three_scale() const { return std::holds_alternative<ThreeScaleSystem>(system); }
    const TwoScaleSystem& two() const { return std::get<TwoScaleSystem>(system); }
    const ThreeScaleSystem& three() const { return std::get<ThreeScaleSystem>(system); }
    double epsilon() const { return three_scale() ? three().epsilon : two().epsilon; }
    ModelInstance with_epsilon(double eps) const;
};

ModelInstance jin_xin_two_scale(Index d, double dx, double a,
                                std::function<Vec(const Vec&)> flux, GainField H,
                                GainField G, double epsilon);

ModelInstance jin_xin_three_scale(Index d, double dx, double a, double b,
                                  std::function<Vec(const Vec&)> flux0,
                                  std::function<Vec(const Vec&)> flux1, GainField H,
                                  GainField G, GainField K, double epsilon);

ModelInstance goldstein_taylor_two_scale(Index d, double dx, GainField H, GainField G,
                                         double epsilon);

ModelInstance goldstein_taylor_three_scale(Index d, double dx, double a, double b,
                                           std::function<Vec(const Vec&)> flux1,
                                           GainField H, GainField G, GainField K,
                                           double epsilon);

ModelInstance shallow_water(Index d, double dx, GainField H, GainField G,
                            double epsilon);

ModelInstance shallow_water_three_scale(Index d, double dx,
                                        std::function<Vec(const Vec&)> flux1,
                                        GainField H, GainField G, GainField K,
                                        double epsilon);

/// Second-order traffic model. The g-equation is quadratic in the fast state,
/// so the instance carries an exact slow-drift evaluator; the affine A1/C1
/// fields are the tangent model at the beta = 0 equilibrium.
ModelInstance traffic_model(Index d, double dx, double A,
                            std::function<Vec(const Vec&)> V,
                            std::function<Vec(const Vec&)> P, GainField H, GainField G,
                            double epsilon, double density_floor = 1e-8);

/// Granular gas. The temperature field maps the slow state (rho, v, w) to T;
/// passing an empty function selects the built-in recovery
/// T = ((2/3) w - (1/3) u v) / rho from the energy slice.
ModelInstance granular_model(Index d, double dx, double e, double grav,
                             std::function<Vec(const Vec&)> G_corr,
                             std::function<Vec(const Vec&)> Tfield, GainField H,
                             GainField G, GainField K, double epsilon,
                             double density_floor = 1e-8);

/// Sup norm of the stiff drift bracket at the given state; zero exactly on
/// the local-equilibrium manifold. Three-scale models report the worse of the
/// meso (beta) and micro (gamma) brackets.
double local_equilibrium_residual(const ModelInstance& model, const Vec& state,
                                  const Vec& beta, const Vec& gamma = Vec());

/// Registry addressable by name; parameters not present fall back to model
/// defaults, unknown parameter names are rejected.
std::vector<std::string> model_registry_names();
ModelInstance make_model(const std::string& name,
                         const std::map<std::string, double>& params = {});

}  // namespace relax
