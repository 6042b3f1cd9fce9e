#include "relax/model_zoo.hpp"

#include "relax/integrator.hpp"
#include "relax/reduction.hpp"

#include "doctest.h"

#include <random>

using namespace relax;

namespace {

Vec perturbed(const Vec& base, std::mt19937_64& rng, double amplitude) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    Vec out = base;
    for (Index i = 0; i < out.size(); ++i) out[i] += amplitude * unit(rng);
    return out;
}

Vec random_control(Index dim, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    Vec out(dim);
    for (Index i = 0; i < dim; ++i) out[i] = unit(rng);
    return out;
}

}  // namespace

TEST_CASE("periodic upwind differences annihilate constants and conserve mass") {
    for (auto variant : {UpwindVariant::Backward, UpwindVariant::Forward}) {
        DiscretizationOp op = make_upwind(16, 0.5, variant);
        CHECK((op.matrix * Vec::Ones(16)).lpNorm<Eigen::Infinity>() <= 1e-14);
        CHECK((Vec::Ones(16).transpose() * op.matrix).lpNorm<Eigen::Infinity>() <= 1e-14);
    }

    // four-cell stencil by hand
    DiscretizationOp op = make_upwind(4, 1.0, UpwindVariant::Backward);
    Vec u(4);
    u << 0, 1, 0, 0;
    Vec du = op.matrix * u;
    Vec expected(4);
    expected << 0, 1, -1, 0;
    CHECK(du.isApprox(expected));

    CHECK_THROWS_AS(make_upwind(2, 1.0), ConfigError);
    CHECK_THROWS_AS(make_upwind(8, 0.0), ConfigError);
}

TEST_CASE("upwind differences converge to the derivative at first order") {
    double previous_error = -1.0;
    std::vector<double> errors;
    for (Index d : {32, 64, 128}) {
        const double length = 1.0;
        const double dx = length / double(d);
        DiscretizationOp op = make_upwind(d, dx);
        Vec u(d), exact(d);
        for (Index i = 0; i < d; ++i) {
            const double x = double(i) * dx;
            u[i] = std::sin(2.0 * M_PI * x);
            exact[i] = 2.0 * M_PI * std::cos(2.0 * M_PI * x);
        }
        errors.push_back((op.matrix * u - exact).lpNorm<Eigen::Infinity>());
        (void)previous_error;
    }
    const double order1 = std::log2(errors[0] / errors[1]);
    const double order2 = std::log2(errors[1] / errors[2]);
    CHECK(order1 >= 0.9);
    CHECK(order2 >= 0.9);
}

TEST_CASE("transport-block eigendecomposition is exact") {
    JinXinDiagonalization d1 = jin_xin_diagonalize(1.0);
    CHECK(d1.Lambda(0, 0) == doctest::Approx(0.0));
    CHECK(d1.Lambda(1, 1) == doctest::Approx(1.0));
    CHECK(d1.Lambda(2, 2) == doctest::Approx(-1.0));

    for (double a : {0.25, 1.0, 4.0}) {
        JinXinDiagonalization d = jin_xin_diagonalize(a);
        CHECK(((d.T * d.Tinv) - Mat::Identity(3, 3)).lpNorm<Eigen::Infinity>() <= 1e-12);
        CHECK((d.T * d.Lambda * d.Tinv - d.transport()).lpNorm<Eigen::Infinity>() <=
              1e-12);
    }

    // the first transformed coordinate is the relaxation variable itself
    JinXinDiagonalization d4 = jin_xin_diagonalize(4.0);
    CHECK(d4.Lambda(1, 1) == doctest::Approx(2.0));
    Vec state(3);
    state << 0.7, -0.4, 1.3;  // (u, nu, omega)
    const Vec xi = d4.Tinv * state;
    CHECK(xi[0] == doctest::Approx(1.3));
    CHECK(xi[1] == doctest::Approx(0.5 * std::sqrt(4.0) * 0.7 + 0.5 * (-0.4 + 1.3)));

    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> dist(1e-3, 10.0);
    for (int k = 0; k < 20; ++k) {
        const double a = dist(rng);
        JinXinDiagonalization d = jin_xin_diagonalize(a);
        CHECK((d.T * d.Lambda * d.Tinv - d.transport()).lpNorm<Eigen::Infinity>() <=
              1e-12);
        CHECK(d.Lambda(1, 1) == doctest::Approx(std::sqrt(a)).epsilon(1e-14));
        CHECK(d.Lambda(2, 2) == doctest::Approx(-std::sqrt(a)).epsilon(1e-14));
    }
}

TEST_CASE("every zoo model sits on its equilibrium manifold at beta zero") {
    std::mt19937_64 rng(47);
    for (const auto& name : model_registry_names()) {
        CAPTURE(name);
        ModelInstance model = make_model(name, {{"d", 8.0}});
        for (int trial = 0; trial < 20; ++trial) {
            const Vec z = perturbed(model.initial_slow, rng, 0.05);
            Vec state(model.layout.total_width());
            if (model.three_scale()) {
                const auto& sys = model.three();
                state << z, model.equilibrium(z), model.micro_equilibrium(z);
                CHECK(local_equilibrium_residual(model, state, Vec::Zero(sys.q),
                                                 Vec::Zero(sys.r)) <= 1e-10);
            } else {
                const auto& sys = model.two();
                state << z, model.equilibrium(z);
                CHECK(local_equilibrium_residual(model, state, Vec::Zero(sys.q)) <=
                      1e-10);
            }
        }
    }
}

TEST_CASE("every zoo fast block satisfies the stability margin") {
    std::mt19937_64 rng(53);
    for (const auto& name : model_registry_names()) {
        CAPTURE(name);
        ModelInstance model = make_model(name, {{"d", 8.0}});
        std::vector<Vec> samples;
        for (int k = 0; k < 5; ++k) samples.push_back(perturbed(model.initial_slow, rng, 0.05));
        if (model.three_scale()) {
            CHECK(validate_stability(model.three().A2, samples, 0.2).passed);
            CHECK(validate_stability(model.three().A3, samples, 0.2).passed);
        } else {
            CHECK(validate_stability(model.two(), samples, 0.2).passed);
        }
    }
}

TEST_CASE("perturbing the relaxation variable moves the residual linearly") {
    ModelInstance jx = make_model("jin-xin-2", {{"d", 8.0}});
    const Vec z = jx.initial_slow;
    Vec state(jx.layout.total_width());
    state << z, jx.equilibrium(z);
    CHECK(local_equilibrium_residual(jx, state, Vec::Zero(2)) <= 1e-12);
    const double delta = 0.37;
    state[jx.layout.total_width() - 1] += delta;
    CHECK(local_equilibrium_residual(jx, state, Vec::Zero(2)) ==
          doctest::Approx(delta).epsilon(1e-12));

    Vec bad = Vec::Zero(3);
    CHECK_THROWS_AS(local_equilibrium_residual(jx, bad, Vec::Zero(2)), LayoutMismatch);
}

TEST_CASE("stiff runs relax toward the manifold at rate epsilon") {
    const double eps = 1e-3;
    ModelInstance jx = make_model("jin-xin-2", {{"epsilon", eps}});
    const auto& sys = jx.two();
    ControlSignal zero2 =
        ControlSignal::constant(Vec::Zero(2), 1.0, ControlBox::symmetric(2, 1.0));
    auto traj = integrate_stiff(sys, zero2, zero2, jx.initial_slow, jx.initial_meso, 1000);
    const double residual =
        local_equilibrium_residual(jx, traj.state_at(traj.steps()), Vec::Zero(2));
    CHECK(residual <= 10.0 * eps);
}

TEST_CASE("reduced right-hand sides match their continuum counterparts") {
    std::mt19937_64 rng(59);
    const Index d = 8;
    const Mat D = make_upwind(d, 1.0).matrix;

    SUBCASE("two-velocity model gives the discrete heat flow") {
        ModelInstance gt = make_model("goldstein-taylor-2", {{"d", double(d)}});
        ReducedSystem red = build_reduced(gt.two());
        for (int trial = 0; trial < 100; ++trial) {
            const Vec rho = perturbed(gt.initial_slow, rng, 0.2);
            const Vec alpha = random_control(2, rng), beta = random_control(2, rng);
            const Vec expected = -D * (-D * rho + gt.two().B2(rho) * beta) +
                                 gt.two().B1(rho) * alpha;
            CHECK((red.rhs(rho, alpha, beta) - expected).lpNorm<Eigen::Infinity>() <=
                  1e-10);
        }
        // constant density is a fixed point of the uncontrolled heat flow
        const Vec flat = Vec::Ones(d);
        CHECK(red.rhs(flat, Vec::Zero(2), Vec::Zero(2)).lpNorm<Eigen::Infinity>() <=
              1e-13);
    }

    SUBCASE("relaxation model gives the controlled conservation law") {
        ModelInstance jx = make_model("jin-xin-2", {{"d", double(d)}});
        ReducedSystem red = build_reduced(jx.two());
        for (int trial = 0; trial < 100; ++trial) {
            const Vec z = perturbed(jx.initial_slow, rng, 0.2);
            const Vec alpha = random_control(2, rng), beta = random_control(2, rng);
            const Vec u = z.head(d);
            const Vec rhs = red.rhs(z, alpha, beta);
            const Vec expected_u = -D * (jx.flux(u) + jx.two().B2(z) * beta) +
                                   jx.two().B1(z).topRows(d) * alpha;
            CHECK((rhs.head(d) - expected_u).lpNorm<Eigen::Infinity>() <= 1e-10);
        }
    }

    SUBCASE("shallow water gives the controlled quadratic conservation law") {
        ModelInstance sw = make_model("shallow-water-2", {{"d", double(d)}});
        ReducedSystem red = build_reduced(sw.two());
        for (int trial = 0; trial < 100; ++trial) {
            const Vec z = perturbed(sw.initial_slow, rng, 0.2);
            const Vec alpha = random_control(2, rng), beta = random_control(2, rng);
            const Vec h = z.head(d);
            const Vec rhs = red.rhs(z, alpha, beta);
            const Vec expected_h =
                -0.5 * (D * Vec(h.array().square().matrix())) -
                D * (sw.two().B2(z) * beta) + sw.two().B1(z).topRows(d) * alpha;
            CHECK((rhs.head(d) - expected_h).lpNorm<Eigen::Infinity>() <= 1e-10);
            // the f-slice keeps its own slow dynamics
            const Vec expected_f = -D * h - 0.5 * (D * Vec(h.array().square().matrix()));
            CHECK((rhs.tail(d) - expected_f).lpNorm<Eigen::Infinity>() <= 1e-10);
        }
        // constant height is a fixed point without controls
        Vec flat = sw.initial_slow;
        flat.head(d).setConstant(1.0);
        flat.tail(d).setZero();
        CHECK(red.rhs(flat, Vec::Zero(2), Vec::Zero(2))
                  .head(d)
                  .lpNorm<Eigen::Infinity>() <= 1e-13);
    }

    SUBCASE("traffic reduces to the equilibrium-velocity conservation law") {
        ModelInstance tr = make_model("traffic", {{"d", double(d)}});
        const auto& sys = tr.two();
        ReducedSystem red = build_reduced(sys);
        auto V = [](const Vec& rho) { return Vec(Vec::Ones(rho.size()) - rho); };
        for (int trial = 0; trial < 100; ++trial) {
            Vec z = perturbed(tr.initial_slow, rng, 0.05);
            const Vec rho = z.head(d), g = z.segment(d, d);
            const Vec beta = random_control(2, rng), alpha = random_control(2, rng);
            // velocity at the relaxed state: v = V(rho) + rho^{-1} G beta
            const Vec gains = sys.B2(z) * beta / 1.0;  // A = 1 cancels in psi
            const Vec v = V(rho) + gains.cwiseQuotient(rho);
            Vec expected_rho = -v.cwiseProduct(D * rho) - rho.cwiseProduct(D * v) +
                               sys.B1(z).topRows(d) * alpha;
            const Vec rhs = red.rhs(z, alpha, beta);
            CHECK((rhs.head(d) - expected_rho).lpNorm<Eigen::Infinity>() <= 1e-10);
        }
        // constant density, velocity and anticipation: nothing moves
        Vec flat(2 * d);
        flat.head(d).setConstant(0.5);
        flat.tail(d).setZero();
        CHECK(red.rhs(flat, Vec::Zero(2), Vec::Zero(2)).lpNorm<Eigen::Infinity>() <=
              1e-13);
    }

    SUBCASE("granular gas transports the relaxed energy bracket") {
        ModelInstance gg = make_model("granular", {{"d", double(d)}});
        const auto& sys = gg.two();
        ReducedSystem red = build_reduced(sys);
        for (int trial = 0; trial < 100; ++trial) {
            Vec z = perturbed(gg.initial_slow, rng, 0.05);
            const Vec rho = z.head(d), v = z.segment(d, d), w = z.tail(d);
            const Vec u = v.cwiseQuotient(rho);
            const Vec beta = random_control(2, rng), alpha = random_control(4, rng);
            const Vec psi = solve_static(sys, z, beta);
            // relaxed transport bracket: (1/2) u v + G beta + pressure(psi)
            const Vec cp = Vec::Ones(d) + 2.0 * 1.5 * Vec::Ones(d);  // e = 0.5
            const Vec rhoT =
                (2.0 / 3.0) * (w + psi) - (1.0 / 3.0) * u.cwiseProduct(v);
            const Vec pressure = cp.cwiseProduct(rhoT);
            const Vec bracket = w + pressure + psi;
            const Vec expected_w =
                -u.cwiseProduct(D * bracket) - bracket.cwiseProduct(D * u);
            const Vec rhs = red.rhs(z, alpha, beta);
            CHECK((rhs.tail(d) - expected_w).lpNorm<Eigen::Infinity>() <= 1e-10);
        }
    }
}

TEST_CASE("three-scale cascade recovers the corrected flux dynamics") {
    const Index d = 8;
    const Mat D = make_upwind(d, 1.0).matrix;
    ModelInstance jx3 = make_model("jin-xin-3", {{"d", double(d)}});
    const auto& sys = jx3.three();
    CascadeResult cascade = cascade_reduce(sys);

    std::mt19937_64 rng(61);
    for (int trial = 0; trial < 50; ++trial) {
        Vec z = perturbed(jx3.initial_slow, rng, 0.2);
        const Vec u = z.head(d);
        const Vec alpha = random_control(2, rng);
        const Vec gamma = random_control(2, rng);
        const Vec beta = random_control(2, rng);
        Vec stacked(4);
        stacked << alpha, gamma;
        const Vec rhs = cascade.macro.rhs(z, stacked, beta);

        // u-dynamics: the two-scale reduction
        const Vec expected_u = -D * (jx3.flux(u) + sys.B2(z) * beta) +
                               sys.B1(z).topRows(d) * alpha;
        CHECK((rhs.head(d) - expected_u).lpNorm<Eigen::Infinity>() <= 1e-10);
        // v-dynamics gain the flux correction and its control
        const double a = 1.5;
        const Vec expected_v = -a * (D * u) + jx3.flux1(u) + sys.B3(z) * gamma;
        CHECK((rhs.segment(d, d) - expected_v).lpNorm<Eigen::Infinity>() <= 1e-10);
        // w-dynamics stay pure transport
        const double b = 1.0;
        CHECK((rhs.tail(d) + b * (D * u)).lpNorm<Eigen::Infinity>() <= 1e-10);
    }
}

TEST_CASE("three-scale blocks match their declared shapes and equilibria") {
    const Index d = 6;
    ModelInstance jx3 = make_model("jin-xin-3", {{"d", double(d)}});
    const auto& sys = jx3.three();
    CHECK(sys.m == 3 * d);
    CHECK(sys.n == d);
    CHECK(sys.l == d);
    const Vec z = jx3.initial_slow;
    CHECK((sys.A2(z) + Mat::Identity(d, d)).lpNorm<Eigen::Infinity>() <= 1e-14);
    CHECK((sys.A3(z) + Mat::Identity(d, d)).lpNorm<Eigen::Infinity>() <= 1e-14);
    // micro equilibrium is the flux correction minus the w-slice
    const Vec q_eq = jx3.micro_equilibrium(z);
    const Vec expected = jx3.flux1(z.head(d)) - z.segment(2 * d, d);
    CHECK((q_eq - expected).lpNorm<Eigen::Infinity>() <= 1e-14);

    // degenerate third scale: cascade equals the plain two-scale reduction
    auto zero_flux = [](const Vec& u) { return Vec(Vec::Zero(u.size())); };
    ModelInstance degen = jin_xin_three_scale(d, 1.0, 1.5, 1.0,
                                              [](const Vec& u) { return Vec(0.5 * u.array().square()); },
                                              zero_flux, GainField::spatial_pair(d, 1.0, 0.2),
                                              GainField::spatial_pair(d, 1.0, 0.5),
                                              GainField::none(d), 1e-2);
    ModelInstance two = jin_xin_two_scale(d, 1.0, 1.5,
                                          [](const Vec& u) { return Vec(0.5 * u.array().square()); },
                                          GainField::spatial_pair(d, 1.0, 0.2),
                                          GainField::spatial_pair(d, 1.0, 0.5), 1e-2);
    CascadeResult cascade = cascade_reduce(degen.three());
    ReducedSystem red2 = build_reduced(two.two());
    std::mt19937_64 rng(67);
    for (int trial = 0; trial < 10; ++trial) {
        Vec z3 = perturbed(degen.initial_slow, rng, 0.2);
        Vec z2(2 * d);
        z2 << z3.head(d), z3.segment(d, d);
        const Vec alpha = random_control(2, rng), beta = random_control(2, rng);
        Vec stacked(3);
        stacked << alpha, Vec::Zero(1);
        const Vec rhs3 = cascade.macro.rhs(z3, stacked, beta);
        const Vec rhs2 = red2.rhs(z2, alpha, beta);
        CHECK((rhs3.head(2 * d) - rhs2).lpNorm<Eigen::Infinity>() <= 1e-10);
    }
}

TEST_CASE("two-velocity three-scale variant allows vanishing wave speeds") {
    const Index d = 6;
    ModelInstance gt3 = make_model("goldstein-taylor-3",
                                   {{"d", double(d)}, {"a", 0.0}, {"b", 0.0}});
    const auto& sys = gt3.three();
    const Vec z = gt3.initial_slow;
    // with a = b = 0 the J-drift carries only the w and q couplings
    Vec x = Vec::Zero(d);
    const Vec slow = sys.slow_velocity(z, Vec::Zero(d), x);
    const Vec expected_j = z.segment(2 * d, d);
    CHECK((slow.segment(d, d) - expected_j).lpNorm<Eigen::Infinity>() <= 1e-13);
    CHECK(slow.tail(d).lpNorm<Eigen::Infinity>() <= 1e-13);

    // micro equilibrium keeps zero residual
    Vec state(gt3.layout.total_width());
    state << z, gt3.equilibrium(z), gt3.micro_equilibrium(z);
    CHECK(local_equilibrium_residual(gt3, state, Vec::Zero(2), Vec::Zero(2)) <= 1e-10);
}

TEST_CASE("shallow-water three-scale stacks its meso pair") {
    const Index d = 6;
    ModelInstance sw3 = make_model("shallow-water-3", {{"d", double(d)}});
    const auto& sys = sw3.three();
    CHECK(sys.n == 2 * d);
    CHECK(sys.l == d);
    const Vec z = sw3.initial_slow;
    // meso equilibrium: g = h^2/2 - f, p = h^2/2 - k
    const Vec eq = sw3.equilibrium(z);
    const Vec h = z.head(d), f = z.segment(d, d), k = z.tail(d);
    CHECK((eq.head(d) - (0.5 * h.array().square().matrix() - f))
              .lpNorm<Eigen::Infinity>() <= 1e-13);
    CHECK((eq.tail(d) - (0.5 * h.array().square().matrix() - k))
              .lpNorm<Eigen::Infinity>() <= 1e-13);
    Vec state(sw3.layout.total_width());
    state << z, eq, sw3.micro_equilibrium(z);
    CHECK(local_equilibrium_residual(sw3, state, Vec::Zero(2), Vec::Zero(2)) <= 1e-10);
}

TEST_CASE("traffic model guards the vacuum and recovers the velocity closure") {
    const Index d = 6;
    ModelInstance tr = make_model("traffic", {{"d", double(d)}});
    Vec vacuum = tr.initial_slow;
    vacuum[0] = 1e-12;
    CHECK_THROWS_AS(tr.equilibrium(vacuum), DensityFloor);

    // equilibrium zeroes the relaxation bracket
    const Vec z = tr.initial_slow;
    Vec state(tr.layout.total_width());
    state << z, tr.equilibrium(z);
    CHECK(local_equilibrium_residual(tr, state, Vec::Zero(2)) <= 1e-12);
}

TEST_CASE("granular gas freezes when collisions are elastic") {
    const Index d = 6;
    ModelInstance elastic = make_model("granular", {{"d", double(d)}, {"e", 1.0}});
    const auto& sys = elastic.two();
    const Vec z = elastic.initial_slow;
    // restitution one: the relaxation rate vanishes identically
    CHECK(sys.A2(z).lpNorm<Eigen::Infinity>() <= 1e-14);
    CHECK(sys.C2(z).lpNorm<Eigen::Infinity>() <= 1e-14);

    ModelInstance gg = make_model("granular", {{"d", double(d)}});
    Vec state(gg.layout.total_width());
    state << gg.initial_slow, gg.equilibrium(gg.initial_slow);
    CHECK(local_equilibrium_residual(gg, state, Vec::Zero(2)) <= 1e-12);

    // negative temperature is rejected
    Vec cold = gg.initial_slow;
    cold.tail(d).setZero();  // energy slice below its kinetic part
    CHECK_THROWS_AS(gg.two().A2(cold), NegativeTemperature);
}

TEST_CASE("model registry rejects unknown names and parameters") {
    CHECK_THROWS_AS(make_model("no-such-model"), ConfigError);
    CHECK_THROWS_AS(make_model("jin-xin-2", {{"bogus", 1.0}}), ConfigError);
    const auto names = model_registry_names();
    CHECK(names.size() == 8);
    for (const auto& name : names) CHECK_NOTHROW(make_model(name, {{"d", 8.0}}));
}
