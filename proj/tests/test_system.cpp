#include "relax/system.hpp"

#include "doctest.h"

#include <random>

using namespace relax;

namespace {

Vec vec1(double a) { return Vec::Constant(1, a); }

Vec vec2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

TwoScaleSystem scalar_system(double a1, double a2, double b1, double b2, double c1,
                             double c2, double boxA = 1.0, double boxB = 1.0,
                             double eps = 1e-2) {
    TwoScaleSystem sys;
    sys.m = sys.n = sys.p = sys.q = 1;
    sys.epsilon = eps;
    sys.A1 = MatrixField::constant(Mat::Constant(1, 1, a1));
    sys.A2 = MatrixField::constant(Mat::Constant(1, 1, a2));
    sys.B1 = MatrixField::constant(Mat::Constant(1, 1, b1));
    sys.B2 = MatrixField::constant(Mat::Constant(1, 1, b2));
    sys.C1 = MatrixField::constant(Mat::Constant(1, 1, c1));
    sys.C2 = MatrixField::constant(Mat::Constant(1, 1, c2));
    sys.omega_A = ControlBox::symmetric(1, boxA);
    sys.omega_B = ControlBox::symmetric(1, boxB);
    sys.validate();
    return sys;
}

// Exhaustive control-grid maximum of -c.u over the box.
double brute_force_sup(const Vec& c, const ControlBox& box, int points = 201) {
    std::vector<Index> idx(c.size(), 0);
    double best = -std::numeric_limits<double>::infinity();
    for (;;) {
        Vec u(c.size());
        for (Index i = 0; i < c.size(); ++i)
            u[i] = box.lower[i] +
                   (box.upper[i] - box.lower[i]) * double(idx[i]) / double(points - 1);
        best = std::max(best, -c.dot(u));
        Index d = 0;
        while (d < c.size() && ++idx[d] == points) idx[d++] = 0;
        if (d == c.size()) break;
    }
    return best;
}

}  // namespace

TEST_CASE("ControlBox validates bounds") {
    CHECK_THROWS_AS(ControlBox(vec1(1.0), vec1(-1.0)), DimensionMismatch);
    CHECK_THROWS_AS(ControlBox(Vec(), Vec()), DimensionMismatch);
    ControlBox box(vec2(-1.0, 0.0), vec2(1.0, 2.0));
    CHECK(box.contains(vec2(0.0, 1.0)));
    CHECK_FALSE(box.contains(vec2(0.0, 3.0)));
    CHECK(box.clamp(vec2(5.0, -5.0)).isApprox(vec2(1.0, 0.0)));
    CHECK(box.min_halfwidth() == doctest::Approx(1.0));
}

TEST_CASE("box_sup endpoint and tie cases") {
    auto r = box_sup(vec1(2.0), ControlBox::symmetric(1, 1.0));
    CHECK(r.value == doctest::Approx(2.0));
    CHECK(r.argmax[0] == doctest::Approx(-1.0));

    auto tie = box_sup(vec2(0.0, 0.0), ControlBox::symmetric(2, 1.0));
    CHECK(tie.value == doctest::Approx(0.0));
    CHECK(tie.argmax.isZero());

    ControlBox box(vec2(0.0, -1.0), vec2(2.0, 4.0));
    auto mixed = box_sup(vec2(1.0, -3.0), box);
    CHECK(mixed.value == doctest::Approx(12.0));
    CHECK(mixed.argmax.isApprox(vec2(0.0, 4.0)));
    CHECK(mixed.value == doctest::Approx(brute_force_sup(vec2(1.0, -3.0), box)));

    CHECK_THROWS_AS(box_sup(vec1(1.0), box), DimensionMismatch);
}

TEST_CASE("box_sup dominates every sampled control and attains its argmax") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> coeff(-3.0, 3.0);
    std::uniform_real_distribution<double> edge(0.0, 2.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const Index dim = 1 + trial % 4;
        Vec c(dim), lo(dim), hi(dim);
        for (Index i = 0; i < dim; ++i) {
            c[i] = coeff(rng);
            lo[i] = -edge(rng);
            hi[i] = edge(rng);
        }
        ControlBox box(lo, hi);
        auto r = box_sup(c, box);
        CHECK(r.value == doctest::Approx(-c.dot(r.argmax)).epsilon(1e-12));
        for (int s = 0; s < 8; ++s) {
            Vec u(dim);
            for (Index i = 0; i < dim; ++i) u[i] = lo[i] + (hi[i] - lo[i]) * unit(rng);
            CHECK(r.value >= -c.dot(u) - 1e-12);
        }
    }
}

TEST_CASE("stability validation reports spectral abscissa per sample") {
    TwoScaleSystem sys = scalar_system(0, -1.0, 0, 1.0, 0, 0);
    auto report = validate_stability(sys, {vec1(0.0), vec1(3.0)}, 0.5);
    CHECK(report.passed);
    CHECK(report.worst() == doctest::Approx(-1.0));

    // pure rotation: eigenvalues on the imaginary axis
    TwoScaleSystem rot;
    rot.m = 1;
    rot.n = 2;
    rot.p = rot.q = 1;
    rot.A1 = MatrixField::zero(1, 2);
    Mat j(2, 2);
    j << 0, 1, -1, 0;
    rot.A2 = MatrixField::constant(j);
    rot.B1 = MatrixField::zero(1, 1);
    rot.B2 = MatrixField::zero(2, 1);
    rot.C1 = MatrixField::zero(1, 1);
    rot.C2 = MatrixField::zero(2, 1);
    rot.omega_A = rot.omega_B = ControlBox::symmetric(1, 1.0);
    auto rep2 = validate_stability(rot, {vec1(0.0)}, 0.1);
    CHECK_FALSE(rep2.passed);
    CHECK(rep2.worst() == doctest::Approx(0.0).epsilon(1e-10));

    // relaxation fast block: minus identity
    TwoScaleSystem jx = rot;
    jx.A2 = MatrixField::constant(-Mat::Identity(2, 2));
    auto rep3 = validate_stability(jx, {vec1(0.0)}, 0.9);
    CHECK(rep3.passed);
    CHECK(rep3.worst() == doctest::Approx(-1.0));

    TwoScaleSystem bad = scalar_system(0, -1.0, 0, 1.0, 0, 0);
    bad.A2 = MatrixField(1, 1, [](const Vec&) {
        return Mat::Constant(1, 1, std::numeric_limits<double>::quiet_NaN());
    });
    CHECK_THROWS_AS(validate_stability(bad, {vec1(0.0)}, 0.5), NonFiniteMatrix);
    CHECK_THROWS_AS(validate_stability(sys, {}, 0.5), ConfigError);
}

TEST_CASE("controllability radius certifies an inner ball of the control image") {
    TwoScaleSystem sys;
    sys.m = 1;
    sys.n = 2;
    sys.p = 1;
    sys.q = 2;
    sys.A1 = MatrixField::zero(1, 2);
    sys.A2 = MatrixField::constant(-Mat::Identity(2, 2));
    sys.B1 = MatrixField::zero(1, 1);
    sys.B2 = MatrixField::constant(Mat::Identity(2, 2));
    sys.C1 = MatrixField::zero(1, 1);
    sys.C2 = MatrixField::zero(2, 1);
    sys.omega_A = ControlBox::symmetric(1, 1.0);
    sys.omega_B = ControlBox::symmetric(2, 1.0);
    CHECK(validate_controllability(sys, vec1(0.0)) == doctest::Approx(1.0));

    Mat singular(2, 2);
    singular << 1, 0, 0, 0;
    sys.B2 = MatrixField::constant(singular);
    CHECK(validate_controllability(sys, vec1(0.0)) == doctest::Approx(0.0));

    Mat stretched(2, 2);
    stretched << 2, 0, 0, 1;
    sys.B2 = MatrixField::constant(stretched);
    sys.omega_B = ControlBox::symmetric(2, 3.0);
    const double radius = validate_controllability(sys, vec1(0.0));
    CHECK(radius == doctest::Approx(3.0));

    // every boundary direction of the certified ball lies in the image box:
    // diag(2, 1) maps [-3,3]^2 onto [-6,6] x [-3,3]
    for (int k = 0; k < 100000; ++k) {
        const double theta = 2.0 * M_PI * double(k) / 100000.0;
        const Vec target = radius * vec2(std::cos(theta), std::sin(theta));
        CHECK(std::abs(target[0]) <= 6.0 + 1e-9);
        CHECK(std::abs(target[1]) <= 3.0 + 1e-9);
    }
}

TEST_CASE("full Hamiltonian closed form matches control-grid search") {
    TwoScaleSystem null_sys = scalar_system(0, 0, 0, 0, 0, 0);
    CHECK(hamiltonian_full(null_sys, vec1(0), vec1(0), vec1(1.0), vec1(-2.0)) ==
          doctest::Approx(0.0));

    TwoScaleSystem sys = scalar_system(1.0, -1.0, 1.0, 1.0, 0.0, 0.0);
    const double h = hamiltonian_full(sys, vec1(0.0), vec1(2.0), vec1(1.0), vec1(1.0));
    CHECK(h == doctest::Approx(2.0));

    double brute = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < 201; ++i)
        for (int j = 0; j < 201; ++j) {
            const double alpha = -1.0 + 2.0 * i / 200.0;
            const double beta = -1.0 + 2.0 * j / 200.0;
            brute = std::max(brute, -(2.0 + alpha) * 1.0 - (-2.0 + beta) * 1.0);
        }
    CHECK(h == doctest::Approx(brute).epsilon(1e-12));

    // zero fast costate kills the fast contribution
    const double h0 = hamiltonian_full(sys, vec1(0.0), vec1(2.0), vec1(1.0), vec1(0.0));
    CHECK(h0 == doctest::Approx(-2.0 + 1.0));
}

TEST_CASE("full Hamiltonian is convex in the costates") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    TwoScaleSystem sys = scalar_system(0.7, -1.3, 0.4, 0.9, 0.2, -0.1);
    for (int trial = 0; trial < 200; ++trial) {
        const Vec z = vec1(dist(rng)), y = vec1(dist(rng));
        const Vec p1 = vec1(dist(rng)), q1 = vec1(dist(rng));
        const Vec p2 = vec1(dist(rng)), q2 = vec1(dist(rng));
        const double mid = hamiltonian_full(sys, z, y, 0.5 * (p1 + p2), 0.5 * (q1 + q2));
        const double avg = 0.5 * hamiltonian_full(sys, z, y, p1, q1) +
                           0.5 * hamiltonian_full(sys, z, y, p2, q2);
        CHECK(mid <= avg + 1e-10);
    }
}

TEST_CASE("the affine suprema are attained on box vertices") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    for (int trial = 0; trial < 100; ++trial) {
        const Index dim = 1 + trial % 3;
        Vec c(dim);
        for (Index i = 0; i < dim; ++i) c[i] = dist(rng);
        ControlBox box = ControlBox::symmetric(dim, 1.5);
        double vertex_best = -std::numeric_limits<double>::infinity();
        for (unsigned long mask = 0; mask < (1ul << dim); ++mask)
            vertex_best = std::max(vertex_best, -c.dot(box.vertex(mask)));
        CHECK(box_sup(c, box).value == doctest::Approx(vertex_best).epsilon(1e-12));
    }
}

TEST_CASE("three-scale Hamiltonian decomposes into scale contributions") {
    ThreeScaleSystem sys;
    sys.m = sys.n = sys.l = sys.p = sys.q = sys.r = 1;
    auto fill = [](double v) { return MatrixField::constant(Mat::Constant(1, 1, v)); };
    sys.A0 = fill(1.0);
    sys.A1 = fill(1.0);
    sys.A2 = fill(-1.0);
    sys.A3 = fill(-1.0);
    sys.B1 = fill(1.0);
    sys.B2 = fill(1.0);
    sys.B3 = fill(1.0);
    sys.C1 = fill(0.0);
    sys.C2 = fill(0.0);
    sys.C3 = fill(0.0);
    sys.omega_A = sys.omega_B = sys.omega_G = ControlBox::symmetric(1, 1.0);
    sys.validate();

    const double h = hamiltonian_three_scale(sys, vec1(0), vec1(1.0), vec1(1.0),
                                             vec1(1.0), vec1(1.0), vec1(1.0));
    CHECK(h == doctest::Approx(3.0));

    double brute = -std::numeric_limits<double>::infinity();
    for (int ia = 0; ia < 51; ++ia)
        for (int ib = 0; ib < 51; ++ib)
            for (int ic = 0; ic < 51; ++ic) {
                const double a = -1.0 + 2.0 * ia / 50.0;
                const double b = -1.0 + 2.0 * ib / 50.0;
                const double g = -1.0 + 2.0 * ic / 50.0;
                brute = std::max(brute, -(1.0 + 1.0 + a) - (-1.0 + b) - (-1.0 + g));
            }
    CHECK(h == doctest::Approx(brute).epsilon(1e-12));

    // zero micro state and costate: only the dangling micro sup term remains,
    // and it vanishes at r = 0
    ThreeScaleSystem deg = sys;
    deg.A0 = fill(0.0);
    const double h3 = hamiltonian_three_scale(deg, vec1(0), vec1(1.0), vec1(0.0),
                                              vec1(1.0), vec1(1.0), vec1(0.0));
    const double h2 = hamiltonian_full(deg.embedded_two_scale(), vec1(0), vec1(1.0),
                                       vec1(1.0), vec1(1.0));
    CHECK(h3 == doctest::Approx(h2));
}
