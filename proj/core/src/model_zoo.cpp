#include "relax/model_zoo.hpp"

#include <cmath>

namespace relax {

namespace {

Mat diag(const Vec& v) { return v.asDiagonal(); }

Vec sine_profile(Index d, double offset, double amplitude, double cycles = 1.0) {
    Vec v(d);
    for (Index i = 0; i < d; ++i)
        v[i] = offset + amplitude * std::sin(2.0 * M_PI * cycles * double(i) / double(d));
    return v;
}

void check_density(const Vec& rho, double floor, const char* who) {
    for (Index i = 0; i < rho.size(); ++i)
        if (rho[i] < floor)
            throw DensityFloor(std::string(who) + ": density " + std::to_string(rho[i]) +
                               " below floor " + std::to_string(floor) + " at cell " +
                               std::to_string(i));
}

MatrixField col_field(Index rows, std::function<Vec(const Vec&)> f) {
    return MatrixField(rows, 1, [f = std::move(f)](const Vec& z) {
        Mat m(f(z).size(), 1);
        m.col(0) = f(z);
        return m;
    });
}

}  // namespace

DiscretizationOp make_upwind(Index d, double dx, UpwindVariant variant) {
    if (d < 3) throw ConfigError("make_upwind: need at least 3 cells");
    if (!(dx > 0.0)) throw ConfigError("make_upwind: dx must be positive");
    DiscretizationOp op;
    op.d = d;
    op.dx = dx;
    op.variant = variant;
    op.matrix = Mat::Zero(d, d);
    for (Index i = 0; i < d; ++i) {
        if (variant == UpwindVariant::Backward) {
            op.matrix(i, i) = 1.0 / dx;
            op.matrix(i, (i + d - 1) % d) = -1.0 / dx;
        } else {
            op.matrix(i, (i + 1) % d) = 1.0 / dx;
            op.matrix(i, i) = -1.0 / dx;
        }
    }
    return op;
}

GainField GainField::none(Index rows) {
    GainField g;
    g.cols = 1;
    Mat zero = Mat::Zero(rows, 1);
    g.eval = [zero](const Vec&) { return zero; };
    g.box = ControlBox(Vec::Zero(1), Vec::Zero(1));
    return g;
}

GainField GainField::spatial_pair(Index d, double dx, double magnitude) {
    GainField g;
    g.cols = 2;
    Mat cols(d, 2);
    const double length = double(d) * dx;
    for (Index i = 0; i < d; ++i) {
        const double x = double(i) * dx;
        cols(i, 0) = magnitude * std::sin(2.0 * M_PI * x / length);
        cols(i, 1) = magnitude * std::cos(2.0 * M_PI * x / length);
    }
    g.eval = [cols](const Vec&) { return cols; };
    g.box = ControlBox::symmetric(2, 1.0);
    return g;
}

Mat JinXinDiagonalization::transport() const {
    Mat m = Mat::Zero(3, 3);
    m(0, 1) = 1.0;
    m(0, 2) = 1.0;
    m(1, 0) = a;
    return m;
}

JinXinDiagonalization jin_xin_diagonalize(double a) {
    if (!(a > 0.0)) throw ConfigError("jin_xin_diagonalize: a must be positive");
    const double s = std::sqrt(a);
    JinXinDiagonalization d;
    d.a = a;
    d.T.resize(3, 3);
    d.T << 0.0, 1.0 / s, -1.0 / s,
          -1.0, 1.0, 1.0,
           1.0, 0.0, 0.0;
    d.Lambda = Vec({{0.0, s, -s}}).asDiagonal();
    d.Tinv.resize(3, 3);
    d.Tinv << 0.0, 0.0, 1.0,
              s / 2.0, 0.5, 0.5,
             -s / 2.0, 0.5, 0.5;
    if (((d.T * d.Tinv) - Mat::Identity(3, 3)).lpNorm<Eigen::Infinity>() > 1e-12)
        throw EigenFailure("jin_xin_diagonalize: T Tinv differs from identity");
    if ((d.T * d.Lambda * d.Tinv - d.transport()).lpNorm<Eigen::Infinity>() > 1e-12)
        throw EigenFailure("jin_xin_diagonalize: T Lambda Tinv differs from transport block");
    return d;
}

ModelInstance ModelInstance::with_epsilon(double eps) const {
    ModelInstance copy = *this;
    if (copy.three_scale())
        std::get<ThreeScaleSystem>(copy.system).epsilon = eps;
    else
        std::get<TwoScaleSystem>(copy.system).epsilon = eps;
    return copy;
}

ModelInstance jin_xin_two_scale(Index d, double dx, double a,
                                std::function<Vec(const Vec&)> flux, GainField H,
                                GainField G, double epsilon) {
    if (!(a > 0.0)) throw ConfigError("jin_xin_two_scale: a must be positive");
    const Mat D = make_upwind(d, dx).matrix;
    if (H.eval(Vec::Zero(d)).rows() != d || G.eval(Vec::Zero(d)).rows() != d)
        throw DimensionMismatch("jin_xin_two_scale: gain shapes must be d x cols");

    TwoScaleSystem sys;
    sys.m = 2 * d;
    sys.n = d;
    sys.p = H.cols;
    sys.q = G.cols;
    sys.epsilon = epsilon;
    sys.omega_A = H.box;
    sys.omega_B = G.box;
    sys.A2 = MatrixField::constant(-Mat::Identity(d, d));
    sys.A1 = MatrixField(2 * d, d, [D, d](const Vec&) {
        Mat m = Mat::Zero(2 * d, d);
        m.topRows(d) = -D;
        return m;
    });
    sys.B1 = MatrixField(2 * d, H.cols, [H, d](const Vec& z) {
        Mat m = Mat::Zero(2 * d, H.cols);
        m.topRows(d) = H.eval(z.head(d));
        return m;
    });
    sys.B2 = MatrixField(d, G.cols, [G, d](const Vec& z) { return G.eval(z.head(d)); });
    sys.C1 = col_field(2 * d, [D, a, d](const Vec& z) {
        Vec c(2 * d);
        c.head(d) = -D * z.segment(d, d);
        c.tail(d) = -a * (D * z.head(d));
        return c;
    });
    sys.C2 = col_field(d, [flux, d](const Vec& z) {
        return Vec(flux(z.head(d)) - z.segment(d, d));
    });
    sys.validate();

    ModelInstance model;
    model.name = "jin-xin-2";
    model.system = std::move(sys);
    model.layout.slices = {{"u", 0, d, ScaleTag::Slow},
                           {"v", d, d, ScaleTag::Slow},
                           {"w", 2 * d, d, ScaleTag::Meso}};
    model.flux = flux;
    model.equilibrium = [flux, d](const Vec& z) {
        return Vec(flux(z.head(d)) - z.segment(d, d));
    };
    model.diagonalization = jin_xin_diagonalize(a);

    Vec u0 = sine_profile(d, 0.75, 0.25);
    model.initial_slow.resize(2 * d);
    model.initial_slow.head(d) = u0;
    model.initial_slow.tail(d) = flux(u0);
    model.initial_meso = Vec::Zero(d);  // omega_0 = 0 keeps v(.,0) = F(u0)
    return model;
}

ModelInstance jin_xin_three_scale(Index d, double dx, double a, double b,
                                  std::function<Vec(const Vec&)> flux0,
                                  std::function<Vec(const Vec&)> flux1, GainField H,
                                  GainField G, GainField K, double epsilon) {
    if (!(a > 0.0) || !(b > 0.0))
        throw ConfigError("jin_xin_three_scale: a and b must be positive");
    const Mat D = make_upwind(d, dx).matrix;

    ThreeScaleSystem sys;
    sys.m = 3 * d;
    sys.n = d;
    sys.l = d;
    sys.p = H.cols;
    sys.q = G.cols;
    sys.r = K.cols;
    sys.epsilon = epsilon;
    sys.omega_A = H.box;
    sys.omega_B = G.box;
    sys.omega_G = K.box;
    sys.A2 = MatrixField::constant(-Mat::Identity(d, d));
    sys.A3 = MatrixField::constant(-Mat::Identity(d, d));
    sys.A0 = MatrixField(3 * d, d, [d](const Vec&) {
        Mat m = Mat::Zero(3 * d, d);
        m.block(d, 0, d, d) = Mat::Identity(d, d);
        return m;
    });
    sys.A1 = MatrixField(3 * d, d, [D, d](const Vec&) {
        Mat m = Mat::Zero(3 * d, d);
        m.topRows(d) = -D;
        return m;
    });
    sys.B1 = MatrixField(3 * d, H.cols, [H, d](const Vec& z) {
        Mat m = Mat::Zero(3 * d, H.cols);
        m.topRows(d) = H.eval(z.head(d));
        return m;
    });
    sys.B2 = MatrixField(d, G.cols, [G, d](const Vec& z) { return G.eval(z.head(d)); });
    sys.B3 = MatrixField(d, K.cols, [K, d](const Vec& z) { return K.eval(z.head(d)); });
    sys.C1 = col_field(3 * d, [D, a, b, d](const Vec& z) {
        Vec c(3 * d);
        c.head(d) = -D * z.segment(d, d);
        c.segment(d, d) = -a * (D * z.head(d)) + z.segment(2 * d, d);
        c.tail(d) = -b * (D * z.head(d));
        return c;
    });
    sys.C2 = col_field(d, [flux0, d](const Vec& z) {
        return Vec(flux0(z.head(d)) - z.segment(d, d));
    });
    sys.C3 = col_field(d, [flux1, d](const Vec& z) {
        return Vec(flux1(z.head(d)) - z.segment(2 * d, d));
    });
    sys.validate();

    ModelInstance model;
    model.name = "jin-xin-3";
    model.system = std::move(sys);
    model.layout.slices = {{"u", 0, d, ScaleTag::Slow},
                           {"v", d, d, ScaleTag::Slow},
                           {"w", 2 * d, d, ScaleTag::Slow},
                           {"p", 3 * d, d, ScaleTag::Meso},
                           {"q", 4 * d, d, ScaleTag::Micro}};
    model.flux = flux0;
    model.flux1 = flux1;
    model.equilibrium = [flux0, d](const Vec& z) {
        return Vec(flux0(z.head(d)) - z.segment(d, d));
    };
    model.micro_equilibrium = [flux1, d](const Vec& z) {
        return Vec(flux1(z.head(d)) - z.segment(2 * d, d));
    };
    model.diagonalization = jin_xin_diagonalize(a);

    Vec u0 = sine_profile(d, 0.75, 0.25);
    model.initial_slow.resize(3 * d);
    model.initial_slow.head(d) = u0;
    model.initial_slow.segment(d, d) = flux0(u0);
    model.initial_slow.tail(d) = flux1(u0);
    model.initial_meso = Vec::Zero(d);
    model.initial_micro = Vec::Zero(d);
    return model;
}

ModelInstance goldstein_taylor_two_scale(Index d, double dx, GainField H, GainField G,
                                         double epsilon) {
    const Mat D = make_upwind(d, dx).matrix;

    TwoScaleSystem sys;
    sys.m = d;
    sys.n = d;
    sys.p = H.cols;
    sys.q = G.cols;
    sys.epsilon = epsilon;
    sys.omega_A = H.box;
    sys.omega_B = G.box;
    sys.A1 = MatrixField::constant(-D);
    sys.A2 = MatrixField::constant(-Mat::Identity(d, d));
    sys.B1 = MatrixField(d, H.cols, [H](const Vec& z) { return H.eval(z); });
    sys.B2 = MatrixField(d, G.cols, [G](const Vec& z) { return G.eval(z); });
    sys.C1 = col_field(d, [d](const Vec&) { return Vec(Vec::Zero(d)); });
    sys.C2 = col_field(d, [D](const Vec& z) { return Vec(-D * z); });
    sys.validate();

    ModelInstance model;
    model.name = "goldstein-taylor-2";
    model.system = std::move(sys);
    model.layout.slices = {{"rho", 0, d, ScaleTag::Slow}, {"J", d, d, ScaleTag::Meso}};
    model.equilibrium = [D](const Vec& z) { return Vec(-D * z); };

    model.initial_slow = sine_profile(d, 1.0, 0.5);
    model.initial_meso = -D * model.initial_slow;
    return model;
}

ModelInstance goldstein_taylor_three_scale(Index d, double dx, double a, double b,
                                           std::function<Vec(const Vec&)> flux1,
                                           GainField H, GainField G, GainField K,
                                           double epsilon) {
    if (a < 0.0 || b < 0.0)
        throw ConfigError("goldstein_taylor_three_scale: a and b must be >= 0");
    const Mat D = make_upwind(d, dx).matrix;

    ThreeScaleSystem sys;
    sys.m = 3 * d;
    sys.n = d;
    sys.l = d;
    sys.p = H.cols;
    sys.q = G.cols;
    sys.r = K.cols;
    sys.epsilon = epsilon;
    sys.omega_A = H.box;
    sys.omega_B = G.box;
    sys.omega_G = K.box;
    sys.A2 = MatrixField::constant(-Mat::Identity(d, d));
    sys.A3 = MatrixField::constant(-Mat::Identity(d, d));
    sys.A0 = MatrixField(3 * d, d, [d](const Vec&) {
        Mat m = Mat::Zero(3 * d, d);
        m.block(d, 0, d, d) = Mat::Identity(d, d);
        return m;
    });
    sys.A1 = MatrixField(3 * d, d, [D, d](const Vec&) {
        Mat m = Mat::Zero(3 * d, d);
        m.topRows(d) = -D;
        return m;
    });
    sys.B1 = MatrixField(3 * d, H.cols, [H, d](const Vec& z) {
        Mat m = Mat::Zero(3 * d, H.cols);
        m.topRows(d) = H.eval(z.head(d));
        return m;
    });
    sys.B2 = MatrixField(d, G.cols, [G, d](const Vec& z) { return G.eval(z.head(d)); });
    sys.B3 = MatrixField(d, K.cols, [K, d](const Vec& z) { return K.eval(z.head(d)); });
    sys.C1 = col_field(3 * d, [D, a, b, d](const Vec& z) {
        Vec c(3 * d);
        c.head(d) = -D * z.segment(d, d);
        c.segment(d, d) = -a * (D * z.head(d)) + z.segment(2 * d, d);
        c.tail(d) = -b * (D * z.head(d));
        return c;
    });
    sys.C2 = col_field(d, [D, d](const Vec& z) {
        return Vec(-z.segment(d, d) - D * z.head(d));
    });
    sys.C3 = col_field(d, [flux1, d](const Vec& z) {
        return Vec(flux1(z.head(d)) - z.segment(2 * d, d));
    });
    sys.validate();

    ModelInstance model;
    model.name = "goldstein-taylor-3";
    model.system = std::move(sys);
    model.layout.slices = {{"rho", 0, d, ScaleTag::Slow},
                           {"J", d, d, ScaleTag::Slow},
                           {"w", 2 * d, d, ScaleTag::Slow},
                           {"p", 3 * d, d, ScaleTag::Meso},
                           {"q", 4 * d, d, ScaleTag::Micro}};
    model.flux1 = flux1;
    model.equilibrium = [D, d](const Vec& z) {
        return Vec(-z.segment(d, d) - D * z.head(d));
    };
    model.micro_equilibrium = [flux1, d](const Vec& z) {
        return Vec(flux1(z.head(d)) - z.segment(2 * d, d));
    };

    Vec rho0 = sine_profile(d, 1.0, 0.5);
    model.initial_slow.resize(3 * d);
    model.initial_slow.head(d) = rho0;
    model.initial_slow.segment(d, d) = -D * rho0;
    model.initial_slow.tail(d) = flux1(rho0);
    model.initial_meso = Vec::Zero(d);
    model.initial_micro = Vec::Zero(d);
    return model;
}

ModelInstance shallow_water(Index d, double dx, GainField H, GainField G,
                            double epsilon) {
    const Mat D = make_upwind(d, dx).matrix;
    auto half_square = [](const Vec& h) { return Vec(0.5 * h.array().square()); };

    TwoScaleSystem sys;
    sys.m = 2 * d;
    sys.n = d;
    sys.p = H.cols;
    sys.q = G.cols;
    sys.epsilon = epsilon;
    sys.omega_A = H.box;
    sys.omega_B = G.box;
    sys.A2 = MatrixField::constant(-Mat::Identity(d, d));
    sys.A1 = MatrixField(2 * d, d, [D, d](const Vec&) {
        Mat m = Mat::Zero(2 * d, d);
        m.topRows(d) = -D;
        return m;
    });
    sys.B1 = MatrixField(2 * d, H.cols, [H, d](const Vec& z) {
        Mat m = Mat::Zero(2 * d, H.cols);
        m.topRows(d) = H.eval(z.head(d));
        return m;
    });
    sys.B2 = MatrixField(d, G.cols, [G, d](const Vec& z) { return G.eval(z.head(d)); });
    sys.C1 = col_field(2 * d, [D, half_square, d](const Vec& z) {
        Vec c(2 * d);
        c.head(d) = -D * z.segment(d, d);
        c.tail(d) = -D * z.head(d) - D * half_square(z.head(d));
        return c;
    });
    sys.C2 = col_field(d, [half_square, d](const Vec& z) {
        return Vec(half_square(z.head(d)) - z.segment(d, d));
    });
    sys.validate();

    ModelInstance model;
    model.name = "shallow-water-2";
    model.system = std::move(sys);
    model.layout.slices = {{"h", 0, d, ScaleTag::Slow},
                           {"f", d, d, ScaleTag::Slow},
                           {"g", 2 * d, d, ScaleTag::Meso}};
    model.flux = half_square;
    model.equilibrium = [half_square, d](const Vec& z) {
        return Vec(half_square(z.head(d)) - z.segment(d, d));
    };

    Vec h0 = sine_profile(d, 1.0, 0.3);
    model.initial_slow.resize(2 * d);
    model.initial_slow.head(d) = h0;
    model.initial_slow.tail(d) = Vec::Zero(d);
    model.initial_meso = half_square(h0);
    return model;
}

ModelInstance shallow_water_three_scale(Index d, double dx,
                                        std::function<Vec(const Vec&)> flux1,
                                        GainField H, GainField G, GainField K,
                                        double epsilon) {
    const Mat D = make_upwind(d, dx).matrix;
    auto half_square = [](const Vec& h) { return Vec(0.5 * h.array().square()); };

    ThreeScaleSystem sys;
    sys.m = 3 * d;
    sys.n = 2 * d;  // meso state is (g, p)
    sys.l = d;
    sys.p = H.cols;
    sys.q = G.cols;
    sys.r = K.cols;
    sys.epsilon = epsilon;
    sys.omega_A = H.box;
    sys.omega_B = G.box;
    sys.omega_G = K.box;
    sys.A2 = MatrixField(2 * d, 2 * d, [d](const Vec&) {
        Mat m = Mat::Zero(2 * d, 2 * d);
        m.block(0, 0, d, d) = -Mat::Identity(d, d);
        m.block(d, 0, d, d) = Mat::Identity(d, d);
        m.block(d, d, d, d) = -Mat::Identity(d, d);
        return m;
    });
    sys.A3 = MatrixField::constant(-Mat::Identity(d, d));
    sys.A0 = MatrixField(3 * d, d, [d](const Vec&) {
        Mat m = Mat::Zero(3 * d, d);
        m.block(2 * d, 0, d, d) = Mat::Identity(d, d);
        return m;
    });
    sys.A1 = MatrixField(3 * d, 2 * d, [D, d](const Vec&) {
        Mat m = Mat::Zero(3 * d, 2 * d);
        m.block(0, d, d, d) = -D;  // h-row sees the p block only
        return m;
    });
    sys.B1 = MatrixField(3 * d, H.cols, [H, d](const Vec& z) {
        Mat m = Mat::Zero(3 * d, H.cols);
        m.topRows(d) = H.eval(z.head(d));
        return m;
    });
    sys.B2 = MatrixField(2 * d, G.cols, [G, d](const Vec& z) {
        Mat m = Mat::Zero(2 * d, G.cols);
        m.topRows(d) = G.eval(z.head(d));
        return m;
    });
    sys.B3 = MatrixField(d, K.cols, [K, d](const Vec& z) { return K.eval(z.head(d)); });
    sys.C1 = col_field(3 * d, [D, half_square, d](const Vec& z) {
        Vec c(3 * d);
        c.head(d) = -D * z.segment(2 * d, d);  // -D k
        c.segment(d, d) = -D * z.head(d) - D * half_square(z.head(d));
        c.tail(d) = Vec::Zero(d);
        return c;
    });
    sys.C2 = col_field(2 * d, [half_square, d](const Vec& z) {
        Vec c(2 * d);
        c.head(d) = half_square(z.head(d)) - z.segment(d, d);   // (1/2)h^2 - f
        c.tail(d) = z.segment(d, d) - z.segment(2 * d, d);      // f - k
        return c;
    });
    sys.C3 = col_field(d, [flux1, d](const Vec& z) { return flux1(z.head(d)); });
    sys.validate();

    ModelInstance model;
    model.name = "shallow-water-3";
    model.system = std::move(sys);
    model.layout.slices = {{"h", 0, d, ScaleTag::Slow},
                           {"f", d, d, ScaleTag::Slow},
                           {"k", 2 * d, d, ScaleTag::Slow},
                           {"g", 3 * d, d, ScaleTag::Meso},
                           {"p", 4 * d, d, ScaleTag::Meso},
                           {"q", 5 * d, d, ScaleTag::Micro}};
    model.flux = half_square;
    model.flux1 = flux1;
    model.equilibrium = [half_square, d](const Vec& z) {
        Vec eq(2 * d);
        eq.head(d) = half_square(z.head(d)) - z.segment(d, d);
        eq.tail(d) = half_square(z.head(d)) - z.segment(2 * d, d);
        return eq;
    };
    model.micro_equilibrium = [flux1, d](const Vec& z) { return flux1(z.head(d)); };

    Vec h0 = sine_profile(d, 1.0, 0.3);
    model.initial_slow = Vec::Zero(3 * d);
    model.initial_slow.head(d) = h0;
    model.initial_meso.resize(2 * d);
    model.initial_meso.head(d) = half_square(h0);
    model.initial_meso.tail(d) = half_square(h0);
    model.initial_micro = flux1(h0);
    return model;
}

ModelInstance traffic_model(Index d, double dx, double A,
                            std::function<Vec(const Vec&)> V,
                            std::function<Vec(const Vec&)> P, GainField H, GainField G,
                            double epsilon, double density_floor) {
    if (!(A > 0.0)) throw ConfigError("traffic_model: A must be positive");
    const Mat D = make_upwind(d, dx).matrix;

    // v recovered from rho v = f + g - rho P(rho), component-wise.
    auto velocity = [V, P, D, d, density_floor](const Vec& rho, const Vec& g,
                                                const Vec& f) {
        check_density(rho, density_floor, "traffic_model");
        return Vec((f + g).cwiseQuotient(rho) - P(rho));
    };

    TwoScaleSystem sys;
    sys.m = 2 * d;
    sys.n = d;
    sys.p = H.cols;
    sys.q = G.cols;
    sys.epsilon = epsilon;
    sys.omega_A = H.box;
    sys.omega_B = G.box;
    sys.A2 = MatrixField::constant(-A * Mat::Identity(d, d));
    sys.B2 = MatrixField(d, G.cols,
                         [G, A, d](const Vec& z) { return Mat(A * G.eval(z.head(d))); });
    sys.C2 = col_field(d, [V, P, A, d, density_floor](const Vec& z) {
        const Vec rho = z.head(d);
        check_density(rho, density_floor, "traffic_model");
        return Vec(A * (rho.cwiseProduct(V(rho)) + rho.cwiseProduct(P(rho)) -
                        z.segment(d, d)));
    });
    sys.B1 = MatrixField(2 * d, H.cols, [H, d](const Vec& z) {
        Mat m = Mat::Zero(2 * d, H.cols);
        m.topRows(d) = H.eval(z.head(d));
        return m;
    });

    // Exact slow drift of the semi-discrete model; the g-row is quadratic in
    // the fast state, so it cannot be an affine field of z.
    sys.slow_drift = [velocity, D, d](const Vec& z, const Vec& f) {
        const Vec rho = z.head(d);
        const Vec g = z.segment(d, d);
        const Vec v = velocity(rho, g, f);
        Vec out(2 * d);
        out.head(d) = -v.cwiseProduct(D * rho) - rho.cwiseProduct(D * v);
        const Vec fg = f + g;
        out.tail(d) = -fg.cwiseProduct(D * v) - v.cwiseProduct(D * fg);
        return out;
    };

    // Affine fields: exact rho-row, tangent g-row at the beta = 0 equilibrium
    // f_bar = rho (V + P) - g. Used by the Hamiltonian-level operations only.
    auto tangent = [V, P, D, d, density_floor](const Vec& z) {
        const Vec rho = z.head(d);
        check_density(rho, density_floor, "traffic_model");
        const Vec rho_inv = rho.cwiseInverse();
        const Vec vbar = V(rho);
        const Vec ubar = rho.cwiseProduct(V(rho) + P(rho));
        Mat a1 = Mat::Zero(2 * d, d);
        a1.topRows(d) =
            -diag(D * rho) * diag(rho_inv) - diag(rho) * D * diag(rho_inv);
        a1.bottomRows(d) = -diag(D * vbar) - diag(ubar) * D * diag(rho_inv) -
                           diag(D * ubar) * diag(rho_inv) - diag(vbar) * D;
        return a1;
    };
    sys.A1 = MatrixField(2 * d, d, tangent);
    // The constant part pins the tangent model to the exact drift at f_bar.
    sys.C1 = col_field(2 * d, [tangent, V, P, D, d, density_floor](const Vec& z) {
        const Vec rho = z.head(d);
        const Vec g = z.segment(d, d);
        check_density(rho, density_floor, "traffic_model");
        const Vec fbar = rho.cwiseProduct(V(rho) + P(rho)) - g;
        const Vec vbar = V(rho);
        const Vec ubar = fbar + g;
        Vec drift_bar(2 * d);
        drift_bar.head(d) = -vbar.cwiseProduct(D * rho) - rho.cwiseProduct(D * vbar);
        drift_bar.tail(d) = -ubar.cwiseProduct(D * vbar) - vbar.cwiseProduct(D * ubar);
        Vec c = drift_bar - tangent(z) * fbar;
        return c;
    });
    sys.validate();

    ModelInstance model;
    model.name = "traffic";
    model.system = std::move(sys);
    model.layout.slices = {{"rho", 0, d, ScaleTag::Slow},
                           {"g", d, d, ScaleTag::Slow},
                           {"f", 2 * d, d, ScaleTag::Meso}};
    model.equilibrium = [V, P, d, density_floor](const Vec& z) {
        const Vec rho = z.head(d);
        check_density(rho, density_floor, "traffic_model");
        return Vec(rho.cwiseProduct(V(rho)) + rho.cwiseProduct(P(rho)) -
                   z.segment(d, d));
    };

    Vec rho0 = sine_profile(d, 0.5, 0.2);
    model.initial_slow = Vec::Zero(2 * d);
    model.initial_slow.head(d) = rho0;
    model.initial_meso = model.equilibrium(model.initial_slow);
    return model;
}

ModelInstance granular_model(Index d, double dx, double e, double grav,
                             std::function<Vec(const Vec&)> G_corr,
                             std::function<Vec(const Vec&)> Tfield, GainField H,
                             GainField G, GainField K, double epsilon,
                             double density_floor) {
    if (e < 0.0 || e > 1.0)
        throw ConfigError("granular_model: restitution e must lie in [0, 1]");
    const Mat D = make_upwind(d, dx).matrix;

    if (!Tfield) {
        // Temperature recovered from the energy slice, the relaxation
        // deviation omitted: rho T = (2/3) w - (1/3) u v.
        Tfield = [d, density_floor](const Vec& z) {
            const Vec rho = z.head(d);
            check_density(rho, density_floor, "granular_model");
            const Vec u = z.segment(d, d).cwiseQuotient(rho);
            const Vec rhoT =
                (2.0 / 3.0) * z.segment(2 * d, d) -
                (1.0 / 3.0) * u.cwiseProduct(z.segment(d, d));
            return Vec(rhoT.cwiseQuotient(rho));
        };
    }

    auto temperature = [Tfield](const Vec& z) {
        Vec t = Tfield(z);
        for (Index i = 0; i < t.size(); ++i)
            if (t[i] < 0.0)
                throw NegativeTemperature("granular_model: T = " + std::to_string(t[i]) +
                                          " at cell " + std::to_string(i));
        return t;
    };
    auto relaxation_rate = [temperature, G_corr, e, d, density_floor](const Vec& z) {
        const Vec rho = z.head(d);
        check_density(rho, density_floor, "granular_model");
        const Vec t = temperature(z);
        return Vec((2.0 * (1.0 - e * e) / 3.0) * G_corr(rho).cwiseProduct(rho)
                       .cwiseProduct(t.cwiseSqrt()));
    };
    auto pressure_gain = [G_corr, e, d, density_floor](const Vec& z) {
        const Vec rho = z.head(d);
        check_density(rho, density_floor, "granular_model");
        return Vec(Vec::Ones(d) + 2.0 * (1.0 + e) * G_corr(rho));
    };

    TwoScaleSystem sys;
    sys.m = 3 * d;
    sys.n = d;
    sys.p = H.cols + K.cols;  // slow control is (alpha, gamma)
    sys.q = G.cols;
    sys.epsilon = epsilon;
    sys.omega_A = H.box.stacked(K.box);
    sys.omega_B = G.box;
    sys.A2 = MatrixField(d, d, [relaxation_rate](const Vec& z) {
        return Mat(-Mat(relaxation_rate(z).asDiagonal()));
    });
    sys.B2 = MatrixField(d, G.cols, [relaxation_rate, G, d](const Vec& z) {
        return Mat(relaxation_rate(z).asDiagonal() * G.eval(z.head(d)));
    });
    sys.C2 = col_field(d, [relaxation_rate, d](const Vec& z) {
        const Vec u = z.segment(d, d).cwiseQuotient(z.head(d));
        const Vec bracket = 0.5 * u.cwiseProduct(z.segment(d, d)) - z.segment(2 * d, d);
        return Vec(relaxation_rate(z).cwiseProduct(bracket));
    });
    sys.A1 = MatrixField(3 * d, d, [pressure_gain, D, d](const Vec& z) {
        const Vec rho = z.head(d);
        const Vec u = z.segment(d, d).cwiseQuotient(rho);
        const Vec cp = pressure_gain(z);
        const Vec kappa = Vec::Ones(d) + (2.0 / 3.0) * cp;
        Mat a1 = Mat::Zero(3 * d, d);
        a1.block(d, 0, d, d) = -D * diag((2.0 / 3.0) * cp);
        a1.block(2 * d, 0, d, d) = -diag(u) * D * diag(kappa) - diag(D * u) * diag(kappa);
        return a1;
    });
    sys.B1 = MatrixField(3 * d, H.cols + K.cols, [H, K, d](const Vec& z) {
        Mat m = Mat::Zero(3 * d, H.cols + K.cols);
        m.block(0, 0, d, H.cols) = H.eval(z.head(d));
        m.block(d, H.cols, d, K.cols) = K.eval(z.head(d));
        return m;
    });
    sys.C1 = col_field(3 * d, [pressure_gain, D, grav, d](const Vec& z) {
        const Vec rho = z.head(d);
        const Vec v = z.segment(d, d);
        const Vec w = z.segment(2 * d, d);
        const Vec u = v.cwiseQuotient(rho);
        const Vec cp = pressure_gain(z);
        const Vec p0 = cp.cwiseProduct((2.0 / 3.0) * w - (1.0 / 3.0) * u.cwiseProduct(v));
        const Vec s0 = w + p0;
        Vec c(3 * d);
        c.head(d) = -D * v;
        c.segment(d, d) = grav * rho - u.cwiseProduct(D * v) - v.cwiseProduct(D * u) - D * p0;
        c.tail(d) = -u.cwiseProduct(D * s0) - s0.cwiseProduct(D * u);
        return c;
    });
    sys.validate();

    ModelInstance model;
    model.name = "granular";
    model.system = std::move(sys);
    model.layout.slices = {{"rho", 0, d, ScaleTag::Slow},
                           {"v", d, d, ScaleTag::Slow},
                           {"w", 2 * d, d, ScaleTag::Slow},
                           {"phi", 3 * d, d, ScaleTag::Meso}};
    model.equilibrium = [d, density_floor](const Vec& z) {
        const Vec rho = z.head(d);
        check_density(rho, density_floor, "granular_model");
        const Vec u = z.segment(d, d).cwiseQuotient(rho);
        return Vec(0.5 * u.cwiseProduct(z.segment(d, d)) - z.segment(2 * d, d));
    };

    Vec rho0 = sine_profile(d, 1.0, 0.2);
    Vec u0 = sine_profile(d, 0.1, 0.05, 2.0);
    Vec v0 = rho0.cwiseProduct(u0);
    model.initial_slow.resize(3 * d);
    model.initial_slow.head(d) = rho0;
    model.initial_slow.segment(d, d) = v0;
    model.initial_slow.tail(d) = 1.5 * rho0 + 0.5 * u0.cwiseProduct(v0);  // T0 = 1
    model.initial_meso = Vec::Zero(d);
    return model;
}

double local_equilibrium_residual(const ModelInstance& model, const Vec& state,
                                  const Vec& beta, const Vec& gamma) {
    if (state.size() != model.layout.total_width())
        throw LayoutMismatch("local_equilibrium_residual: state size does not match layout");
    if (model.three_scale()) {
        const auto& sys = model.three();
        const Vec z = state.head(sys.m);
        const Vec y = state.segment(sys.m, sys.n);
        const Vec x = state.tail(sys.l);
        const Vec g = gamma.size() ? gamma : Vec(Vec::Zero(sys.r));
        const double meso = sys.meso_velocity(z, y, beta).lpNorm<Eigen::Infinity>();
        const double micro = sys.micro_velocity(z, x, g).lpNorm<Eigen::Infinity>();
        return std::max(meso, micro);
    }
    const auto& sys = model.two();
    const Vec z = state.head(sys.m);
    const Vec y = state.tail(sys.n);
    return sys.fast_velocity(z, y, beta).lpNorm<Eigen::Infinity>();
}

namespace {

double param(const std::map<std::string, double>& params, const std::string& key,
             double fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

void reject_unknown(const std::map<std::string, double>& params,
                    std::initializer_list<const char*> known) {
    for (const auto& [key, value] : params) {
        bool ok = false;
        for (const char* k : known)
            if (key == k) ok = true;
        if (!ok) throw ConfigError("unknown model parameter '" + key + "'");
    }
}

}  // namespace

std::vector<std::string> model_registry_names() {
    return {"jin-xin-2",          "jin-xin-3",          "goldstein-taylor-2",
            "goldstein-taylor-3", "shallow-water-2",    "shallow-water-3",
            "traffic",            "granular"};
}

ModelInstance make_model(const std::string& name,
                         const std::map<std::string, double>& params) {
    const Index d = static_cast<Index>(param(params, "d", 16));
    const double dx = param(params, "dx", 1.0);
    const double eps = param(params, "epsilon", 1e-2);
    const double kH = param(params, "kappa_H", 0.2);
    const double kG = param(params, "kappa_G", 0.5);
    const double kK = param(params, "kappa_K", 0.3);
    GainField H = GainField::spatial_pair(d, dx, kH);
    GainField G = GainField::spatial_pair(d, dx, kG);
    GainField K = GainField::spatial_pair(d, dx, kK);

    auto burgers = [](const Vec& u) { return Vec(0.5 * u.array().square()); };
    auto small_sine = [](const Vec& u) { return Vec(0.2 * u.array().sin()); };

    if (name == "jin-xin-2") {
        reject_unknown(params, {"d", "dx", "epsilon", "kappa_H", "kappa_G", "a"});
        return jin_xin_two_scale(d, dx, param(params, "a", 1.5), burgers, H, G, eps);
    }
    if (name == "jin-xin-3") {
        reject_unknown(params,
                       {"d", "dx", "epsilon", "kappa_H", "kappa_G", "kappa_K", "a", "b"});
        return jin_xin_three_scale(d, dx, param(params, "a", 1.5),
                                   param(params, "b", 1.0), burgers, small_sine, H, G, K,
                                   eps);
    }
    if (name == "goldstein-taylor-2") {
        reject_unknown(params, {"d", "dx", "epsilon", "kappa_H", "kappa_G"});
        return goldstein_taylor_two_scale(d, dx, H, G, eps);
    }
    if (name == "goldstein-taylor-3") {
        reject_unknown(params,
                       {"d", "dx", "epsilon", "kappa_H", "kappa_G", "kappa_K", "a", "b"});
        return goldstein_taylor_three_scale(d, dx, param(params, "a", 0.5),
                                            param(params, "b", 0.5), small_sine, H, G, K,
                                            eps);
    }
    if (name == "shallow-water-2") {
        reject_unknown(params, {"d", "dx", "epsilon", "kappa_H", "kappa_G"});
        return shallow_water(d, dx, H, G, eps);
    }
    if (name == "shallow-water-3") {
        reject_unknown(params, {"d", "dx", "epsilon", "kappa_H", "kappa_G", "kappa_K"});
        return shallow_water_three_scale(d, dx, small_sine, H, G, K, eps);
    }
    if (name == "traffic") {
        reject_unknown(params, {"d", "dx", "epsilon", "kappa_H", "kappa_G", "A", "floor"});
        auto V = [](const Vec& rho) { return Vec(Vec::Ones(rho.size()) - rho); };
        auto P = [](const Vec& rho) { return Vec(0.5 * rho); };
        return traffic_model(d, dx, param(params, "A", 1.0), V, P, H, G, eps,
                             param(params, "floor", 1e-8));
    }
    if (name == "granular") {
        reject_unknown(params, {"d", "dx", "epsilon", "kappa_H", "kappa_G", "kappa_K", "e",
                                "grav", "floor"});
        auto ones = [](const Vec& rho) { return Vec(Vec::Ones(rho.size())); };
        return granular_model(d, dx, param(params, "e", 0.5), param(params, "grav", 0.0),
                              ones, nullptr, H, G, K, eps, param(params, "floor", 1e-8));
    }
    throw ConfigError("unknown model '" + name + "'");
}

}  // namespace relax
