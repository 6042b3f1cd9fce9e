#include "relax/reduction.hpp"

#include <Eigen/LU>

namespace relax {

namespace {

constexpr double kConditionLimit = 1e12;
constexpr double kResidualTol = 1e-10;

// Solves A x = rhs (possibly multiple columns) with a condition estimate.
Mat stable_solve(const Mat& a, const Mat& rhs, const char* who) {
    Eigen::PartialPivLU<Mat> lu(a);
    const double rcond = lu.rcond();
    if (!(rcond > 1.0 / kConditionLimit))
        throw SingularFastMatrix(std::string(who) +
                                 ": condition estimate exceeds 1e12");
    Mat x = lu.solve(rhs);
    if (!x.allFinite())
        throw SingularFastMatrix(std::string(who) + ": non-finite solve result");
    return x;
}

Vec static_root(const Mat& a2, const Mat& b2, const Vec& c2, const Vec& beta,
                const char* who) {
    if (beta.size() != b2.cols())
        throw DimensionMismatch(std::string(who) + ": control size mismatch");
    Vec psi = stable_solve(a2, -(b2 * beta + c2), who);
    const double residual = (a2 * psi + b2 * beta + c2).lpNorm<Eigen::Infinity>();
    if (!(residual <= kResidualTol * (1.0 + c2.lpNorm<Eigen::Infinity>())))
        throw SingularFastMatrix(std::string(who) + ": static residual " +
                                 std::to_string(residual) + " above tolerance");
    return psi;
}

}  // namespace

Vec solve_static(const TwoScaleSystem& sys, const Vec& z, const Vec& beta) {
    return static_root(sys.A2(z), sys.B2(z), sys.C2(z).col(0), beta, "solve_static");
}

Vec solve_static_micro(const ThreeScaleSystem& sys, const Vec& z, const Vec& gamma) {
    return static_root(sys.A3(z), sys.B3(z), sys.C3(z).col(0), gamma,
                       "solve_static_micro");
}

ReducedSystem build_reduced(const TwoScaleSystem& sys) {
    auto source = std::make_shared<const TwoScaleSystem>(sys);
    ReducedSystem red;
    red.m = sys.m;
    red.p = sys.p;
    red.q = sys.q;
    red.omega_A = sys.omega_A;
    red.omega_B = sys.omega_B;
    red.provenance = source;
    red.rhs = [source](const Vec& z, const Vec& alpha, const Vec& beta) -> Vec {
        Vec psi = solve_static(*source, z, beta);
        return source->slow_velocity(z, psi) + source->B1(z) * alpha;
    };
    return red;
}

double lambda1_closed_form(const TwoScaleSystem& sys, const Vec& z, const Vec& p) {
    if (p.size() != sys.m)
        throw DimensionMismatch("lambda1_closed_form: costate size must be m");
    const Mat a1 = sys.A1(z);
    const Mat a2 = sys.A2(z);
    const Mat b2 = sys.B2(z);
    const Vec c2 = sys.C2(z).col(0);
    // psi(z, beta) = psi0 + S beta with psi0 = -A2^{-1} C2, S = -A2^{-1} B2.
    Eigen::PartialPivLU<Mat> lu(a2);
    if (!(lu.rcond() > 1.0 / kConditionLimit))
        throw SingularFastMatrix("lambda1_closed_form: A2 condition exceeds 1e12");
    Vec psi0 = lu.solve(-c2);
    Mat s = lu.solve(-b2);
    return -p.dot(a1 * psi0) + box_sup(s.transpose() * a1.transpose() * p, sys.omega_B).value;
}

double effective_hamiltonian(const TwoScaleSystem& sys, const Vec& z, const Vec& p) {
    return -p.dot(sys.C1(z).col(0)) +
           box_sup(sys.B1(z).transpose() * p, sys.omega_A).value +
           lambda1_closed_form(sys, z, p);
}

double lambda2_closed_form(const ThreeScaleSystem& sys, const Vec& z, const Vec& p) {
    if (p.size() != sys.m)
        throw DimensionMismatch("lambda2_closed_form: costate size must be m");
    const Mat a0 = sys.A0(z);
    const Mat a3 = sys.A3(z);
    const Mat b3 = sys.B3(z);
    const Vec c3 = sys.C3(z).col(0);
    Eigen::PartialPivLU<Mat> lu(a3);
    if (!(lu.rcond() > 1.0 / kConditionLimit))
        throw SingularFastMatrix("lambda2_closed_form: A3 condition exceeds 1e12");
    Vec psi0 = lu.solve(-c3);
    Mat s = lu.solve(-b3);
    return -p.dot(a0 * psi0) + box_sup(s.transpose() * a0.transpose() * p, sys.omega_G).value;
}

CascadeResult cascade_reduce(const ThreeScaleSystem& sys3) {
    auto source = std::make_shared<const ThreeScaleSystem>(sys3);

    CascadeResult out;
    TwoScaleSystem& meso = out.meso;
    meso.m = sys3.m;
    meso.n = sys3.n;
    meso.p = sys3.p + sys3.r;  // slow control is (alpha, gamma)
    meso.q = sys3.q;
    meso.A1 = sys3.A1;
    meso.A2 = sys3.A2;
    meso.B2 = sys3.B2;
    meso.C2 = sys3.C2;
    meso.omega_A = sys3.omega_A.stacked(sys3.omega_G);
    meso.omega_B = sys3.omega_B;
    meso.epsilon = sys3.epsilon;

    // Micro elimination: the slow drift gains A0(z) psi_micro(z, gamma) with
    // psi_micro affine in gamma, so the gamma part folds into B1 and the
    // offset into C1.
    meso.B1 = MatrixField(sys3.m, meso.p, [source](const Vec& z) {
        Mat b1 = source->B1(z);
        Mat a0 = source->A0(z);
        Mat s = -source->A3(z).partialPivLu().solve(source->B3(z));
        Mat stacked(source->m, source->p + source->r);
        stacked << b1, a0 * s;
        return stacked;
    });
    meso.C1 = MatrixField(sys3.m, 1, [source](const Vec& z) {
        Vec zero_gamma = Vec::Zero(source->r);
        Vec psi0 = solve_static_micro(*source, z, zero_gamma);
        Mat c(source->m, 1);
        c.col(0) = source->C1(z).col(0) + source->A0(z) * psi0;
        return c;
    });

    out.macro = build_reduced(meso);
    return out;
}

}  // namespace relax
