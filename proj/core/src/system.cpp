#include "relax/system.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace relax {

namespace {

void require_shape(const MatrixField& f, Index rows, Index cols, const char* name) {
    if (f.rows != rows || f.cols != cols)
        throw DimensionMismatch(std::string(name) + ": declared " +
                                std::to_string(f.rows) + "x" + std::to_string(f.cols) +
                                ", expected " + std::to_string(rows) + "x" +
                                std::to_string(cols));
}

}  // namespace

void TwoScaleSystem::validate() const {
    require_shape(A1, m, n, "A1");
    require_shape(A2, n, n, "A2");
    require_shape(B1, m, p, "B1");
    require_shape(B2, n, q, "B2");
    require_shape(C1, m, 1, "C1");
    require_shape(C2, n, 1, "C2");
    if (omega_A.dim() != p) throw DimensionMismatch("omega_A dimension != p");
    if (omega_B.dim() != q) throw DimensionMismatch("omega_B dimension != q");
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
}

Vec TwoScaleSystem::slow_velocity(const Vec& z, const Vec& y) const {
    if (slow_drift) return slow_drift(z, y);
    return A1(z) * y + C1(z).col(0);
}

Vec TwoScaleSystem::fast_velocity(const Vec& z, const Vec& y, const Vec& beta) const {
    return A2(z) * y + B2(z) * beta + C2(z).col(0);
}

void ThreeScaleSystem::validate() const {
    require_shape(A0, m, l, "A0");
    require_shape(A1, m, n, "A1");
    require_shape(A2, n, n, "A2");
    require_shape(A3, l, l, "A3");
    require_shape(B1, m, p, "B1");
    require_shape(B2, n, q, "B2");
    require_shape(B3, l, r, "B3");
    require_shape(C1, m, 1, "C1");
    require_shape(C2, n, 1, "C2");
    require_shape(C3, l, 1, "C3");
    if (omega_A.dim() != p) throw DimensionMismatch("omega_A dimension != p");
    if (omega_B.dim() != q) throw DimensionMismatch("omega_B dimension != q");
    if (omega_G.dim() != r) throw DimensionMismatch("omega_G dimension != r");
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
}

Vec ThreeScaleSystem::slow_velocity(const Vec& z, const Vec& y, const Vec& x) const {
    return A0(z) * x + A1(z) * y + C1(z).col(0);
}

Vec ThreeScaleSystem::meso_velocity(const Vec& z, const Vec& y, const Vec& beta) const {
    return A2(z) * y + B2(z) * beta + C2(z).col(0);
}

Vec ThreeScaleSystem::micro_velocity(const Vec& z, const Vec& x, const Vec& gamma) const {
    return A3(z) * x + B3(z) * gamma + C3(z).col(0);
}

TwoScaleSystem ThreeScaleSystem::embedded_two_scale() const {
    TwoScaleSystem two;
    two.m = m;
    two.n = n;
    two.p = p;
    two.q = q;
    two.A1 = A1;
    two.A2 = A2;
    two.B1 = B1;
    two.B2 = B2;
    two.C1 = C1;
    two.C2 = C2;
    two.omega_A = omega_A;
    two.omega_B = omega_B;
    two.epsilon = epsilon;
    return two;
}

double StabilityReport::worst() const {
    double w = -std::numeric_limits<double>::infinity();
    for (const auto& s : samples) w = std::max(w, s.max_real_part);
    return w;
}

StabilityReport validate_stability(const MatrixField& block,
                                   const std::vector<Vec>& samples, double margin) {
    if (samples.empty()) throw ConfigError("validate_stability: no sample states");
    if (!(margin > 0.0)) throw ConfigError("validate_stability: margin must be positive");
    StabilityReport report;
    report.margin = margin;
    report.passed = true;
    for (const Vec& z : samples) {
        Mat a = block.eval ? block.eval(z) : Mat();
        if (a.rows() != block.rows || a.cols() != block.cols || a.rows() != a.cols())
            throw DimensionMismatch("validate_stability: fast block must be square");
        if (!a.allFinite())
            throw NonFiniteMatrix("validate_stability: fast block has NaN/Inf entries");
        Eigen::EigenSolver<Mat> es(a, /*computeEigenvectors=*/false);
        if (es.info() != Eigen::Success)
            throw EigenFailure("validate_stability: eigen-solve did not converge");
        const double max_re = es.eigenvalues().real().maxCoeff();
        report.samples.push_back({z, max_re});
        if (!(max_re <= -margin)) report.passed = false;
    }
    return report;
}

StabilityReport validate_stability(const TwoScaleSystem& sys,
                                   const std::vector<Vec>& samples, double margin) {
    return validate_stability(sys.A2, samples, margin);
}

double validate_controllability(const TwoScaleSystem& sys, const Vec& z) {
    Mat b = sys.B2(z);
    if (b.rows() != sys.n || b.cols() != sys.q)
        throw DimensionMismatch("validate_controllability: B2(z) is not n x q");
    Eigen::JacobiSVD<Mat> svd(b);
    const double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
    const double tol = std::max(b.rows(), b.cols()) * smax *
                       std::numeric_limits<double>::epsilon();
    Index rank = 0;
    for (Index i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()(i) > tol) ++rank;
    if (rank < sys.n) return 0.0;
    const double smin = svd.singularValues()(sys.n - 1);
    return smin * sys.omega_B.min_halfwidth();
}

double hamiltonian_full(const TwoScaleSystem& sys, const Vec& z, const Vec& y,
                        const Vec& p, const Vec& q) {
    if (p.size() != sys.m || q.size() != sys.n)
        throw DimensionMismatch("hamiltonian_full: costate sizes must be (m, n)");
    const double slow = -(sys.A1(z) * y + sys.C1(z).col(0)).dot(p) +
                        box_sup(sys.B1(z).transpose() * p, sys.omega_A).value;
    const double fast = -(sys.A2(z) * y + sys.C2(z).col(0)).dot(q) +
                        box_sup(sys.B2(z).transpose() * q, sys.omega_B).value;
    return slow + fast;
}

double hamiltonian_three_scale(const ThreeScaleSystem& sys, const Vec& z,
                               const Vec& y, const Vec& x, const Vec& p,
                               const Vec& q, const Vec& r) {
    if (p.size() != sys.m || q.size() != sys.n || r.size() != sys.l)
        throw DimensionMismatch("hamiltonian_three_scale: costate sizes must be (m, n, l)");
    const double h1 = -(sys.A0(z) * x + sys.A1(z) * y + sys.C1(z).col(0)).dot(p) +
                      box_sup(sys.B1(z).transpose() * p, sys.omega_A).value;
    const double h2 = -(sys.A2(z) * y + sys.C2(z).col(0)).dot(q) +
                      box_sup(sys.B2(z).transpose() * q, sys.omega_B).value;
    const double h3 = -(sys.A3(z) * x + sys.C3(z).col(0)).dot(r) +
                      box_sup(sys.B3(z).transpose() * r, sys.omega_G).value;
    return h1 + h2 + h3;
}

}  // namespace relax
