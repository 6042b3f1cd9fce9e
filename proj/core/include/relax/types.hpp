#pragma once

#include <Eigen/Dense>

#include <functional>
#include <stdexcept>
#include <string>

namespace relax {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

// Every failure mode carries a stable name so the CLI can report it on stderr
// and map it to an exit code.
class Error : public std::runtime_error {
public:
    Error(std::string name, const std::string& what)
        : std::runtime_error(what), name_(std::move(name)) {}
    const std::string& name() const { return name_; }

private:
    std::string name_;
};

#define RELAX_DEFINE_ERROR(E)                                        \
    class E : public Error {                                         \
    public:                                                          \
        explicit E(const std::string& what) : Error(#E, what) {}     \
    }

RELAX_DEFINE_ERROR(DimensionMismatch);
RELAX_DEFINE_ERROR(NonFiniteMatrix);
RELAX_DEFINE_ERROR(EigenFailure);
RELAX_DEFINE_ERROR(SingularFastMatrix);
RELAX_DEFINE_ERROR(NonFiniteState);
RELAX_DEFINE_ERROR(GridMismatch);
RELAX_DEFINE_ERROR(CflViolation);
RELAX_DEFINE_ERROR(GridTooLarge);
RELAX_DEFINE_ERROR(NoConvergence);
RELAX_DEFINE_ERROR(NonFiniteValue);
RELAX_DEFINE_ERROR(LayoutMismatch);
RELAX_DEFINE_ERROR(DensityFloor);
RELAX_DEFINE_ERROR(NegativeTemperature);
RELAX_DEFINE_ERROR(BoundsExceeded);
RELAX_DEFINE_ERROR(IoError);
RELAX_DEFINE_ERROR(ConfigError);

#undef RELAX_DEFINE_ERROR

/// Axis-aligned box of admissible control values.
struct ControlBox {
    Vec lower;
    Vec upper;

    ControlBox() = default;
    ControlBox(Vec lo, Vec hi);

    static ControlBox symmetric(Index dim, double halfwidth);

    Index dim() const { return lower.size(); }
    Vec midpoint() const { return 0.5 * (lower + upper); }
    Vec halfwidth() const { return 0.5 * (upper - lower); }
    double min_halfwidth() const { return halfwidth().minCoeff(); }
    bool contains(const Vec& u, double tol = 1e-12) const;
    Vec clamp(const Vec& u) const;

    /// Vertex selected by bitmask: bit i set -> upper[i], else lower[i].
    Vec vertex(unsigned long mask) const;
    /// All 2^dim vertices followed by the midpoint.
    std::vector<Vec> vertices_and_midpoint() const;

    /// Product box (this x other), coordinates of `other` appended.
    ControlBox stacked(const ControlBox& other) const;
};

/// Matrix-valued function of the slow state. Shape is fixed; evaluation is
/// checked for shape and finiteness on every call.
struct MatrixField {
    Index rows = 0;
    Index cols = 0;
    std::function<Mat(const Vec&)> eval;

    MatrixField() = default;
    MatrixField(Index r, Index c, std::function<Mat(const Vec&)> f)
        : rows(r), cols(c), eval(std::move(f)) {}

    static MatrixField constant(const Mat& value);
    static MatrixField zero(Index r, Index c);

    Mat operator()(const Vec& z) const;
};

struct BoxSupResult {
    double value = 0.0;
    Vec argmax;
};

/// max over u in box of -c.u, attained coordinate-wise; zero coefficients
/// resolve to the interval midpoint.
BoxSupResult box_sup(const Vec& coeff, const ControlBox& box);

bool is_finite(const Vec& v);
bool is_finite(const Mat& m);

}  // namespace relax
