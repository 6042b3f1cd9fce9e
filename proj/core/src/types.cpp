#include "relax/types.hpp"

namespace relax {

bool is_finite(const Vec& v) { return v.allFinite(); }
bool is_finite(const Mat& m) { return m.allFinite(); }

ControlBox::ControlBox(Vec lo, Vec hi) : lower(std::move(lo)), upper(std::move(hi)) {
    if (lower.size() != upper.size())
        throw DimensionMismatch("ControlBox: lower/upper size mismatch");
    if (lower.size() == 0)
        throw DimensionMismatch("ControlBox: box must have dimension >= 1");
    for (Index i = 0; i < lower.size(); ++i)
        if (!(lower[i] <= upper[i]))
            throw DimensionMismatch("ControlBox: lower[" + std::to_string(i) +
                                    "] > upper[" + std::to_string(i) + "]");
}

ControlBox ControlBox::symmetric(Index dim, double halfwidth) {
    return ControlBox(Vec::Constant(dim, -halfwidth), Vec::Constant(dim, halfwidth));
}

bool ControlBox::contains(const Vec& u, double tol) const {
    if (u.size() != dim()) return false;
    for (Index i = 0; i < dim(); ++i)
        if (u[i] < lower[i] - tol || u[i] > upper[i] + tol) return false;
    return true;
}

Vec ControlBox::clamp(const Vec& u) const {
    if (u.size() != dim()) throw DimensionMismatch("ControlBox::clamp: size mismatch");
    return u.cwiseMax(lower).cwiseMin(upper);
}

Vec ControlBox::vertex(unsigned long mask) const {
    Vec v(dim());
    for (Index i = 0; i < dim(); ++i)
        v[i] = (mask >> i) & 1ul ? upper[i] : lower[i];
    return v;
}

std::vector<Vec> ControlBox::vertices_and_midpoint() const {
    if (dim() > 20)
        throw DimensionMismatch("ControlBox: vertex enumeration limited to dim <= 20");
    std::vector<Vec> out;
    const unsigned long count = 1ul << dim();
    out.reserve(count + 1);
    for (unsigned long mask = 0; mask < count; ++mask) out.push_back(vertex(mask));
    out.push_back(midpoint());
    return out;
}

ControlBox ControlBox::stacked(const ControlBox& other) const {
    Vec lo(dim() + other.dim()), hi(dim() + other.dim());
    lo << lower, other.lower;
    hi << upper, other.upper;
    return ControlBox(std::move(lo), std::move(hi));
}

MatrixField MatrixField::constant(const Mat& value) {
    Mat v = value;
    return MatrixField(v.rows(), v.cols(), [v](const Vec&) { return v; });
}

MatrixField MatrixField::zero(Index r, Index c) {
    return constant(Mat::Zero(r, c));
}

Mat MatrixField::operator()(const Vec& z) const {
    if (!eval) throw NonFiniteMatrix("MatrixField: no evaluator attached");
    Mat m = eval(z);
    if (m.rows() != rows || m.cols() != cols)
        throw DimensionMismatch("MatrixField: evaluator returned " +
                                std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                                ", declared " + std::to_string(rows) + "x" +
                                std::to_string(cols));
    if (!m.allFinite()) throw NonFiniteMatrix("MatrixField: non-finite entries");
    return m;
}

BoxSupResult box_sup(const Vec& coeff, const ControlBox& box) {
    if (coeff.size() != box.dim())
        throw DimensionMismatch("box_sup: coefficient/box dimension mismatch");
    BoxSupResult r;
    r.argmax.resize(coeff.size());
    r.value = 0.0;
    for (Index i = 0; i < coeff.size(); ++i) {
        const double c = coeff[i];
        if (c > 0.0) {
            r.argmax[i] = box.lower[i];
        } else if (c < 0.0) {
            r.argmax[i] = box.upper[i];
        } else {
            r.argmax[i] = 0.5 * (box.lower[i] + box.upper[i]);
        }
        r.value += std::max(-c * box.lower[i], -c * box.upper[i]);
    }
    return r;
}

}  // namespace relax
