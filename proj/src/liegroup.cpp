#include <geomech/liegroup.hpp>

#include <cmath>

namespace geomech::liegroup {

namespace {

void require(bool ok, const char* msg) {
    if (!ok) throw PreconditionError(msg);
}

bool is_lower(const Mat& m) {
    for (int i = 0; i < m.rows(); ++i)
        for (int j = i + 1; j < m.cols(); ++j)
            if (m(i, j) != 0.0) return false;
    return true;
}

bool is_strictly_upper(const Mat& m) {
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j <= i && j < m.cols(); ++j)
            if (m(i, j) != 0.0) return false;
    return true;
}

bool is_unit_upper(const Mat& m) {
    for (int i = 0; i < m.rows(); ++i) {
        if (m(i, i) != 1.0) return false;
        for (int j = 0; j < i; ++j)
            if (m(i, j) != 0.0) return false;
    }
    return true;
}

}  // namespace

AlgebraElement algebra(const Mat& m, AlgTag tag) {
    require(m.rows() == m.cols(), "algebra element must be square");
    require(m.allFinite(), "algebra element must be finite");
    if (tag == AlgTag::plus) require(is_lower(m), "k+ element must be lower triangular");
    if (tag == AlgTag::minus)
        require(is_strictly_upper(m), "k- element must be strictly upper triangular");
    return {m, tag};
}

GroupElement group(const Mat& m, GroupTag tag) {
    require(m.rows() == m.cols(), "group element must be square");
    require(m.allFinite(), "group element must be finite");
    double det = m.determinant();
    require(std::fabs(det) > 0.0, "group element must be invertible");
    if (tag == GroupTag::K)
        require(std::fabs(det - 1.0) <= 1e-10, "K element must have unit determinant");
    if (tag == GroupTag::Kplus) {
        require(is_lower(m), "K+ element must be lower triangular");
        for (int i = 0; i < m.rows(); ++i)
            require(m(i, i) > 0.0, "K+ element must have positive diagonal");
    }
    if (tag == GroupTag::Kminus) require(is_unit_upper(m), "K- element must be unit upper");
    return {m, tag};
}

Mat project_plus(const Mat& x) {
    Mat out = Mat::Zero(x.rows(), x.cols());
    for (int i = 0; i < x.rows(); ++i)
        for (int j = 0; j <= i; ++j) out(i, j) = x(i, j);
    return out;
}

Mat project_minus(const Mat& x) {
    Mat out = Mat::Zero(x.rows(), x.cols());
    for (int i = 0; i < x.rows(); ++i)
        for (int j = i + 1; j < x.cols(); ++j) out(i, j) = x(i, j);
    return out;
}

Mat mat_exp(const Mat& x) {
    require(x.allFinite(), "mat_exp needs finite entries");
    const int d = static_cast<int>(x.rows());
    double norm1 = 0.0;
    for (int j = 0; j < d; ++j) norm1 = std::max(norm1, x.col(j).cwiseAbs().sum());
    int s = 0;
    if (norm1 > 0.0) s = std::max(0, static_cast<int>(std::ceil(std::log2(norm1))) + 3);
    Mat a = x / std::pow(2.0, s);
    // Taylor to machine precision; |a|_1 <= 1/8 so ~16 terms suffice.
    Mat sum = Mat::Identity(d, d);
    Mat term = Mat::Identity(d, d);
    for (int k = 1; k <= 24; ++k) {
        term = (term * a).eval() / static_cast<double>(k);
        sum += term;
        if (term.cwiseAbs().maxCoeff() < 1e-18 * sum.cwiseAbs().maxCoeff()) break;
    }
    for (int k = 0; k < s; ++k) sum = (sum * sum).eval();
    if (!sum.allFinite()) throw NumericalError("mat_exp overflow");
    return sum;
}

GroupElement mat_exp(const AlgebraElement& x) {
    Mat e = mat_exp(x.m);
    switch (x.tag) {
        case AlgTag::plus: return group(e, GroupTag::Kplus);
        case AlgTag::minus: return group(e, GroupTag::Kminus);
        case AlgTag::full: break;
    }
    return group(e, GroupTag::K);
}

Mat bracket(const Mat& x, const Mat& y) { return x * y - y * x; }

AlgebraElement bracket(const AlgebraElement& x, const AlgebraElement& y) {
    Mat b = bracket(x.m, y.m);
    AlgTag tag = AlgTag::full;
    if (x.tag == AlgTag::minus && y.tag == AlgTag::minus) tag = AlgTag::minus;
    if (x.tag == AlgTag::plus && y.tag == AlgTag::plus) tag = AlgTag::plus;
    return {b, tag};
}

Mat inverse(const Mat& g) {
    Eigen::PartialPivLU<Mat> lu(g);
    Mat inv = lu.inverse();
    if (!inv.allFinite()) throw NumericalError("singular group element");
    return inv;
}

Mat adjoint(const Mat& g, const Mat& x) { return g * x * inverse(g); }

Mat coadjoint(const Mat& g, const Mat& lambda) { return inverse(g) * lambda * g; }

double pairing(const Mat& x, const Mat& y) { return (x * y).trace(); }

std::pair<Mat, Mat> factorize(const Mat& g) {
    const int d = static_cast<int>(g.rows());
    // Crout-style LU without pivoting: g = L U with L lower, U unit upper.
    Mat L = Mat::Zero(d, d), U = Mat::Identity(d, d);
    const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
    for (int j = 0; j < d; ++j) {
        for (int i = j; i < d; ++i) {
            double acc = g(i, j);
            for (int k = 0; k < j; ++k) acc -= L(i, k) * U(k, j);
            L(i, j) = acc;
        }
        double piv = L(j, j);
        if (piv <= 1e-12 * scale)
            throw FactorizationOutsideBigCell(
                "leading minor not positive; point lies outside the K+K- big cell");
        for (int k = j + 1; k < d; ++k) {
            double acc = g(j, k);
            for (int i = 0; i < j; ++i) acc -= L(j, i) * U(i, k);
            U(j, k) = acc / piv;
        }
    }
    return {L, U};
}

std::pair<GroupElement, GroupElement> factorize(const GroupElement& g) {
    auto [L, U] = factorize(g.m);
    return {group(L, GroupTag::Kplus), group(U, GroupTag::Kminus)};
}

std::vector<Mat> sl_basis(int d, AlgTag tag) {
    std::vector<Mat> basis;
    auto unit = [d](int i, int j) {
        Mat e = Mat::Zero(d, d);
        e(i, j) = 1.0;
        return e;
    };
    if (tag == AlgTag::full || tag == AlgTag::minus)
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j) basis.push_back(unit(i, j));
    if (tag == AlgTag::full || tag == AlgTag::plus)
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < i; ++j) basis.push_back(unit(i, j));
    if (tag != AlgTag::minus)
        for (int i = 0; i + 1 < d; ++i) {
            Mat h = Mat::Zero(d, d);
            h(i, i) = 1.0;
            h(i + 1, i + 1) = -1.0;
            basis.push_back(h);
        }
    return basis;
}

Vec sl_coords(const Mat& x, AlgTag tag) {
    const int d = static_cast<int>(x.rows());
    std::vector<double> c;
    if (tag == AlgTag::full || tag == AlgTag::minus)
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j) c.push_back(x(i, j));
    if (tag == AlgTag::full || tag == AlgTag::plus)
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < i; ++j) c.push_back(x(i, j));
    if (tag != AlgTag::minus) {
        // diagonal part sum_i c_i h_i: c_i = sum_{j<=i} x_jj
        double acc = 0.0;
        for (int i = 0; i + 1 < d; ++i) {
            acc += x(i, i);
            c.push_back(acc);
        }
    }
    Vec out(static_cast<int>(c.size()));
    for (int i = 0; i < out.size(); ++i) out[i] = c[static_cast<std::size_t>(i)];
    return out;
}

Mat sl_from_coords(const Vec& c, int d, AlgTag tag) {
    auto basis = sl_basis(d, tag);
    require(static_cast<int>(basis.size()) == c.size(), "coordinate size mismatch");
    Mat x = Mat::Zero(d, d);
    for (std::size_t k = 0; k < basis.size(); ++k) x += c[static_cast<int>(k)] * basis[k];
    return x;
}

Mat mat_log_near(const Mat& M) {
    const int d = static_cast<int>(M.rows());
    Mat E = M - Mat::Identity(d, d);
    if (E.cwiseAbs().maxCoeff() > 0.8)
        throw NumericalError("mat_log_near: matrix not close enough to the identity");
    Mat term = E;
    Mat sum = E;
    for (int k = 2; k <= 60; ++k) {
        term = (term * E).eval();
        Mat inc = term / static_cast<double>(k) * ((k % 2 == 0) ? -1.0 : 1.0);
        sum += inc;
        if (inc.cwiseAbs().maxCoeff() < 1e-17) break;
    }
    return sum;
}

namespace {

Mat dexp_series(const Mat& X, const Mat& Y) {
    // sum_j ad_X^j(Y) / (j+1)!
    Mat term = Y;
    Mat sum = Y;
    double fact = 1.0;
    for (int j = 1; j <= 40; ++j) {
        term = bracket(X, term);
        fact *= static_cast<double>(j + 1);
        Mat inc = term / fact;
        sum += inc;
        if (inc.cwiseAbs().maxCoeff() < 1e-18 * (1.0 + sum.cwiseAbs().maxCoeff())) break;
    }
    return sum;
}

}  // namespace

Mat dexp_right(const Mat& X, const Mat& Y) { return dexp_series(X, Y); }

Mat dexp_left(const Mat& X, const Mat& Y) { return dexp_series(Mat(-X), Y); }

}  // namespace geomech::liegroup
