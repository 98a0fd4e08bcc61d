#pragma once

#include <geomech/errors.hpp>
#include <geomech/fields.hpp>

#include <utility>
#include <vector>

namespace geomech::liegroup {

/// Subalgebra membership tags for the factorization k = k+ (+) k-.
/// k+ = lower triangular (incl. diagonal), k- = strictly upper triangular.
enum class AlgTag { full, plus, minus };

/// Subgroup tags: K, K+ (lower triangular, positive diagonal), K- (unit upper).
enum class GroupTag { K, Kplus, Kminus };

/// Square real matrix viewed as a Lie algebra element.
struct AlgebraElement {
    Mat m;
    AlgTag tag = AlgTag::full;
};

/// Invertible square real matrix viewed as a group element.
struct GroupElement {
    Mat m;
    GroupTag tag = GroupTag::K;
};

/// Tag-validating constructors. Tagged elements must satisfy their pattern
/// exactly; K elements must satisfy |det - 1| <= 1e-10.
AlgebraElement algebra(const Mat& m, AlgTag tag = AlgTag::full);
GroupElement group(const Mat& m, GroupTag tag = GroupTag::K);

/// Vector-space projections realizing k = k+ (+) k- (exact, entrywise).
Mat project_plus(const Mat& x);
Mat project_minus(const Mat& x);

/// Matrix exponential by scaling and squaring with a Taylor kernel;
/// squaring parameter s = max(0, ceil(log2 |x|_1) + 3).
Mat mat_exp(const Mat& x);
GroupElement mat_exp(const AlgebraElement& x);

/// Commutator xy - yx.
Mat bracket(const Mat& x, const Mat& y);
AlgebraElement bracket(const AlgebraElement& x, const AlgebraElement& y);

Mat inverse(const Mat& g);

/// Ad_g x = g x g^{-1}.
Mat adjoint(const Mat& g, const Mat& x);

/// Coadjoint through the trace pairing: the matrix l' with <l',y> = <l, Ad_g y>,
/// i.e. l' = g^{-1} l g.
Mat coadjoint(const Mat& g, const Mat& lambda);

/// Ad-invariant trace form <x,y> = tr(xy).
double pairing(const Mat& x, const Mat& y);

/// Gauss factorization g = g+ g-, g+ lower triangular with positive diagonal,
/// g- unit upper triangular (Doolittle-style, no pivoting). Throws
/// FactorizationOutsideBigCell on a zero or negative leading minor.
std::pair<GroupElement, GroupElement> factorize(const GroupElement& g);
std::pair<Mat, Mat> factorize(const Mat& g);

/// Basis of sl(d): off-diagonal units e_ij then traceless diagonals
/// h_i = E_ii - E_{i+1,i+1}. Restricted bases for k+ and k-.
std::vector<Mat> sl_basis(int d, AlgTag tag = AlgTag::full);

/// Coordinates of a (traceless) matrix in sl_basis(d, tag).
Vec sl_coords(const Mat& x, AlgTag tag = AlgTag::full);

/// Reassemble a matrix from sl_basis coordinates.
Mat sl_from_coords(const Vec& c, int d, AlgTag tag = AlgTag::full);

/// Principal logarithm of a matrix near the identity (Mercator series).
/// Requires |M - I| < 1 in spectral terms; throws NumericalError otherwise.
Mat mat_log_near(const Mat& M);

/// Right-trivialized differential of exp: d/ds exp(X+sY) exp(-X) at s=0,
/// i.e. dexp_{ad X}(Y) = sum_j ad_X^j(Y) / (j+1)!.
Mat dexp_right(const Mat& X, const Mat& Y);

/// Left-trivialized counterpart exp(-X) d/ds exp(X+sY) = dexp_{-ad X}(Y).
Mat dexp_left(const Mat& X, const Mat& Y);

}  // namespace geomech::liegroup
