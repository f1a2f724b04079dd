#pragma once

#include "latentface/tensor.hpp"

namespace latentface {

/// Left singular vectors of a matrix, columns ordered by descending singular
/// value, each column's largest-magnitude entry made positive.
struct LeftSingular {
    Matrix vectors;
    Vector values;      // one per column of `vectors`; zero past the rank
    Index rank = 0;     // count of values above kRankTolerance * max value
};

inline constexpr double kRankTolerance = 1e-10;

/// Wide matrices (rows <= cols) are reduced by a Householder QR of a^T and
/// the small triangular factor goes through a divide-and-conquer SVD. This
/// keeps small singular values accurate to about eps * max value, which the
/// rank flag depends on. Tall matrices are reduced by QR of a itself; the
/// result then has a.cols() columns when `economy`, or a full rows x rows
/// basis completed from Q.
LeftSingular left_singular_vectors(const Matrix& a, bool economy);

/// Eigen-decomposition of a precomputed Gram matrix a*a^T. Cheaper, but
/// singular values below about 1e-8 * max value are not resolved.
LeftSingular left_singular_from_gram(const Matrix& gram);

/// Flips column signs so the entry of largest magnitude is positive; ties go
/// to the lowest row index.
void normalize_signs(Matrix& vectors);

/// max |U^T U - I|.
double orthonormality_deviation(const Matrix& u);

}  // namespace latentface
