#include "latentface/linalg.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "latentface/error.hpp"

namespace latentface {

namespace {

Index numerical_rank(const Vector& values) {
    if (values.size() == 0 || values[0] <= 0.0) return 0;
    const double cutoff = kRankTolerance * values[0];
    Index rank = 0;
    while (rank < values.size() && values[rank] > cutoff) ++rank;
    return rank;
}

}  // namespace

void normalize_signs(Matrix& vectors) {
    for (Index j = 0; j < vectors.cols(); ++j) {
        Index best = 0;
        for (Index i = 1; i < vectors.rows(); ++i) {
            if (std::abs(vectors(i, j)) > std::abs(vectors(best, j))) best = i;
        }
        if (vectors.rows() > 0 && vectors(best, j) < 0.0) vectors.col(j) *= -1.0;
    }
}

LeftSingular left_singular_from_gram(const Matrix& gram) {
    const Index n = gram.rows();
    LeftSingular out;
    if (n == 0) return out;
    if (!gram.allFinite()) throw NumericError("non-finite Gram matrix in SVD");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
    if (eig.info() != Eigen::Success) throw NumericError("symmetric eigensolver did not converge");
    // ascending -> descending
    out.vectors = eig.eigenvectors().rowwise().reverse();
    out.values = eig.eigenvalues().reverse().cwiseMax(0.0).cwiseSqrt();
    normalize_signs(out.vectors);
    out.rank = numerical_rank(out.values);
    return out;
}

LeftSingular left_singular_vectors(const Matrix& a, bool economy) {
    const Index m = a.rows();
    const Index n = a.cols();
    LeftSingular out;
    if (m == 0) return out;
    if (!a.allFinite()) throw NumericError("non-finite matrix in SVD");

    if (m <= n) {
        // a = R^T Q^T, so a and R^T share left singular vectors and values.
        Matrix rt;
        if (m == n) {
            rt = a;
        } else {
            Eigen::HouseholderQR<Matrix> qr(a.transpose());
            rt = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>().toDenseMatrix().transpose();
        }
        Eigen::BDCSVD<Matrix> svd(rt, Eigen::ComputeFullU);
        if (svd.info() != Eigen::Success) throw NumericError("SVD did not converge");
        out.vectors = svd.matrixU();
        out.values = svd.singularValues();
        normalize_signs(out.vectors);
        out.rank = numerical_rank(out.values);
        return out;
    }

    Eigen::HouseholderQR<Matrix> qr(a);
    const Matrix r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
    LeftSingular small = left_singular_vectors(r, true);

    out.rank = small.rank;
    const Index cols = economy ? n : m;
    Matrix q = qr.householderQ() * Matrix::Identity(m, cols);
    out.vectors.resize(m, cols);
    out.vectors.leftCols(n).noalias() = q.leftCols(n) * small.vectors;
    if (cols > n) out.vectors.rightCols(cols - n) = q.rightCols(cols - n);
    out.values = Vector::Zero(cols);
    out.values.head(n) = small.values;
    normalize_signs(out.vectors);
    return out;
}

double orthonormality_deviation(const Matrix& u) {
    if (u.size() == 0) return 0.0;
    const Matrix gram = u.transpose() * u;
    return (gram - Matrix::Identity(u.cols(), u.cols())).cwiseAbs().maxCoeff();
}

}  // namespace latentface
