#include "mtsdiag/pca.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "mtsdiag/errors.hpp"

namespace mtsdiag {

PcaBasis pca_fit(const Matrix& points) {
    const Index k = points.rows();
    const Index d = points.cols();
    if (k < 2 || d < 2) throw ConfigError("pca_fit: need at least 2 features and 2 samples");

    PcaBasis basis;
    basis.center = points.rowwise().mean();
    const Matrix centered = points.colwise() - basis.center;
    const Matrix cov = centered * centered.transpose() / static_cast<double>(d);

    Eigen::SelfAdjointEigenSolver<Matrix> solver(cov);
    if (solver.info() != Eigen::Success) throw NumericError("pca_fit: eigendecomposition failed");
    const Vector evals = solver.eigenvalues(); // ascending
    const Matrix evecs = solver.eigenvectors();

    basis.components = Matrix::Zero(k, 2);
    basis.explained = Vector::Zero(2);
    const double tol = 1e-12 * std::max(1.0, evals.cwiseAbs().maxCoeff());
    for (Index c = 0; c < 2; ++c) {
        const Index src = k - 1 - c;
        if (src < 0 || evals(src) <= tol) {
            basis.degenerate[static_cast<std::size_t>(c)] = true;
            continue;
        }
        Vector v = evecs.col(src);
        Index arg_max = 0;
        v.cwiseAbs().maxCoeff(&arg_max);
        if (v(arg_max) < 0) v = -v;
        basis.components.col(c) = v;
        basis.explained(c) = evals(src);
    }
    return basis;
}

Matrix pca_apply(const PcaBasis& basis, const Matrix& points) {
    if (points.rows() != basis.center.size())
        throw ConfigError("pca_apply: feature dimension mismatch");
    return basis.components.transpose() * (points.colwise() - basis.center);
}

} // namespace mtsdiag
