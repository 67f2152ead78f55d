#include "pcurve/geometry.hpp"

#include <cmath>

namespace pcurve::geom {

namespace {

void require_point(const GraphPoint& pt) {
    const auto n = pt.grad.size();
    if (pt.hess.rows() != n || pt.hess.cols() != n)
        throw Error("GraphPoint dimensions are inconsistent");
    if (!pt.grad.allFinite() || !pt.hess.allFinite())
        throw Error("GraphPoint has non-finite entries");
    const double scale = 1.0 + pt.hess.cwiseAbs().maxCoeff();
    if ((pt.hess - pt.hess.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw Error("GraphPoint Hessian is not symmetric");
}

} // namespace

GraphJet graph_jet(const GraphPoint& pt) {
    require_point(pt);
    const auto n = pt.grad.size();
    const Vector& du = pt.grad;
    const Matrix outer = du * du.transpose();

    GraphJet jet;
    jet.w = std::sqrt(1.0 + du.squaredNorm());
    const double w = jet.w;
    jet.g_lower = Matrix::Identity(n, n) + outer;
    jet.g_upper = Matrix::Identity(n, n) - outer / (w * w);
    jet.gamma_lower = Matrix::Identity(n, n) + outer / (1.0 + w);
    jet.gamma_upper = Matrix::Identity(n, n) - outer / (w * (1.0 + w));
    jet.h_lower = pt.hess / w;

    const Matrix raw = jet.gamma_upper * pt.hess * jet.gamma_upper / w;
    jet.a = 0.5 * (raw + raw.transpose());

    Eigen::SelfAdjointEigenSolver<Matrix> es(jet.a);
    if (es.info() != Eigen::Success)
        throw Error("eigendecomposition of the curvature matrix failed");
    jet.kappa = es.eigenvalues().reverse();

    jet.nu.resize(n + 1);
    jet.nu.head(n) = -du / w;
    jet.nu[n] = 1.0 / w;
    return jet;
}

PDECoefficients pde_coeffs(const GraphPoint& pt, const symfunc::PSpec& spec) {
    const GraphJet jet = graph_jet(pt);
    const auto n = pt.grad.size();
    const double w = jet.w;
    const Vector& du = pt.grad;

    symfunc::MatrixJet mj;
    try {
        mj = symfunc::matrix_jet(jet.a, spec);
    } catch (const NotInConeError&) {
        throw NotAdmissibleError("graph point is not admissible (curvatures "
                                 "outside the cone)");
    }

    PDECoefficients out;
    out.value = mj.value;
    out.d_hess = (jet.gamma_upper * mj.d_matrix * jet.gamma_upper) / w;

    // dG/du_s. The first term carries the degree-one pairing of the
    // derivative with the curvature matrix; the remaining two come from
    // differentiating gamma_upper and 1/w in s.
    const double pairing = (mj.d_matrix.array() * jet.a.array()).sum();
    const Vector au = jet.a * du;
    const Vector term = w * (jet.gamma_upper * (mj.d_matrix * au)) +
                        jet.gamma_upper * (jet.a * (mj.d_matrix * du));
    out.d_grad = -(pairing / (w * w)) * du - (2.0 / (w * (1.0 + w))) * term;

    // d nu / d(Du): nu = (-Du, 1)/w.
    out.normal_jac.resize(n + 1, n);
    const double w3 = w * w * w;
    for (Eigen::Index k = 0; k < n; ++k) {
        for (Eigen::Index j = 0; j < n; ++j)
            out.normal_jac(j, k) = -(j == k ? 1.0 : 0.0) / w + du[j] * du[k] / w3;
        out.normal_jac(n, k) = -du[k] / w3;
    }
    return out;
}

double admissibility_margin(const GraphPoint& pt, const symfunc::PSpec& spec) {
    return symfunc::min_psum(graph_jet(pt).kappa, spec);
}

} // namespace pcurve::geom
