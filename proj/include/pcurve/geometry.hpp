#pragma once

#include <Eigen/Dense>

#include "pcurve/symfunc.hpp"

namespace pcurve::geom {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Second-order data of a graph function at one point: Du and D2u.
struct GraphPoint {
    Vector grad;
    Matrix hess;
};

/// All pointwise quantities of the graph hypersurface over a GraphPoint.
/// gamma_lower is the square root of the induced metric, gamma_upper its
/// inverse, and `a = gamma_upper * D2u * gamma_upper / w` is the symmetric
/// matrix whose eigenvalues are the principal curvatures with respect to
/// the upward normal.
struct GraphJet {
    double w = 1.0;        // sqrt(1 + |Du|^2)
    Matrix g_lower;        // delta_ij + u_i u_j
    Matrix g_upper;        // delta_ij - u_i u_j / w^2
    Matrix gamma_lower;    // delta_ij + u_i u_j / (1 + w)
    Matrix gamma_upper;    // delta_ij - u_i u_j / (w (1 + w))
    Matrix a;              // symmetrized curvature matrix
    Vector kappa;          // principal curvatures, sorted descending
    Vector nu;             // upward unit normal, size n+1, nu_{n+1} = 1/w
    Matrix h_lower;        // second fundamental form u_ij / w
};

/// Value and exact derivatives of G(D2u, Du) = root-normalized curvature
/// operator of `a`, as needed by a Newton linearization.
struct PDECoefficients {
    double value = 0.0;
    Matrix d_hess;      // dG / du_ij; positive definite at admissible points
    Vector d_grad;      // dG / du_i
    Matrix normal_jac;  // (n+1) x n matrix d nu / d(Du)
};

GraphJet graph_jet(const GraphPoint& pt);

/// Throws NotAdmissibleError when the curvatures of `pt` leave the cone.
PDECoefficients pde_coeffs(const GraphPoint& pt, const symfunc::PSpec& spec);

/// Minimum p-subset sum of the principal curvatures at `pt`.
double admissibility_margin(const GraphPoint& pt, const symfunc::PSpec& spec);

} // namespace pcurve::geom
