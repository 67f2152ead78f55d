#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "pcurve/errors.hpp"

namespace pcurve::symfunc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Combinatorial tables for the curvature operator
///
///   F(lambda) = prod over all p-element subsets S of {1..n} of (sum_{i in S} lambda_i)
///
/// built once per (n, p) and immutable afterwards. n is capped at 10, so the
/// number of subsets m = C(n,p) never exceeds 252 and plain enumeration is fine.
/// Safe for concurrent use from any number of threads.
class PSpec {
public:
    PSpec(int n, int p);

    int n() const { return n_; }
    int p() const { return p_; }
    /// Number of p-subsets, m = C(n,p). F is homogeneous of degree m.
    int subset_count() const { return m_; }

    /// Subset bitmasks in lexicographic order of their member lists.
    const std::vector<std::uint32_t>& masks() const { return masks_; }
    /// Member indices of subset `s`.
    const std::vector<int>& members(int s) const { return members_[s]; }
    /// Ids of the subsets containing eigenvalue index `k`.
    const std::vector<int>& subsets_containing(int k) const { return containing_[k]; }
    /// Subset id for a bitmask, -1 if the mask is not a p-subset.
    int id_of_mask(std::uint32_t mask) const { return mask_to_id_[mask]; }

    /// All m subset sums of `lam`, in subset order.
    Vector subset_sums(const Eigen::Ref<const Vector>& lam) const;

private:
    int n_, p_, m_;
    std::vector<std::uint32_t> masks_;
    std::vector<std::vector<int>> members_;
    std::vector<std::vector<int>> containing_;
    std::vector<int> mask_to_id_;
};

/// Value, root-normalized value and eigenframe derivative blocks of the
/// operator at a spectrum. Which scale the derivative blocks refer to (F or
/// its degree-one normalization F^{1/m}) depends on the factory that built
/// the jet.
struct OperatorJet {
    double value_f = 0.0;   // F(lambda)
    double value_ft = 0.0;  // F(lambda)^{1/m}
    Vector grad_diag;       // dF/dlambda_k (or the normalized counterpart)
    Matrix hess_diag;       // d2F/dlambda_k dlambda_l
    Matrix hess_off;        // off-diagonal second-derivative block, zero diagonal
};

/// First-order jet of the normalized operator on symmetric matrices.
struct MatrixJet {
    double value = 0.0;  // F(eigenvalues)^{1/m}
    Matrix d_matrix;     // derivative w.r.t. the matrix entries; SPD on the cone
    Vector eigvals;      // ascending
    Matrix eigvecs;      // orthogonal, A = eigvecs * diag(eigvals) * eigvecs^T
};

/// Minimum over all p-subsets S of sum_{i in S} lambda_i. Equals the sum of
/// the p smallest entries.
double min_psum(const Eigen::Ref<const Vector>& lam, const PSpec& spec);

/// Scale-invariant default margin for cone membership tests.
double default_cone_margin(const Eigen::Ref<const Vector>& lam);

/// True iff every p-subset sum exceeds `margin` (margin >= 0).
bool in_cone(const Eigen::Ref<const Vector>& lam, const PSpec& spec, double margin);
bool in_cone(const Eigen::Ref<const Vector>& lam, const PSpec& spec);

/// F(lambda). Inside the cone the product is evaluated in the log domain;
/// outside it falls back to a signed direct product. Throws OverflowError if
/// the value escapes double range.
double value(const Eigen::Ref<const Vector>& lam, const PSpec& spec);

/// F(lambda)^{1/m}, evaluated as exp(mean of log subset sums).
/// Throws NotInConeError if any subset sum is <= 0.
double value_root(const Eigen::Ref<const Vector>& lam, const PSpec& spec);

/// Gradient of F in the eigenframe: dF/dlambda_k = sum_{S containing k} F / sigma_S.
/// Entries are positive and, for lambda sorted descending, nondecreasing in k.
Vector grad_diag(const Eigen::Ref<const Vector>& lam, const PSpec& spec);

/// Second-derivative blocks of F in the eigenframe.
///
/// hess_diag(k,l) sums F/(sigma_S sigma_T) over ordered subset pairs with
/// k in S, l in T, S != T. hess_off(k,r) sums -F/(sigma_S sigma_T) over the
/// matched pairs S = P+{r}, T = P+{k} for (p-1)-subsets P avoiding both k
/// and r; it is the smooth continuation of (dF_k - dF_r)/(lambda_k - lambda_r)
/// and needs no special case at coincident eigenvalues.
std::pair<Matrix, Matrix> hess_blocks(const Eigen::Ref<const Vector>& lam,
                                      const PSpec& spec);

/// Jet whose derivative blocks belong to F itself.
OperatorJet jet(const Eigen::Ref<const Vector>& lam, const PSpec& spec);

/// Jet of the degree-one normalization F^{1/m}, obtained from the F-jet by
/// the chain rule.
OperatorJet normalized_jet(const Eigen::Ref<const Vector>& lam, const PSpec& spec);

/// Spectral lift of the normalized operator to a symmetric matrix: value and
/// first derivative, via one symmetric eigendecomposition. The derivative
/// d_matrix = B diag(grad) B^T needs no divided differences.
MatrixJet matrix_jet(const Eigen::Ref<const Matrix>& A, const PSpec& spec);

/// Smallest radius R >= 0 (within the regime where every subset sum touching
/// the last entry is nonnegative) such that
///   F(lambda_1, ..., lambda_{n-1}, lambda_n + R) >= target,
/// found by monotone bisection to absolute tolerance 1e-8. Requires the
/// p-subset sums of the first n-1 entries to be positive when p < n.
double growth_radius(double target, const Eigen::Ref<const Vector>& lam,
                     const PSpec& spec);

/// Copy of `lam` sorted descending.
Vector sorted_desc(const Eigen::Ref<const Vector>& lam);

} // namespace pcurve::symfunc
