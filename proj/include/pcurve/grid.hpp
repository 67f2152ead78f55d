#pragma once

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <iosfwd>
#include <unordered_map>
#include <vector>

#include "pcurve/fexpr.hpp"

namespace pcurve::grid {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Discrete scalar field: one value per interior grid node.
using Field = Eigen::VectorXd;

/// A bounded strictly convex domain described by a defining function phi
/// with Omega = { phi < 0 }.
struct Domain {
    enum class Kind { Ball, Ellipsoid, LevelSet };

    Kind kind = Kind::Ball;
    int dim = 2;
    double radius = 1.0;    // Ball
    Vector semi_axes;       // Ellipsoid
    fexpr::Expr phi_expr;   // LevelSet
    Vector box_lo, box_hi;  // bounding box of Omega

    static Domain ball(int dim, double radius);
    static Domain ellipsoid(const Vector& semi_axes);
    /// phi may use only the coordinates x1..xn and r2. Strict convexity is
    /// checked by sampling finite-difference Hessians of phi over the box.
    static Domain level_set(int dim, const fexpr::Expr& phi, const Vector& lo,
                            const Vector& hi);

    double phi(const Vector& x) const;
    /// Distance from the interior phi-minimizer to the boundary along the
    /// coordinate axes (exact for balls and ellipsoids).
    double inradius() const;
};

struct StencilEntry {
    int col;
    double w;
};

/// Linear combination of interior node values; boundary contributions are
/// absent because the discretization imposes u = 0 on the boundary.
struct Stencil {
    std::vector<StencilEntry> entries;
    double apply(const Field& u) const {
        double acc = 0.0;
        for (const auto& e : entries) acc += e.w * u[e.col];
        return acc;
    }
};

/// Value of the continuum field at a boundary-arm endpoint; used only by the
/// boundary-aware evaluation overloads in tests and convergence studies.
using BoundaryFn = std::function<double(const Vector&)>;

class Grid {
public:
    /// Lattice of spacing h over the bounding box, classified by sign of phi.
    /// Arms to the boundary are found by bisection on phi along each axis.
    Grid(const Domain& dom, double h);

    int dim() const { return dim_; }
    double spacing() const { return h_; }
    int size() const { return static_cast<int>(coords_.size()); }
    const Domain& domain() const { return dom_; }

    const std::array<int, 3>& index(int node) const { return idx_[node]; }
    const Vector& coord(int node) const { return coords_[node]; }
    int find(const std::array<int, 3>& idx) const;

    double arm(int node, int axis, int dir) const {
        return dir > 0 ? arm_plus_[node][axis] : arm_minus_[node][axis];
    }
    int neighbor(int node, int axis, int dir) const {
        return dir > 0 ? nb_plus_[node][axis] : nb_minus_[node][axis];
    }
    /// True when the arm ends on the boundary rather than at an interior node.
    bool boundary_arm(int node, int axis, int dir) const {
        return neighbor(node, axis, dir) < 0;
    }
    bool has_boundary_arm(int node) const;

    const Stencil& gradient_stencil(int node, int axis) const {
        return grad_stencils_[node][axis];
    }
    const Stencil& hessian_stencil(int node, int k, int l) const {
        if (k == l) return hess_stencils_[node][k];
        if (k > l) std::swap(k, l);
        return hess_stencils_[node][pair_id(k, l)];
    }

private:
    friend Vector fd_gradient(const Field&, const Grid&, int, const BoundaryFn&);
    friend Matrix fd_hessian(const Field&, const Grid&, int, const BoundaryFn&);

    struct MixedPlan {
        enum class Kind { Cross, OneSided, Zero } kind = Kind::Zero;
        // One-sided differencing of the gradient: up to two averaged terms,
        // each differencing grad_t along axis s toward neighbor dir.
        struct Term {
            int s, dir, t;
        };
        std::array<Term, 2> terms{};
        int n_terms = 0;
    };

    int pair_id(int k, int l) const {  // k < l
        return k * dim_ - k * (k + 1) / 2 + (l - k - 1) + dim_;
    }
    void build_stencils();
    Stencil gradient_weights(int node, int axis) const;

    Domain dom_;
    int dim_;
    double h_;
    std::vector<std::array<int, 3>> idx_;
    std::vector<Vector> coords_;
    std::vector<std::array<double, 3>> arm_plus_, arm_minus_;
    std::vector<std::array<int, 3>> nb_plus_, nb_minus_;
    std::unordered_map<std::uint64_t, int> lookup_;
    // per node: dim gradient stencils, then dim pure + dim(dim-1)/2 mixed
    std::vector<std::vector<Stencil>> grad_stencils_;
    std::vector<std::vector<Stencil>> hess_stencils_;
    std::vector<std::vector<MixedPlan>> mixed_plans_;
};

/// Convenience wrapper around Grid's constructor.
Grid build_grid(const Domain& dom, double h);

/// Finite-difference gradient/Hessian at an interior node. The two-argument
/// forms impose the homogeneous boundary value; the BoundaryFn overloads
/// evaluate the true field at boundary-arm endpoints instead (used to verify
/// formula exactness and convergence orders).
Vector fd_gradient(const Field& u, const Grid& g, int node);
Vector fd_gradient(const Field& u, const Grid& g, int node, const BoundaryFn& bv);
Matrix fd_hessian(const Field& u, const Grid& g, int node);
Matrix fd_hessian(const Field& u, const Grid& g, int node, const BoundaryFn& bv);

/// Sample a continuum function at every node.
Field sample(const Grid& g, const std::function<double(const Vector&)>& f);

/// CSV rows "i1,..,in,x1,..,xn,u" with a header line.
void write_csv(const Grid& g, const Field& u, std::ostream& os);

} // namespace pcurve::grid
