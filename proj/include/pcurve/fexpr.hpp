#pragma once

#include <Eigen/Dense>

#include <memory>
#include <string>
#include <vector>

#include "pcurve/errors.hpp"

namespace pcurve::fexpr {

/// Evaluation point for a right-hand-side expression f(x, z, nu):
/// position x in R^n, graph height z, unit normal nu in R^{n+1}.
struct Env {
    Eigen::VectorXd x;
    double z = 0.0;
    Eigen::VectorXd nu;
};

struct Node;

/// Immutable expression over the variables x1..xn, z, nu1..nu{n+1} and the
/// shorthands w = 1/nu_{n+1} and r2 = |x|^2, with + - * / ^ (constant
/// exponent), unary minus and the functions exp, log, sqrt. Cheap to copy;
/// thread-safe to evaluate.
class Expr {
public:
    Expr();  // the constant 0
    static Expr constant(double v);

    double eval(const Env& env) const;
    std::string to_string() const;

    /// Partial derivative in z.
    Expr dz() const;
    /// Partial derivative in nu_j, 0 <= j <= n (0-based; j == n is the
    /// vertical component). w is treated as (nu_{n+1})^{-1}.
    Expr dnu(int j) const;

    /// Which variable groups appear in the tree.
    struct VarUse {
        bool x = false;   // any coordinate x_i
        bool z = false;
        bool r2 = false;
        bool w = false;
        bool nu_lateral = false;   // nu_1 .. nu_n
        bool nu_vertical = false;  // nu_{n+1}
    };
    VarUse var_use() const;

    int dim() const { return n_; }
    bool is_constant() const;

private:
    friend Expr parse(const std::string&, int);
    friend class Differentiator;
    Expr(std::shared_ptr<const Node> root, int n) : root_(std::move(root)), n_(n) {}
    std::shared_ptr<const Node> root_;
    int n_;
};

/// Parse `src` for an n-dimensional problem. Throws ParseError with the byte
/// offset of the offending token.
Expr parse(const std::string& src, int n);

/// All partial derivatives the solver linearization needs.
struct Partials {
    Expr dz;
    std::vector<Expr> dnu;  // size n+1
};
Partials partials(const Expr& e);

/// Sampled verification of the solvability hypotheses f > 0 and f_z >= 0.
struct HypothesisReport {
    double min_f = 0.0;
    double min_fz = 0.0;
    bool f_positive = false;
    bool fz_nonnegative = false;
    bool pass = false;
    Env worst_f;   // sample attaining min_f
};
HypothesisReport check_hypotheses(const Expr& f, const std::vector<Env>& samples);

} // namespace pcurve::fexpr
