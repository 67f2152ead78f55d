#include "pcurve/grid.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>

namespace pcurve::grid {

namespace {

constexpr int kIndexOffset = 1 << 20;

std::uint64_t pack(const std::array<int, 3>& idx) {
    return (static_cast<std::uint64_t>(idx[0] + kIndexOffset) << 42) |
           (static_cast<std::uint64_t>(idx[1] + kIndexOffset) << 21) |
           static_cast<std::uint64_t>(idx[2] + kIndexOffset);
}

fexpr::Env coord_env(const Vector& x) {
    fexpr::Env env;
    env.x = x;
    return env;
}

} // namespace

Domain Domain::ball(int dim, double radius) {
    if (dim < 2 || dim > 3) throw GridError("grid dimension must be 2 or 3");
    if (radius <= 0.0) throw GridError("ball radius must be positive");
    Domain d;
    d.kind = Kind::Ball;
    d.dim = dim;
    d.radius = radius;
    d.box_lo = Vector::Constant(dim, -radius);
    d.box_hi = Vector::Constant(dim, radius);
    return d;
}

Domain Domain::ellipsoid(const Vector& semi_axes) {
    const int dim = static_cast<int>(semi_axes.size());
    if (dim < 2 || dim > 3) throw GridError("grid dimension must be 2 or 3");
    if ((semi_axes.array() <= 0.0).any())
        throw GridError("ellipsoid semi-axes must be positive");
    Domain d;
    d.kind = Kind::Ellipsoid;
    d.dim = dim;
    d.semi_axes = semi_axes;
    d.box_lo = -semi_axes;
    d.box_hi = semi_axes;
    return d;
}

Domain Domain::level_set(int dim, const fexpr::Expr& phi, const Vector& lo,
                         const Vector& hi) {
    if (dim < 2 || dim > 3) throw GridError("grid dimension must be 2 or 3");
    if (lo.size() != dim || hi.size() != dim || ((hi - lo).array() <= 0.0).any())
        throw GridError("level-set bounding box is degenerate");
    const auto use = phi.var_use();
    if (use.z || use.w || use.nu_lateral || use.nu_vertical)
        throw GridError("a defining function may depend only on x1..xn and r2");

    Domain d;
    d.kind = Kind::LevelSet;
    d.dim = dim;
    d.phi_expr = phi;
    d.box_lo = lo;
    d.box_hi = hi;

    // Strict convexity: sampled finite-difference Hessians of phi over the
    // box must be positive definite.
    const double step = 1e-3 * (hi - lo).maxCoeff();
    const int per_axis = 6;
    std::vector<int> counter(dim, 0);
    while (true) {
        Vector x(dim);
        for (int k = 0; k < dim; ++k)
            x[k] = lo[k] + (hi[k] - lo[k]) * (counter[k] + 0.5) / per_axis;
        Matrix H(dim, dim);
        for (int i = 0; i < dim; ++i) {
            for (int j = i; j < dim; ++j) {
                Vector xpp = x, xpm = x, xmp = x, xmm = x;
                xpp[i] += step; xpp[j] += step;
                xpm[i] += step; xpm[j] -= step;
                xmp[i] -= step; xmp[j] += step;
                xmm[i] -= step; xmm[j] -= step;
                H(i, j) = H(j, i) = (d.phi(xpp) - d.phi(xpm) - d.phi(xmp) + d.phi(xmm)) /
                                    (4 * step * step);
            }
        }
        Eigen::SelfAdjointEigenSolver<Matrix> es(H);
        const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
        if (es.eigenvalues().minCoeff() <= 1e-10 * scale)
            throw GridError("defining function is not strictly convex on the box");

        int k = 0;
        while (k < dim && ++counter[k] == per_axis) counter[k++] = 0;
        if (k == dim) break;
    }
    return d;
}

double Domain::phi(const Vector& x) const {
    switch (kind) {
        case Kind::Ball:
            return x.squaredNorm() - radius * radius;
        case Kind::Ellipsoid:
            return (x.array() / semi_axes.array()).matrix().squaredNorm() - 1.0;
        case Kind::LevelSet:
            return phi_expr.eval(coord_env(x));
    }
    throw GridError("corrupt domain");
}

double Domain::inradius() const {
    switch (kind) {
        case Kind::Ball:
            return radius;
        case Kind::Ellipsoid:
            return semi_axes.minCoeff();
        case Kind::LevelSet: {
            // Coarse search for the phi-minimizer, then axis bisection to the
            // boundary.
            const int per_axis = 21;
            Vector best;
            double best_phi = std::numeric_limits<double>::infinity();
            std::vector<int> counter(dim, 0);
            while (true) {
                Vector x(dim);
                for (int k = 0; k < dim; ++k)
                    x[k] = box_lo[k] +
                           (box_hi[k] - box_lo[k]) * (counter[k] + 0.5) / per_axis;
                const double v = phi(x);
                if (v < best_phi) {
                    best_phi = v;
                    best = x;
                }
                int k = 0;
                while (k < dim && ++counter[k] == per_axis) counter[k++] = 0;
                if (k == dim) break;
            }
            if (best_phi >= 0.0)
                throw GridError("level-set domain has empty interior");
            double rad = std::numeric_limits<double>::infinity();
            for (int k = 0; k < dim; ++k) {
                for (int dir : {-1, 1}) {
                    double t_lo = 0.0;
                    double t_hi = dir > 0 ? box_hi[k] - best[k] : best[k] - box_lo[k];
                    Vector x = best;
                    x[k] = best[k] + dir * t_hi;
                    if (phi(x) < 0.0) continue;  // boundary beyond the box edge
                    for (int it = 0; it < 80; ++it) {
                        const double mid = 0.5 * (t_lo + t_hi);
                        x[k] = best[k] + dir * mid;
                        (phi(x) < 0.0 ? t_lo : t_hi) = mid;
                    }
                    rad = std::min(rad, t_hi);
                }
            }
            if (!std::isfinite(rad))
                throw GridError("could not estimate the domain inradius");
            return rad;
        }
    }
    throw GridError("corrupt domain");
}

Grid::Grid(const Domain& dom, double h) : dom_(dom), dim_(dom.dim), h_(h) {
    if (h <= 0.0) throw GridError("grid spacing must be positive");
    if (h >= dom.inradius())
        throw GridError("grid spacing exceeds the domain inradius");

    std::array<int, 3> i_lo{0, 0, 0}, i_hi{0, 0, 0};
    for (int k = 0; k < dim_; ++k) {
        i_lo[k] = static_cast<int>(std::ceil(dom.box_lo[k] / h - 1e-12));
        i_hi[k] = static_cast<int>(std::floor(dom.box_hi[k] / h + 1e-12));
    }

    // A lattice point can land on the boundary to machine precision (e.g.
    // Pythagorean coincidences on a ball); such a point carries no usable
    // stencil and is classified as exterior.
    const Vector box_center = 0.5 * (dom.box_lo + dom.box_hi);
    const double phi_tol = 1e-12 * (1.0 + std::abs(dom.phi(box_center)));

    std::array<int, 3> idx{0, 0, 0};
    for (int k = 0; k < dim_; ++k) idx[k] = i_lo[k];
    while (true) {
        Vector x(dim_);
        for (int k = 0; k < dim_; ++k) x[k] = idx[k] * h;
        if (dom.phi(x) < -phi_tol) {
            lookup_.emplace(pack(idx), static_cast<int>(coords_.size()));
            idx_.push_back(idx);
            coords_.push_back(x);
        }
        int k = 0;
        while (k < dim_ && ++idx[k] > i_hi[k]) idx[k++] = i_lo[k];
        if (k == dim_) break;
    }
    if (coords_.empty()) throw GridError("grid has no interior nodes");

    const int n_nodes = size();
    arm_plus_.assign(n_nodes, {h, h, h});
    arm_minus_.assign(n_nodes, {h, h, h});
    nb_plus_.assign(n_nodes, {-1, -1, -1});
    nb_minus_.assign(n_nodes, {-1, -1, -1});

    for (int i = 0; i < n_nodes; ++i) {
        for (int k = 0; k < dim_; ++k) {
            for (int dir : {1, -1}) {
                std::array<int, 3> nb = idx_[i];
                nb[k] += dir;
                const auto it = lookup_.find(pack(nb));
                auto& arm = dir > 0 ? arm_plus_[i][k] : arm_minus_[i][k];
                auto& nbid = dir > 0 ? nb_plus_[i][k] : nb_minus_[i][k];
                if (it != lookup_.end()) {
                    arm = h;
                    nbid = it->second;
                    continue;
                }
                // The arm ends on the boundary: bisect phi along the axis.
                // Tolerate tangency roundoff where a lattice line grazes the
                // boundary; the bisection then returns a full-length arm.
                Vector probe = coords_[i];
                probe[k] += dir * h;
                if (dom.phi(probe) < -1e-8 * (1.0 + std::abs(dom.phi(coords_[i]))))
                    throw GridError("bounding box clips the domain interior");
                double t_lo = 0.0, t_hi = h;
                while (t_hi - t_lo > 1e-12 * h) {
                    const double mid = 0.5 * (t_lo + t_hi);
                    probe[k] = coords_[i][k] + dir * mid;
                    (dom.phi(probe) < 0.0 ? t_lo : t_hi) = mid;
                }
                arm = std::clamp(0.5 * (t_lo + t_hi), 1e-6 * h, h);
                nbid = -1;
            }
        }
    }

    build_stencils();
}

int Grid::find(const std::array<int, 3>& idx) const {
    const auto it = lookup_.find(pack(idx));
    return it == lookup_.end() ? -1 : it->second;
}

bool Grid::has_boundary_arm(int node) const {
    for (int k = 0; k < dim_; ++k)
        if (nb_plus_[node][k] < 0 || nb_minus_[node][k] < 0) return true;
    return false;
}

Stencil Grid::gradient_weights(int node, int axis) const {
    const double hp = arm_plus_[node][axis];
    const double hm = arm_minus_[node][axis];
    const double den = hp * hm * (hp + hm);
    Stencil s;
    if (nb_plus_[node][axis] >= 0)
        s.entries.push_back({nb_plus_[node][axis], hm * hm / den});
    if (nb_minus_[node][axis] >= 0)
        s.entries.push_back({nb_minus_[node][axis], -hp * hp / den});
    const double c0 = (hp * hp - hm * hm) / den;
    if (c0 != 0.0) s.entries.push_back({node, c0});
    return s;
}

void Grid::build_stencils() {
    const int n_nodes = size();
    const int n_pairs = dim_ * (dim_ - 1) / 2;

    grad_stencils_.resize(n_nodes);
    for (int i = 0; i < n_nodes; ++i) {
        grad_stencils_[i].resize(dim_);
        for (int k = 0; k < dim_; ++k) grad_stencils_[i][k] = gradient_weights(i, k);
    }

    hess_stencils_.resize(n_nodes);
    mixed_plans_.resize(n_nodes);
    for (int i = 0; i < n_nodes; ++i) {
        hess_stencils_[i].resize(dim_ + n_pairs);
        mixed_plans_[i].resize(n_pairs);

        // Pure second derivatives: unequal-arm three-point formula, exact on
        // quadratics for any arm lengths.
        for (int k = 0; k < dim_; ++k) {
            const double hp = arm_plus_[i][k];
            const double hm = arm_minus_[i][k];
            const double den = hp * hm * (hp + hm);
            Stencil s;
            if (nb_plus_[i][k] >= 0)
                s.entries.push_back({nb_plus_[i][k], 2.0 * hm / den});
            if (nb_minus_[i][k] >= 0)
                s.entries.push_back({nb_minus_[i][k], 2.0 * hp / den});
            s.entries.push_back({i, -2.0 / (hp * hm)});
            hess_stencils_[i][k] = s;
        }

        for (int k = 0; k < dim_; ++k) {
            for (int l = k + 1; l < dim_; ++l) {
                const int pid = pair_id(k, l) - dim_;
                MixedPlan plan;

                int diag[4];
                int corner = 0;
                bool cross_ok = true;
                for (int sk : {1, -1}) {
                    for (int sl : {1, -1}) {
                        std::array<int, 3> nb = idx_[i];
                        nb[k] += sk;
                        nb[l] += sl;
                        diag[corner] = find(nb);
                        if (diag[corner] < 0) cross_ok = false;
                        ++corner;
                    }
                }

                std::map<int, double> weights;
                if (cross_ok) {
                    plan.kind = MixedPlan::Kind::Cross;
                    const double c = 1.0 / (4.0 * h_ * h_);
                    weights[diag[0]] += c;   // (+,+)
                    weights[diag[1]] -= c;   // (+,-)
                    weights[diag[2]] -= c;   // (-,+)
                    weights[diag[3]] += c;   // (-,-)
                } else {
                    // One-sided differencing of the gradient along whichever
                    // axis still has an interior neighbor; average the two
                    // estimates when both axes provide one.
                    for (auto [s_ax, t_ax] : {std::pair{k, l}, std::pair{l, k}}) {
                        int dir = 0;
                        if (nb_plus_[i][s_ax] >= 0)
                            dir = 1;
                        else if (nb_minus_[i][s_ax] >= 0)
                            dir = -1;
                        else
                            continue;
                        plan.terms[plan.n_terms++] = {s_ax, dir, t_ax};
                    }
                    plan.kind = plan.n_terms > 0 ? MixedPlan::Kind::OneSided
                                                 : MixedPlan::Kind::Zero;
                    for (int t = 0; t < plan.n_terms; ++t) {
                        const auto& term = plan.terms[t];
                        const int nb = term.dir > 0 ? nb_plus_[i][term.s]
                                                    : nb_minus_[i][term.s];
                        const double c = term.dir / (h_ * plan.n_terms);
                        for (const auto& e : grad_stencils_[nb][term.t].entries)
                            weights[e.col] += c * e.w;
                        for (const auto& e : grad_stencils_[i][term.t].entries)
                            weights[e.col] -= c * e.w;
                    }
                }

                Stencil s;
                for (const auto& [col, w] : weights)
                    if (w != 0.0) s.entries.push_back({col, w});
                hess_stencils_[i][dim_ + pid] = s;
                mixed_plans_[i][pid] = plan;
            }
        }
    }
}

Grid build_grid(const Domain& dom, double h) { return Grid(dom, h); }

Vector fd_gradient(const Field& u, const Grid& g, int node) {
    Vector out(g.dim());
    for (int k = 0; k < g.dim(); ++k)
        out[k] = g.gradient_stencil(node, k).apply(u);
    return out;
}

Vector fd_gradient(const Field& u, const Grid& g, int node, const BoundaryFn& bv) {
    const int dim = g.dim();
    Vector out(dim);
    for (int k = 0; k < dim; ++k) {
        const double hp = g.arm(node, k, +1);
        const double hm = g.arm(node, k, -1);
        auto endpoint = [&](int dir, double arm) {
            const int nb = g.neighbor(node, k, dir);
            if (nb >= 0) return u[nb];
            Vector x = g.coord(node);
            x[k] += dir * arm;
            return bv(x);
        };
        const double up = endpoint(+1, hp);
        const double um = endpoint(-1, hm);
        const double u0 = u[node];
        out[k] = (hm * hm * up - hp * hp * um + (hp * hp - hm * hm) * u0) /
                 (hp * hm * (hp + hm));
    }
    return out;
}

Matrix fd_hessian(const Field& u, const Grid& g, int node) {
    const int dim = g.dim();
    Matrix out(dim, dim);
    for (int k = 0; k < dim; ++k)
        out(k, k) = g.hessian_stencil(node, k, k).apply(u);
    for (int k = 0; k < dim; ++k)
        for (int l = k + 1; l < dim; ++l)
            out(k, l) = out(l, k) = g.hessian_stencil(node, k, l).apply(u);
    return out;
}

Matrix fd_hessian(const Field& u, const Grid& g, int node, const BoundaryFn& bv) {
    const int dim = g.dim();
    Matrix out(dim, dim);
    for (int k = 0; k < dim; ++k) {
        const double hp = g.arm(node, k, +1);
        const double hm = g.arm(node, k, -1);
        auto endpoint = [&](int dir, double arm) {
            const int nb = g.neighbor(node, k, dir);
            if (nb >= 0) return u[nb];
            Vector x = g.coord(node);
            x[k] += dir * arm;
            return bv(x);
        };
        const double up = endpoint(+1, hp);
        const double um = endpoint(-1, hm);
        out(k, k) = 2.0 * (hm * up + hp * um - (hp + hm) * u[node]) /
                    (hp * hm * (hp + hm));
    }
    for (int k = 0; k < dim; ++k) {
        for (int l = k + 1; l < dim; ++l) {
            const auto& plan = g.mixed_plans_[node][g.pair_id(k, l) - dim];
            double v = 0.0;
            switch (plan.kind) {
                case Grid::MixedPlan::Kind::Cross: {
                    const double c = 1.0 / (4.0 * g.spacing() * g.spacing());
                    for (int sk : {1, -1}) {
                        for (int sl : {1, -1}) {
                            std::array<int, 3> nb = g.index(node);
                            nb[k] += sk;
                            nb[l] += sl;
                            v += sk * sl * c * u[g.find(nb)];
                        }
                    }
                    break;
                }
                case Grid::MixedPlan::Kind::OneSided: {
                    for (int t = 0; t < plan.n_terms; ++t) {
                        const auto& term = plan.terms[t];
                        const int nb = g.neighbor(node, term.s, term.dir);
                        const double gt_nb = fd_gradient(u, g, nb, bv)[term.t];
                        const double gt_0 = fd_gradient(u, g, node, bv)[term.t];
                        v += term.dir * (gt_nb - gt_0) / (g.spacing() * plan.n_terms);
                    }
                    break;
                }
                case Grid::MixedPlan::Kind::Zero:
                    break;
            }
            out(k, l) = out(l, k) = v;
        }
    }
    return out;
}

Field sample(const Grid& g, const std::function<double(const Vector&)>& f) {
    Field u(g.size());
    for (int i = 0; i < g.size(); ++i) u[i] = f(g.coord(i));
    return u;
}

void write_csv(const Grid& g, const Field& u, std::ostream& os) {
    if (u.size() != g.size()) throw GridError("field size does not match grid");
    for (int k = 0; k < g.dim(); ++k) os << "i" << (k + 1) << ",";
    for (int k = 0; k < g.dim(); ++k) os << "x" << (k + 1) << ",";
    os << "u\n";
    char buf[32];
    for (int i = 0; i < g.size(); ++i) {
        for (int k = 0; k < g.dim(); ++k) os << g.index(i)[k] << ",";
        for (int k = 0; k < g.dim(); ++k) {
            std::snprintf(buf, sizeof buf, "%.17g", g.coord(i)[k]);
            os << buf << ",";
        }
        std::snprintf(buf, sizeof buf, "%.17g", u[i]);
        os << buf << "\n";
    }
}

} // namespace pcurve::grid
