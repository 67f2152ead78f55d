#include "pcurve/symfunc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pcurve::symfunc {

namespace {

void require_finite(const Eigen::Ref<const Vector>& lam) {
    if (!lam.allFinite())
        throw Error("spectrum has non-finite entries");
}

void require_dim(const Eigen::Ref<const Vector>& lam, const PSpec& spec) {
    if (lam.size() != spec.n())
        throw Error("spectrum dimension " + std::to_string(lam.size()) +
                    " does not match n = " + std::to_string(spec.n()));
}

// Sums of logs of the subset sums; requires all sums positive.
double log_value(const Vector& sums) {
    double acc = 0.0;
    for (Eigen::Index s = 0; s < sums.size(); ++s) acc += std::log(sums[s]);
    return acc;
}

} // namespace

PSpec::PSpec(int n, int p) : n_(n), p_(p) {
    if (n < 2 || n > 10)
        throw Error("n must be in [2, 10], got " + std::to_string(n));
    if (p < 1 || p > n)
        throw Error("p must be in [1, n], got " + std::to_string(p));

    // Enumerate p-subsets of {0..n-1} in lexicographic member order.
    std::vector<int> pick(p);
    for (int i = 0; i < p; ++i) pick[i] = i;
    mask_to_id_.assign(std::size_t(1) << n, -1);
    while (true) {
        std::uint32_t mask = 0;
        for (int i : pick) mask |= (1u << i);
        mask_to_id_[mask] = static_cast<int>(masks_.size());
        masks_.push_back(mask);
        members_.push_back(pick);

        int j = p - 1;
        while (j >= 0 && pick[j] == n - p + j) --j;
        if (j < 0) break;
        ++pick[j];
        for (int i = j + 1; i < p; ++i) pick[i] = pick[i - 1] + 1;
    }
    m_ = static_cast<int>(masks_.size());

    containing_.resize(n);
    for (int s = 0; s < m_; ++s)
        for (int k : members_[s]) containing_[k].push_back(s);
}

Vector PSpec::subset_sums(const Eigen::Ref<const Vector>& lam) const {
    Vector sums(m_);
    for (int s = 0; s < m_; ++s) {
        double acc = 0.0;
        for (int k : members_[s]) acc += lam[k];
        sums[s] = acc;
    }
    return sums;
}

double min_psum(const Eigen::Ref<const Vector>& lam, const PSpec& spec) {
    require_dim(lam, spec);
    require_finite(lam);
    // The minimum over subsets is attained at the p smallest entries.
    Vector v = lam;
    std::sort(v.begin(), v.end());
    return v.head(spec.p()).sum();
}

double default_cone_margin(const Eigen::Ref<const Vector>& lam) {
    return 1e-10 * (1.0 + lam.cwiseAbs().maxCoeff());
}

bool in_cone(const Eigen::Ref<const Vector>& lam, const PSpec& spec, double margin) {
    return min_psum(lam, spec) > margin;
}

bool in_cone(const Eigen::Ref<const Vector>& lam, const PSpec& spec) {
    return in_cone(lam, spec, default_cone_margin(lam));
}

double value(const Eigen::Ref<const Vector>& lam, const PSpec& spec) {
    require_dim(lam, spec);
    require_finite(lam);
    const Vector sums = spec.subset_sums(lam);
    double result;
    if ((sums.array() > 0.0).all()) {
        result = std::exp(log_value(sums));
    } else {
        result = 1.0;
        for (Eigen::Index s = 0; s < sums.size(); ++s) result *= sums[s];
    }
    if (!std::isfinite(result))
        throw OverflowError("operator value overflows double range");
    return result;
}

double value_root(const Eigen::Ref<const Vector>& lam, const PSpec& spec) {
    require_dim(lam, spec);
    require_finite(lam);
    const Vector sums = spec.subset_sums(lam);
    if (!((sums.array() > 0.0).all()))
        throw NotInConeError("spectrum is not in the p-convexity cone");
    return std::exp(log_value(sums) / spec.subset_count());
}

Vector grad_diag(const Eigen::Ref<const Vector>& lam, const PSpec& spec) {
    require_dim(lam, spec);
    require_finite(lam);
    const Vector sums = spec.subset_sums(lam);
    if (!((sums.array() > 0.0).all()))
        throw NotInConeError("spectrum is not in the p-convexity cone");
    const double logF = log_value(sums);

    Vector g(spec.n());
    for (int k = 0; k < spec.n(); ++k) {
        double acc = 0.0;
        for (int s : spec.subsets_containing(k))
            acc += std::exp(logF - std::log(sums[s]));
        g[k] = acc;
    }
    if (!g.allFinite())
        throw OverflowError("operator gradient overflows double range");
    return g;
}

std::pair<Matrix, Matrix> hess_blocks(const Eigen::Ref<const Vector>& lam,
                                      const PSpec& spec) {
    require_dim(lam, spec);
    require_finite(lam);
    const int n = spec.n();
    const Vector sums = spec.subset_sums(lam);
    if (!((sums.array() > 0.0).all()))
        throw NotInConeError("spectrum is not in the p-convexity cone");
    const double logF = log_value(sums);

    // F/sigma_S and 1/sigma_S; every term below is a product of one of each,
    // so the sums involve only same-sign terms.
    Vector f_over(sums.size()), inv(sums.size());
    for (Eigen::Index s = 0; s < sums.size(); ++s) {
        f_over[s] = std::exp(logF - std::log(sums[s]));
        inv[s] = 1.0 / sums[s];
    }

    Matrix hd = Matrix::Zero(n, n);
    for (int k = 0; k < n; ++k) {
        for (int l = k; l < n; ++l) {
            double acc = 0.0;
            for (int s : spec.subsets_containing(k))
                for (int t : spec.subsets_containing(l))
                    if (s != t) acc += f_over[s] * inv[t];
            hd(k, l) = acc;
            hd(l, k) = acc;
        }
    }

    Matrix ho = Matrix::Zero(n, n);
    for (int k = 0; k < n; ++k) {
        for (int r = k + 1; r < n; ++r) {
            // Matched pairs S = P + {r}, T = P + {k} with P avoiding k and r.
            double acc = 0.0;
            for (int s : spec.subsets_containing(r)) {
                const std::uint32_t mask = spec.masks()[s];
                if (mask & (1u << k)) continue;
                const int t = spec.id_of_mask((mask & ~(1u << r)) | (1u << k));
                acc += f_over[s] * inv[t];
            }
            ho(k, r) = -acc;
            ho(r, k) = -acc;
        }
    }

    if (!hd.allFinite() || !ho.allFinite())
        throw OverflowError("operator Hessian overflows double range");
    return {hd, ho};
}

OperatorJet jet(const Eigen::Ref<const Vector>& lam, const PSpec& spec) {
    OperatorJet out;
    out.value_f = value(lam, spec);
    out.value_ft = value_root(lam, spec);
    out.grad_diag = grad_diag(lam, spec);
    std::tie(out.hess_diag, out.hess_off) = hess_blocks(lam, spec);
    return out;
}

OperatorJet normalized_jet(const Eigen::Ref<const Vector>& lam, const PSpec& spec) {
    require_dim(lam, spec);
    require_finite(lam);
    const int n = spec.n();
    const double m = spec.subset_count();
    const Vector sums = spec.subset_sums(lam);
    if (!((sums.array() > 0.0).all()))
        throw NotInConeError("spectrum is not in the p-convexity cone");
    const double logF = log_value(sums);
    const double ft = std::exp(logF / m);

    // Work with the ratios dF_k / F = sum_{S ni k} 1/sigma_S, which stay
    // bounded whenever F itself would overflow.
    Vector inv(sums.size());
    for (Eigen::Index s = 0; s < sums.size(); ++s) inv[s] = 1.0 / sums[s];
    Vector ratio(n);
    for (int k = 0; k < n; ++k) {
        double acc = 0.0;
        for (int s : spec.subsets_containing(k)) acc += inv[s];
        ratio[k] = acc;
    }

    OperatorJet out;
    out.value_f = std::exp(logF);  // may be +inf; the normalized blocks stay finite
    out.value_ft = ft;
    out.grad_diag = (ft / m) * ratio;

    // Chain rule: d2Ft_{kl} = (Ft/m) [ d2F_{kl}/F + (1/m - 1) (dF_k/F)(dF_l/F) ].
    Matrix hd(n, n);
    for (int k = 0; k < n; ++k) {
        for (int l = k; l < n; ++l) {
            double pair_acc = 0.0;
            for (int s : spec.subsets_containing(k))
                for (int t : spec.subsets_containing(l))
                    if (s != t) pair_acc += inv[s] * inv[t];
            const double v =
                (ft / m) * (pair_acc + (1.0 / m - 1.0) * ratio[k] * ratio[l]);
            hd(k, l) = v;
            hd(l, k) = v;
        }
    }
    out.hess_diag = hd;

    Matrix ho = Matrix::Zero(n, n);
    for (int k = 0; k < n; ++k) {
        for (int r = k + 1; r < n; ++r) {
            double acc = 0.0;
            for (int s : spec.subsets_containing(r)) {
                const std::uint32_t mask = spec.masks()[s];
                if (mask & (1u << k)) continue;
                const int t = spec.id_of_mask((mask & ~(1u << r)) | (1u << k));
                acc += inv[s] * inv[t];
            }
            ho(k, r) = -(ft / m) * acc;
            ho(r, k) = ho(k, r);
        }
    }
    out.hess_off = ho;
    return out;
}

MatrixJet matrix_jet(const Eigen::Ref<const Matrix>& A, const PSpec& spec) {
    if (A.rows() != spec.n() || A.cols() != spec.n())
        throw Error("matrix dimension does not match n");
    const double scale = 1.0 + A.cwiseAbs().maxCoeff();
    if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
        throw Error("matrix_jet requires a symmetric matrix");

    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (A + A.transpose()));
    if (es.info() != Eigen::Success)
        throw Error("symmetric eigendecomposition failed");

    MatrixJet out;
    out.eigvals = es.eigenvalues();
    out.eigvecs = es.eigenvectors();
    const OperatorJet nj = normalized_jet(out.eigvals, spec);
    out.value = nj.value_ft;
    out.d_matrix =
        out.eigvecs * nj.grad_diag.asDiagonal() * out.eigvecs.transpose();
    return out;
}

double growth_radius(double target, const Eigen::Ref<const Vector>& lam,
                     const PSpec& spec) {
    require_dim(lam, spec);
    require_finite(lam);
    const int n = spec.n();
    const int p = spec.p();

    if (p < n) {
        // All p-subset sums of the first n-1 entries must be positive; the
        // minimum is the sum of the p smallest among them.
        Vector head = lam.head(n - 1);
        std::sort(head.begin(), head.end());
        if (head.head(p).sum() <= 0.0)
            throw Error("growth_radius hypothesis violated: leading entries "
                        "are not p-positive");
    }

    // +inf stands for "past double range, certainly >= target".
    auto value_at = [&](double R) {
        Vector shifted = lam;
        shifted[n - 1] += R;
        try {
            return value(shifted, spec);
        } catch (const OverflowError&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    if (value_at(0.0) >= target) return 0.0;

    // Start of the regime where every sum containing lambda_n is nonnegative;
    // F is nondecreasing in R from there on.
    double lo = 0.0;
    const Vector sums = spec.subset_sums(lam);
    for (int s = 0; s < spec.subset_count(); ++s)
        if (spec.masks()[s] & (1u << (n - 1))) lo = std::max(lo, -sums[s]);

    double hi = std::max(1.0, 2.0 * lo);
    int guard = 0;
    while (value_at(hi) < target) {
        hi *= 2.0;
        if (++guard > 200)
            throw Error("growth_radius failed to bracket the target");
    }

    while (hi - lo > 1e-8) {
        const double mid = 0.5 * (lo + hi);
        if (value_at(mid) >= target)
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

Vector sorted_desc(const Eigen::Ref<const Vector>& lam) {
    Vector v = lam;
    std::sort(v.begin(), v.end(), std::greater<double>());
    return v;
}

} // namespace pcurve::symfunc
