#include "fc/covariance.hpp"

#include <algorithm>
#include <cmath>

#include "fc/errors.hpp"
#include "fc/quadrature.hpp"

namespace fc {

CovOp::CovOp(std::vector<double> lambdas, std::vector<Curve> modes)
    : lambdas_(std::move(lambdas)), modes_(std::move(modes)) {
    if (lambdas_.size() != modes_.size())
        throw config_error("CovOp: eigenvalue and mode counts differ");
    for (size_t k = 0; k < lambdas_.size(); ++k) {
        if (!(lambdas_[k] >= 0.0) || !std::isfinite(lambdas_[k]))
            throw config_error("CovOp: eigenvalues must be nonnegative (operator not PSD)");
        if (k > 0 && lambdas_[k] > lambdas_[k - 1])
            throw config_error("CovOp: eigenvalues must be sorted descending");
    }
    for (size_t i = 0; i < modes_.size(); ++i)
        for (size_t j = 0; j <= i; ++j) {
            double ip = inner_product(modes_[i], modes_[j]);
            if (std::abs(ip - (i == j ? 1.0 : 0.0)) > 1e-10)
                throw config_error("CovOp: modes are not orthonormal");
        }
}

double CovOp::trace() const {
    double s = 0.0;
    for (double l : lambdas_) s += l;
    return s;
}

Curve apply_cov(const CovOp& q, const Curve& g) {
    Curve acc(g.space(), 0.0);
    for (size_t k = 0; k < q.rank(); ++k) {
        double c = q.lambdas()[k] * inner_product(q.modes()[k], g);
        acc = combine(1.0, acc, c, q.modes()[k]);
    }
    return acc;
}

CovOp sqrt_cov(const CovOp& q) {
    std::vector<double> l = q.lambdas();
    for (double& v : l) v = std::sqrt(v);
    return CovOp(std::move(l), q.modes(), CovOp::unchecked_tag{});
}

CovOp pseudo_inverse(const CovOp& q, double cutoff_rel) {
    double cut = q.kernel_cutoff(cutoff_rel);
    std::vector<double> l = q.lambdas();
    for (double& v : l) v = v > cut ? 1.0 / v : 0.0;
    // Inverted spectrum is ascending where nonzero; keep the mode pairing and
    // skip the ordering invariant by constructing unchecked.
    return CovOp(std::move(l), q.modes(), CovOp::unchecked_tag{});
}

BlockCov::BlockCov(CovOp q1_, CovOp q2_, Eigen::MatrixXd c_)
    : q1(std::move(q1_)), q2(std::move(q2_)), c(std::move(c_)) {
    if (c.rows() != static_cast<Eigen::Index>(q1.rank()) ||
        c.cols() != static_cast<Eigen::Index>(q2.rank()))
        throw config_error("BlockCov: cross matrix shape must be rank(Q1) x rank(Q2)");
}

Eigen::MatrixXd assembled_matrix(const BlockCov& b) {
    const Eigen::Index n1 = b.c.rows(), n2 = b.c.cols();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n1 + n2, n1 + n2);
    for (Eigen::Index k = 0; k < n1; ++k) m(k, k) = b.q1.lambdas()[k];
    for (Eigen::Index j = 0; j < n2; ++j) m(n1 + j, n1 + j) = b.q2.lambdas()[j];
    m.block(0, n1, n1, n2) = b.c;
    m.block(n1, 0, n2, n1) = b.c.transpose();
    return m;
}

BlockReport validate_block(const BlockCov& b, double tol) {
    BlockReport rep;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(assembled_matrix(b),
                                                      Eigen::EigenvaluesOnly);
    rep.min_eigenvalue = es.eigenvalues().minCoeff();

    const double cut1 = b.q1.kernel_cutoff();
    const double cut2 = b.q2.kernel_cutoff();
    const double scale =
        std::sqrt(std::max(b.q1.max_lambda(), 1e-300) * std::max(b.q2.max_lambda(), 1e-300));

    // Range conditions: the cross block must vanish against kernel modes.
    for (Eigen::Index k = 0; k < b.c.rows(); ++k)
        for (Eigen::Index m = 0; m < b.c.cols(); ++m) {
            bool kernel_row = b.q1.lambdas()[k] <= cut1;
            bool kernel_col = b.q2.lambdas()[m] <= cut2;
            if ((kernel_row || kernel_col) && std::abs(b.c(k, m)) > tol * scale) {
                rep.reason = "cross block does not vanish on a marginal kernel mode";
                return rep;
            }
        }

    // Whitened cross matrix over the non-kernel modes.
    std::vector<Eigen::Index> rows, cols;
    for (Eigen::Index k = 0; k < b.c.rows(); ++k)
        if (b.q1.lambdas()[k] > cut1) rows.push_back(k);
    for (Eigen::Index m = 0; m < b.c.cols(); ++m)
        if (b.q2.lambdas()[m] > cut2) cols.push_back(m);
    Eigen::MatrixXd w(rows.size(), cols.size());
    for (size_t i = 0; i < rows.size(); ++i)
        for (size_t j = 0; j < cols.size(); ++j)
            w(i, j) = b.c(rows[i], cols[j]) /
                      std::sqrt(b.q1.lambdas()[rows[i]] * b.q2.lambdas()[cols[j]]);
    rep.spectral_norm =
        w.size() == 0 ? 0.0 : Eigen::JacobiSVD<Eigen::MatrixXd>(w).singularValues().maxCoeff();

    if (rep.spectral_norm > 1.0 + tol) {
        rep.reason = "whitened cross matrix exceeds unit spectral norm";
        return rep;
    }
    rep.valid = true;
    return rep;
}

double cross_cov_field(const BlockCov& b, double t, double x, double y) {
    if (t < 0.0 || x < 0.0 || y < 0.0)
        throw domain_error("cross_cov_field: negative argument");
    double s = 0.0;
    for (Eigen::Index k = 0; k < b.c.rows(); ++k)
        for (Eigen::Index m = 0; m < b.c.cols(); ++m)
            if (b.c(k, m) != 0.0) s += b.c(k, m) * b.q1.modes()[k](x) * b.q2.modes()[m](y);
    return t * s;
}

Regression regression_operator(const BlockCov& b, double range_tol) {
    const double cut1 = b.q1.kernel_cutoff();
    const double scale = std::max(
        {std::abs(b.c.size() ? b.c.cwiseAbs().maxCoeff() : 0.0), b.q1.max_lambda(), 1e-300});
    for (Eigen::Index k = 0; k < b.c.rows(); ++k)
        if (b.q1.lambdas()[k] <= cut1)
            for (Eigen::Index m = 0; m < b.c.cols(); ++m)
                if (std::abs(b.c(k, m)) > range_tol * scale)
                    throw config_error(
                        "regression_operator: cross block must vanish on the kernel of Q1 "
                        "(no bounded regression operator exists)");

    Regression r;
    const Eigen::Index n1 = b.c.rows(), n2 = b.c.cols();
    r.coeff = Eigen::MatrixXd::Zero(n2, n1);
    for (Eigen::Index k = 0; k < n1; ++k)
        if (b.q1.lambdas()[k] > cut1)
            for (Eigen::Index m = 0; m < n2; ++m)
                r.coeff(m, k) = b.c(k, m) / b.q1.lambdas()[k];
    Eigen::MatrixXd l2 = Eigen::MatrixXd::Zero(n2, n2);
    for (Eigen::Index m = 0; m < n2; ++m) l2(m, m) = b.q2.lambdas()[m];
    r.residual_cov = l2 - r.coeff * b.c;
    r.residual_cov = 0.5 * (r.residual_cov + r.residual_cov.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r.residual_cov, Eigen::EigenvaluesOnly);
    r.min_residual_eigenvalue = es.eigenvalues().minCoeff();
    return r;
}

Curve conditional_expectation(const BlockCov& b, const Curve& x1) {
    Regression r = regression_operator(b);
    Eigen::VectorXd x(b.q1.rank());
    for (size_t k = 0; k < b.q1.rank(); ++k) x(k) = inner_product(x1, b.q1.modes()[k]);
    Eigen::VectorXd y = r.coeff * x;
    Curve acc(x1.space(), 0.0);
    for (size_t m = 0; m < b.q2.rank(); ++m) acc = combine(1.0, acc, y(m), b.q2.modes()[m]);
    return acc;
}

namespace {

void add_mode_breaks(std::vector<double>& breaks, const std::vector<Curve>& modes,
                     double probe, double t) {
    for (const Curve& e : modes)
        for (double k : e.knots()) {
            double s = k - probe;
            if (s > 0.0 && s < t) breaks.push_back(s);
        }
}

} // namespace

std::array<std::array<double, 2>, 2> qt_block(const BlockCov& b, double t, double x, double y,
                                              int time_nodes) {
    if (!(t > 0.0)) throw domain_error("qt_block: t must be positive");
    std::vector<double> breaks;
    add_mode_breaks(breaks, b.q1.modes(), x, t);
    add_mode_breaks(breaks, b.q1.modes(), y, t);
    add_mode_breaks(breaks, b.q2.modes(), x, t);
    add_mode_breaks(breaks, b.q2.modes(), y, t);

    auto diag = [&](const CovOp& q, double s) {
        double v = 0.0;
        for (size_t k = 0; k < q.rank(); ++k)
            v += q.lambdas()[k] * q.modes()[k](x + s) * q.modes()[k](y + s);
        return v;
    };
    auto cross = [&](double px, double py, double s) {
        // <Q12 h_{px+s}, h_{py+s}> with the first slot in basis 1.
        double v = 0.0;
        for (Eigen::Index k = 0; k < b.c.rows(); ++k)
            for (Eigen::Index m = 0; m < b.c.cols(); ++m)
                if (b.c(k, m) != 0.0)
                    v += b.c(k, m) * b.q1.modes()[k](px + s) * b.q2.modes()[m](py + s);
        return v;
    };

    std::array<std::array<double, 2>, 2> out{};
    out[0][0] = integrate_segmented([&](double s) { return diag(b.q1, s); }, 0.0, t, breaks,
                                    time_nodes, 1e-9);
    out[1][1] = integrate_segmented([&](double s) { return diag(b.q2, s); }, 0.0, t, breaks,
                                    time_nodes, 1e-9);
    out[1][0] = integrate_segmented([&](double s) { return cross(x, y, s); }, 0.0, t, breaks,
                                    time_nodes, 1e-9);
    out[0][1] = integrate_segmented([&](double s) { return cross(y, x, s); }, 0.0, t, breaks,
                                    time_nodes, 1e-9);
    return out;
}

double TimeFactor::operator()(double s) const {
    switch (kind) {
        case Kind::constant: return level;
        case Kind::exp_decay: return level * std::exp(-decay * s);
    }
    return level;
}

double TimeFactor::sup(double t0, double t1) const {
    switch (kind) {
        case Kind::constant: return std::abs(level);
        case Kind::exp_decay:
            return std::abs(level) *
                   std::exp(-decay * (decay >= 0.0 ? std::min(t0, t1) : std::max(t0, t1)));
    }
    return std::abs(level);
}

Curve SigmaSpec::apply(const Curve& h) const {
    Curve out = scale(identity_scale, h);
    for (const auto& [psi, u] : rank_terms)
        out = combine(1.0, out, inner_product(h, u), psi);
    return out;
}

double SigmaSpec::spatial_bound() const {
    double b = std::abs(identity_scale);
    for (const auto& [psi, u] : rank_terms) b += norm(psi) * norm(u);
    return b;
}

bool SigmaSpec::is_zero() const {
    if (nu.level == 0.0) return true;
    return identity_scale == 0.0 && rank_terms.empty();
}

} // namespace fc
