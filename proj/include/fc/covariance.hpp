#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <utility>
#include <vector>

#include "fc/curve.hpp"

namespace fc {

/// Trace-class covariance operator as a finite eigenpair expansion
/// Q u = sum_k lambda_k <e_k, u> e_k, lambdas sorted descending, modes
/// orthonormal (validated within 1e-10).
class CovOp {
public:
    CovOp(std::vector<double> lambdas, std::vector<Curve> modes);

    size_t rank() const { return lambdas_.size(); }
    const std::vector<double>& lambdas() const { return lambdas_; }
    const std::vector<Curve>& modes() const { return modes_; }
    double trace() const;
    double max_lambda() const { return lambdas_.empty() ? 0.0 : lambdas_.front(); }

    /// Spectral cutoff below which eigenvalues count as kernel directions.
    double kernel_cutoff(double rel = 1e-12) const { return rel * max_lambda(); }

private:
    struct unchecked_tag {};
    CovOp(std::vector<double> l, std::vector<Curve> m, unchecked_tag)
        : lambdas_(std::move(l)), modes_(std::move(m)) {}
    friend CovOp sqrt_cov(const CovOp&);
    friend CovOp pseudo_inverse(const CovOp&, double);

    std::vector<double> lambdas_;
    std::vector<Curve> modes_;
};

Curve apply_cov(const CovOp& q, const Curve& g);

/// Eigenvalues mapped through sqrt; same modes.
CovOp sqrt_cov(const CovOp& q);

/// Moore-Penrose on the spectrum: 1/lambda above the relative cutoff, 0 below.
CovOp pseudo_inverse(const CovOp& q, double cutoff_rel = 1e-12);

/// 2x2 block covariance (Q1, Q12; Q12*, Q2) of a bivariate curve-valued noise.
/// The cross block is stored in the two eigenbases:
/// c(k,m) = <Q12 e_k^{(1)}, e_m^{(2)}> = Cov(<X1,e_k^{(1)}>, <X2,e_m^{(2)}>).
struct BlockCov {
    CovOp q1;
    CovOp q2;
    Eigen::MatrixXd c;

    BlockCov(CovOp q1_, CovOp q2_, Eigen::MatrixXd c_);
};

struct BlockReport {
    bool valid = false;
    double spectral_norm = 0.0;   // of the whitened cross matrix
    double min_eigenvalue = 0.0;  // of the assembled 2n x 2n coordinate matrix
    std::string reason;           // empty when valid
};

/// Coordinate matrix [[diag(l1), C], [C^T, diag(l2)]].
Eigen::MatrixXd assembled_matrix(const BlockCov& b);

/// Accepts iff the whitened cross matrix R2^+ C R1^+ has spectral norm
/// <= 1 + tol and the cross block vanishes on the kernels of the marginals;
/// equivalent to positive semidefiniteness of the assembled block matrix.
BlockReport validate_block(const BlockCov& b, double tol = 1e-10);

/// Cov(L1(t,x), L2(t,y)) = t <Q12 h_x, h_y>, via the eigenbasis expansion.
double cross_cov_field(const BlockCov& b, double t, double x, double y);

/// Regression of the second component on the first: coordinates of the
/// closure of Q12 Q1^{-1} plus the residual covariance Q2 - B Q12*.
struct Regression {
    Eigen::MatrixXd coeff;        // n2 x n1, maps basis-1 coords to basis-2 coords
    Eigen::MatrixXd residual_cov; // n2 x n2 in basis 2
    double min_residual_eigenvalue = 0.0;
};

/// Requires the cross block to vanish on the kernel of Q1 (the operator
/// Q12 Q1^{-1} has no continuous closure otherwise); rejects with
/// config_error when violated.
Regression regression_operator(const BlockCov& b, double range_tol = 1e-10);

/// E[X2 | X1 = x1] = B x1 under the jointly Gaussian model.
Curve conditional_expectation(const BlockCov& b, const Curve& x1);

/// The four scalars <(int_0^t S_s Q_{ij} S_s* ds) h_x, h_y> of the
/// time-integrated block operator, using S_s* h_x = h_{x+s}:
/// entry(i,j) integrates the eigen-expansion of Q_{ij} at shifted probes.
/// Row/column 0 pairs h_x with slot 1, h_y with slot 2 as in the block layout.
std::array<std::array<double, 2>, 2> qt_block(const BlockCov& b, double t, double x, double y,
                                              int time_nodes = 32);

/// Deterministic time factor of the volatility, nu(s).
struct TimeFactor {
    enum class Kind { constant, exp_decay };
    Kind kind = Kind::constant;
    double level = 1.0;
    double decay = 0.0;

    static TimeFactor constant(double v) { return {Kind::constant, v, 0.0}; }
    static TimeFactor exponential(double v, double k) { return {Kind::exp_decay, v, k}; }

    double operator()(double s) const;
    double sup(double t0, double t1) const;
};

/// Volatility operator sigma(s) = nu(s) * (a Id + sum_j <., u_j> psi_j).
/// The finite-rank spatial part keeps every pricing quadrature closed-form
/// while covering desk-scale calibration.
struct SigmaSpec {
    TimeFactor nu = TimeFactor::constant(1.0);
    double identity_scale = 1.0;
    std::vector<std::pair<Curve, Curve>> rank_terms; // (psi_j, u_j)

    /// Spatial part applied to a curve (without the time factor).
    Curve apply(const Curve& h) const;

    /// Bound on the spatial operator norm: |a| + sum ||psi_j|| ||u_j||.
    double spatial_bound() const;

    /// Bound on ||sigma(s)||_op over [t0, t1].
    double op_bound(double t0, double t1) const { return nu.sup(t0, t1) * spatial_bound(); }

    bool is_zero() const;
};

} // namespace fc
