#include "qbsde/regression.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "qbsde/errors.hpp"

namespace qbsde {
namespace {

// Multi-indices of total degree <= degree for dim coordinates, constant first.
std::vector<std::array<int, 2>> enumerate_powers(int dim, int degree) {
    std::vector<std::array<int, 2>> powers;
    if (dim == 1) {
        for (int j = 0; j <= degree; ++j) powers.push_back({j, 0});
    } else {
        for (int total = 0; total <= degree; ++total) {
            for (int j1 = total; j1 >= 0; --j1) powers.push_back({j1, total - j1});
        }
    }
    return powers;
}

}  // namespace

struct FittedRegression::Impl {
    std::vector<std::array<int, 2>> powers;
    int dim = 1;
    int degree = 0;
    double scale = 1.0;
    std::optional<std::array<double, 2>> clip_box;
    FeatureFn feature;         // empty unless the design kept a feature column
    double feature_shift = 0.0;
    double feature_scale = 1.0;
    Eigen::VectorXd coeffs;
    Eigen::MatrixXd se_matrix;  // A^{-1} G A^{-1}
    double sigma = 0.0;
    double rms_se = 0.0;
};

struct RegressionDesign::Impl {
    std::vector<std::array<int, 2>> powers;
    int dim = 1;
    int degree = 0;
    double scale = 1.0;
    std::optional<std::array<double, 2>> clip_box;
    FeatureFn feature;
    double feature_shift = 0.0;
    double feature_scale = 1.0;
    Eigen::MatrixXd X;         // M x k design
    Eigen::LDLT<Eigen::MatrixXd> chol;  // of A = G + ridge*D
    Eigen::MatrixXd se_matrix;
    double trace_SG_over_M = 0.0;
};

namespace {

// Evaluates the full product basis at x into row (size = powers.size()).
void basis_row_common(const std::vector<std::array<int, 2>>& powers, int dim, int degree,
                      double scale, std::span<const double> x, double* row) {
    // Per-coordinate normalized Hermite ladders.
    double h[2][16];
    for (int k = 0; k < dim; ++k) {
        const double u = x[k] / scale;
        double prev = 1.0, cur = u, fact = 1.0;
        h[k][0] = 1.0;
        if (degree >= 1) h[k][1] = u;
        for (int j = 2; j <= degree; ++j) {
            const double next = u * cur - (j - 1) * prev;
            prev = cur;
            cur = next;
            fact *= static_cast<double>(j);
            h[k][j] = cur / std::sqrt(fact);
        }
    }
    for (std::size_t b = 0; b < powers.size(); ++b) {
        double v = h[0][powers[b][0]];
        if (dim == 2) v *= h[1][powers[b][1]];
        row[b] = v;
    }
}

}  // namespace

RegressionDesign::RegressionDesign(std::span<const double> state, int dim,
                                   const RegressionSpec& spec, double scale, FeatureFn feature) {
    if (dim < 1 || dim > 2) throw std::invalid_argument("RegressionDesign: dim must be 1 or 2");
    if (spec.degree < 0) throw std::invalid_argument("RegressionDesign: degree must be >= 0");
    if (spec.degree > 12) throw std::invalid_argument("RegressionDesign: degree must be <= 12");
    if (spec.ridge < 0.0) throw std::invalid_argument("RegressionDesign: ridge must be >= 0");
    if (state.size() % dim != 0) throw std::invalid_argument("RegressionDesign: state size");
    const long m = static_cast<long>(state.size() / dim);
    if (m < 1) throw std::invalid_argument("RegressionDesign: empty state sample");

    impl_ = std::make_shared<Impl>();
    impl_->dim = dim;
    impl_->clip_box = spec.clip_box;

    // Zero dispersion (t = 0, or a constant sample) cannot support a
    // polynomial fit; fall back to the constant basis, i.e. the sample mean.
    bool degenerate = !(scale > 0.0);
    if (!degenerate) {
        double lo = state[0], hi = state[0];
        for (double v : state) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (hi - lo < 1e-12 * (1.0 + std::abs(hi))) degenerate = true;
    }
    impl_->degree = degenerate ? 0 : spec.degree;
    impl_->scale = degenerate ? 1.0 : scale;
    impl_->powers = enumerate_powers(dim, impl_->degree);
    const int kp = static_cast<int>(impl_->powers.size());

    // The feature column is standardized so its Gram entry sits at the same
    // M scale as the normalized Hermite columns; a constant feature sample
    // carries no information and would only shadow the intercept, so it is
    // dropped.
    std::vector<double> fvals;
    if (feature && !degenerate) {
        fvals.resize(m);
        double mu = 0.0;
        for (long r = 0; r < m; ++r) {
            fvals[r] = feature(state.subspan(static_cast<std::size_t>(r) * dim, dim));
            mu += fvals[r];
        }
        mu /= static_cast<double>(m);
        double var = 0.0;
        for (double v : fvals) var += (v - mu) * (v - mu);
        const double sd = std::sqrt(var / static_cast<double>(m));
        if (sd > 1e-12 * (1.0 + std::abs(mu))) {
            impl_->feature = std::move(feature);
            impl_->feature_shift = mu;
            impl_->feature_scale = sd;
        } else {
            fvals.clear();
        }
    }
    const bool has_feature = static_cast<bool>(impl_->feature);
    const int k = kp + (has_feature ? 1 : 0);

    impl_->X.resize(m, k);
    std::vector<double> row(kp);
    for (long r = 0; r < m; ++r) {
        basis_row_common(impl_->powers, dim, impl_->degree, impl_->scale,
                         state.subspan(static_cast<std::size_t>(r) * dim, dim), row.data());
        for (int b = 0; b < kp; ++b) impl_->X(r, b) = row[b];
        if (has_feature) {
            impl_->X(r, kp) = (fvals[r] - impl_->feature_shift) / impl_->feature_scale;
        }
    }

    Eigen::MatrixXd gram = impl_->X.transpose() * impl_->X;
    Eigen::MatrixXd a = gram;
    for (int b = 1; b < k; ++b) a(b, b) += spec.ridge;  // constant stays unpenalized

    if (spec.ridge == 0.0) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
        const double emin = es.eigenvalues().minCoeff();
        const double emax = es.eigenvalues().maxCoeff();
        if (!(emin > 1e-13 * std::max(emax, 1.0))) {
            throw SingularSystemError(
                "regression design is numerically singular and ridge is 0; "
                "raise the ridge weight or lower the degree");
        }
    }
    impl_->chol.compute(a);
    const Eigen::MatrixXd a_inv = impl_->chol.solve(Eigen::MatrixXd::Identity(k, k));
    impl_->se_matrix = a_inv * gram * a_inv;
    impl_->trace_SG_over_M = (impl_->se_matrix * gram).trace() / static_cast<double>(m);
}

int RegressionDesign::num_basis() const {
    return static_cast<int>(impl_->powers.size()) + (impl_->feature ? 1 : 0);
}

FittedRegression RegressionDesign::solve(std::span<const double> targets) const {
    const long m = impl_->X.rows();
    if (static_cast<long>(targets.size()) != m) {
        throw std::invalid_argument("RegressionDesign::solve: targets size mismatch");
    }
    const Eigen::Map<const Eigen::VectorXd> y(targets.data(), m);
    const Eigen::VectorXd rhs = impl_->X.transpose() * y;
    const Eigen::VectorXd coeffs = impl_->chol.solve(rhs);
    const Eigen::VectorXd fitted = impl_->X * coeffs;
    const double rss = (y - fitted).squaredNorm();
    const long dof = std::max<long>(m - impl_->X.cols(), 1);
    const double sigma = std::sqrt(std::max(rss, 0.0) / static_cast<double>(dof));

    auto out = std::make_shared<FittedRegression::Impl>();
    out->powers = impl_->powers;
    out->dim = impl_->dim;
    out->degree = impl_->degree;
    out->scale = impl_->scale;
    out->clip_box = impl_->clip_box;
    out->feature = impl_->feature;
    out->feature_shift = impl_->feature_shift;
    out->feature_scale = impl_->feature_scale;
    out->coeffs = coeffs;
    out->se_matrix = impl_->se_matrix;
    out->sigma = sigma;
    out->rms_se = sigma * std::sqrt(std::max(impl_->trace_SG_over_M, 0.0));

    FittedRegression fr;
    fr.impl_ = out;
    fr.fitted_.resize(m);
    for (long r = 0; r < m; ++r) {
        double v = fitted(r);
        if (out->clip_box) v = std::clamp(v, (*out->clip_box)[0], (*out->clip_box)[1]);
        fr.fitted_[r] = v;
    }
    return fr;
}

namespace {

// Full row incl. the optional feature column; row must hold kp + 1 slots.
template <typename ImplT>
int full_row(const ImplT& impl, std::span<const double> x, double* row) {
    basis_row_common(impl.powers, impl.dim, impl.degree, impl.scale, x, row);
    int k = static_cast<int>(impl.powers.size());
    if (impl.feature) {
        row[k] = (impl.feature(x) - impl.feature_shift) / impl.feature_scale;
        ++k;
    }
    return k;
}

}  // namespace

double FittedRegression::predict(std::span<const double> x) const {
    double row[96];
    const int k = full_row(*impl_, x, row);
    double v = 0.0;
    for (int b = 0; b < k; ++b) v += row[b] * impl_->coeffs(b);
    if (impl_->clip_box) v = std::clamp(v, (*impl_->clip_box)[0], (*impl_->clip_box)[1]);
    return v;
}

double FittedRegression::predict1(double x) const { return predict(std::span(&x, 1)); }

double FittedRegression::prediction_se(std::span<const double> x) const {
    double row[96];
    const int k = full_row(*impl_, x, row);
    const Eigen::Map<const Eigen::VectorXd> b(row, k);
    const double q = b.dot(impl_->se_matrix * b);
    return impl_->sigma * std::sqrt(std::max(q, 0.0));
}

double FittedRegression::prediction_se1(double x) const {
    return prediction_se(std::span(&x, 1));
}

const std::vector<double>& FittedRegression::fitted_values() const { return fitted_; }

double FittedRegression::rms_prediction_se() const { return impl_->rms_se; }

int FittedRegression::num_basis() const {
    return static_cast<int>(impl_->powers.size()) + (impl_->feature ? 1 : 0);
}

double FittedRegression::residual_sigma() const { return impl_->sigma; }

std::vector<double> regress_conditional_expectation(std::span<const double> targets,
                                                    std::span<const double> state, int dim,
                                                    const RegressionSpec& spec, double scale) {
    RegressionDesign design(state, dim, spec, scale);
    return design.solve(targets).fitted_values();
}

}  // namespace qbsde
