#include "epspline/regression.hpp"

#include <lapacke.h>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace epspline {

namespace {

constexpr double kLambdaLo = 1e-8;
constexpr double kLambdaHi = 1e8;
constexpr int kGridPoints = 41;
constexpr double kGoldenRelTol = 1e-4;
constexpr int kIrlsMaxIter = 100;
constexpr double kIrlsRelTol = 1e-8;

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
double norm_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }

struct Assembled {
    Eigen::MatrixXd x;       // [parametric | smooth]
    Eigen::VectorXd s;       // penalty diagonal, zeros on parametric block
    Eigen::VectorXd w;       // prior weights
    Eigen::VectorXd y;
    int p = 0;               // parametric columns
};

Assembled assemble(const ModelSpec& spec) {
    const int n = spec.n();
    const int p = spec.n_parametric();
    const int q = spec.n_smooth();
    if (spec.parametric_design.rows() != n)
        throw std::invalid_argument("ModelSpec: design/response dimension mismatch");
    if (spec.basis && spec.basis->design.rows() != n)
        throw std::invalid_argument("ModelSpec: basis/response dimension mismatch");
    if (spec.family.is_binomial()) {
        for (int i = 0; i < n; ++i) {
            double v = spec.response(i);
            if (v != 0.0 && v != 1.0)
                throw std::invalid_argument("ModelSpec: binomial response must be in {0,1}");
        }
    }
    Assembled a;
    a.p = p;
    a.x.resize(n, p + q);
    a.x.leftCols(p) = spec.parametric_design;
    if (q > 0) a.x.rightCols(q) = spec.basis->design;
    a.s = Eigen::VectorXd::Zero(p + q);
    if (q > 0) a.s.tail(q) = spec.basis->penalty_diag;
    a.w = spec.weights.size() ? spec.weights : Eigen::VectorXd::Ones(n);
    a.y = spec.response;
    return a;
}

struct WlsCore {
    Eigen::VectorXd beta;
    Eigen::MatrixXd a_inv;   // only filled when with_inverse
    double edf_total = 0.0;
};

// Penalized weighted least squares of z on a.x with weights w.
WlsCore solve_pwls(const Assembled& a, const Eigen::VectorXd& w,
                   const Eigen::VectorXd& z, double lambda, bool with_inverse,
                   bool need_edf = true) {
    const int c = static_cast<int>(a.x.cols());
    Eigen::MatrixXd m(c, c);
    m.setZero();
    m.selfadjointView<Eigen::Lower>().rankUpdate(
        (w.array().sqrt().matrix().asDiagonal() * a.x).transpose());
    m = m.selfadjointView<Eigen::Lower>();
    Eigen::VectorXd rhs = a.x.transpose() * (w.cwiseProduct(z));
    Eigen::MatrixXd pen = m;
    pen.diagonal() += lambda * a.s;
    Eigen::MatrixXd l = cholesky_with_jitter(std::move(pen));
    WlsCore out;
    out.beta = l.triangularView<Eigen::Lower>().solve(rhs);
    l.triangularView<Eigen::Lower>().transpose().solveInPlace(out.beta);
    if (with_inverse) {
        Eigen::MatrixXd inv = Eigen::MatrixXd::Identity(c, c);
        l.triangularView<Eigen::Lower>().solveInPlace(inv);
        out.a_inv = inv.transpose() * inv;
        out.edf_total = c - lambda * out.a_inv.diagonal().dot(a.s);
    } else if (need_edf) {
        // edf = c - lambda * tr(A^{-1} S); S diagonal, so only the penalized
        // columns of A^{-1} are needed
        double tr = 0.0;
        for (int j = 0; j < c; ++j) {
            if (a.s(j) == 0.0) continue;
            Eigen::VectorXd col = l.triangularView<Eigen::Lower>().solve(
                Eigen::VectorXd::Unit(c, j));
            tr += a.s(j) * col.squaredNorm();
        }
        out.edf_total = c - lambda * tr;
    }
    return out;
}

double binomial_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& mu) {
    double dev = 0.0;
    for (int i = 0; i < y.size(); ++i) {
        double m = std::min(std::max(mu(i), 1e-12), 1.0 - 1e-12);
        if (y(i) > 0.5)
            dev += -2.0 * std::log(m);
        else
            dev += -2.0 * std::log(1.0 - m);
    }
    return dev;
}

struct IrlsResult {
    WlsCore core;
    Eigen::VectorXd mu;
    Eigen::VectorXd w_work;
    double deviance = 0.0;
    bool converged = false;
    bool separation = false;
};

IrlsResult irls(const Assembled& a, double lambda, bool with_inverse,
                FamilyKind kind, const Eigen::VectorXd* warm_beta) {
    const int n = static_cast<int>(a.y.size());
    const bool logit = (kind == FamilyKind::binomial_logit);
    Eigen::VectorXd eta(n), mu(n);
    if (warm_beta && warm_beta->size() == a.x.cols()) {
        eta = a.x * (*warm_beta);
    } else {
        // start from fitted probabilities (y + 0.5)/2, i.e. 0.25 or 0.75
        const double probit_q75 = 0.6744897501960817;  // Phi^{-1}(0.75)
        for (int i = 0; i < n; ++i) {
            double m0 = (a.y(i) + 0.5) / 2.0;
            eta(i) = logit ? std::log(m0 / (1.0 - m0))
                           : (m0 > 0.5 ? probit_q75 : -probit_q75);
        }
    }

    IrlsResult res;
    double dev_prev = std::numeric_limits<double>::infinity();
    Eigen::VectorXd w_work(n), z(n);
    for (int iter = 0; iter < kIrlsMaxIter; ++iter) {
        for (int i = 0; i < n; ++i) {
            double e = std::min(std::max(eta(i), -35.0), 35.0);
            double m, dmu;
            if (logit) {
                m = 1.0 / (1.0 + std::exp(-e));
                dmu = m * (1.0 - m);
            } else {
                m = norm_cdf(e);
                dmu = norm_pdf(e);
            }
            m = std::min(std::max(m, 1e-12), 1.0 - 1e-12);
            dmu = std::max(dmu, 1e-12);
            double var = m * (1.0 - m);
            mu(i) = m;
            w_work(i) = a.w(i) * dmu * dmu / var;
            z(i) = e + (a.y(i) - m) / dmu;
        }
        WlsCore core = solve_pwls(a, w_work, z, lambda, false, false);
        eta = a.x * core.beta;
        for (int i = 0; i < n; ++i) {
            double e = std::min(std::max(eta(i), -35.0), 35.0);
            mu(i) = logit ? 1.0 / (1.0 + std::exp(-e)) : norm_cdf(e);
        }
        double dev = binomial_deviance(a.y, mu);
        res.core = std::move(core);
        res.deviance = dev;
        if (std::abs(dev - dev_prev) < kIrlsRelTol * (std::abs(dev) + 0.1)) {
            res.converged = true;
            break;
        }
        dev_prev = dev;
    }
    // same working system as the last iteration, now with EDF (and covariance
    // when requested) so the returned quantities match the returned beta
    res.core = solve_pwls(a, w_work, z, lambda, with_inverse, true);
    for (int i = 0; i < n; ++i)
        if (mu(i) < 1e-8 || mu(i) > 1.0 - 1e-8) res.separation = true;
    res.mu = mu;
    res.w_work = w_work;
    return res;
}

}  // namespace

FitResult fit_penalized(const ModelSpec& spec, double lambda) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw std::invalid_argument("fit_penalized: lambda must be finite and >= 0");
    Assembled a = assemble(spec);
    const int n = spec.n();
    FitResult fit;
    fit.lambda = lambda;

    if (!spec.family.is_binomial()) {
        WlsCore core = solve_pwls(a, a.w, a.y, lambda, true);
        Eigen::VectorXd resid = a.y - a.x * core.beta;
        double rss = resid.cwiseProduct(a.w).dot(resid);
        fit.coefficients = core.beta;
        fit.edf_total = core.edf_total;
        fit.edf_smooth = core.edf_total - a.p;
        fit.deviance = rss;
        if (n - fit.edf_total <= 0.0)
            throw std::runtime_error("fit_penalized: edf >= n, scale undefined");
        fit.scale = rss / (n - fit.edf_total);
        fit.covariance = core.a_inv * fit.scale;
        fit.gcv = gcv_score(fit, n);
        fit.converged = true;
        return fit;
    }

    IrlsResult r = irls(a, lambda, true, spec.family.kind, nullptr);
    if (!r.converged)
        throw std::runtime_error("fit_penalized: IRLS failed to converge");
    fit.coefficients = r.core.beta;
    fit.edf_total = r.core.edf_total;
    fit.edf_smooth = r.core.edf_total - a.p;
    fit.deviance = r.deviance;
    fit.scale = 1.0;  // binomial dispersion fixed at 1
    fit.covariance = r.core.a_inv;
    fit.converged = r.converged;
    fit.separation_warning = r.separation;
    fit.gcv = gcv_score(fit, n);
    return fit;
}

double gcv_score(const FitResult& fit, int n) {
    if (fit.edf_total >= n)
        throw std::runtime_error("gcv_score: edf >= n is degenerate");
    double denom = n - fit.edf_total;
    return n * fit.deviance / (denom * denom);
}

double coef_se(const FitResult& fit, int index) {
    if (index < 0 || index >= fit.covariance.rows())
        throw std::out_of_range("coef_se: index out of range");
    return std::sqrt(fit.covariance(index, index));
}

namespace {

void sym_eig_all(Eigen::MatrixXd a, Eigen::VectorXd& values, Eigen::MatrixXd& vectors) {
    const int n = static_cast<int>(a.rows());
    values.resize(n);
    int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, a.data(), n, values.data());
    if (info != 0) throw std::runtime_error("sym_eig_all: dsyevd failed");
    vectors = std::move(a);
}

// GCV as a function of lambda, evaluated either through the reparameterized
// gaussian profile (O(c) per lambda) or a full IRLS refit for binomial.
class GcvProfile {
public:
    GcvProfile(const ModelSpec& spec, Assembled a)
        : spec_(spec), a_(std::move(a)), n_(spec.n()) {
        if (!spec.family.is_binomial()) init_gaussian();
    }

    double operator()(double lambda) {
        if (!spec_.family.is_binomial()) {
            Eigen::ArrayXd shrink = 1.0 / (1.0 + lambda * eigvals_.array());
            double edf = shrink.sum();
            if (n_ - edf <= 0.0) return std::numeric_limits<double>::infinity();
            double explained = (u2_.array() * (2.0 * shrink - shrink.square())).sum();
            double rss = std::max(yty_ - explained, 0.0);
            double denom = n_ - edf;
            return n_ * rss / (denom * denom);
        }
        IrlsResult r = irls(a_, lambda, false, spec_.family.kind,
                            warm_.size() ? &warm_ : nullptr);
        warm_ = r.core.beta;
        double edf = r.core.edf_total;
        if (n_ - edf <= 0.0) return std::numeric_limits<double>::infinity();
        double denom = n_ - edf;
        return n_ * r.deviance / (denom * denom);
    }

private:
    void init_gaussian() {
        const int c = static_cast<int>(a_.x.cols());
        Eigen::MatrixXd m(c, c);
        m.setZero();
        m.selfadjointView<Eigen::Lower>().rankUpdate(
            (a_.w.array().sqrt().matrix().asDiagonal() * a_.x).transpose());
        m = m.selfadjointView<Eigen::Lower>();
        Eigen::VectorXd b = a_.x.transpose() * a_.w.cwiseProduct(a_.y);
        yty_ = a_.y.cwiseProduct(a_.w).dot(a_.y);
        Eigen::MatrixXd l = cholesky_with_jitter(std::move(m));
        // B = L^{-1} S L^{-T} = G G' with G = L^{-1} sqrt(S)
        Eigen::MatrixXd g = Eigen::MatrixXd(a_.s.array().sqrt().matrix().asDiagonal());
        l.triangularView<Eigen::Lower>().solveInPlace(g);
        Eigen::MatrixXd bmat(c, c);
        bmat.setZero();
        bmat.selfadjointView<Eigen::Lower>().rankUpdate(g);
        bmat = bmat.selfadjointView<Eigen::Lower>();
        Eigen::MatrixXd q;
        sym_eig_all(std::move(bmat), eigvals_, q);
        eigvals_ = eigvals_.cwiseMax(0.0);
        Eigen::VectorXd lb = l.triangularView<Eigen::Lower>().solve(b);
        u2_ = (q.transpose() * lb).array().square();
    }

    const ModelSpec& spec_;
    Assembled a_;
    int n_;
    double yty_ = 0.0;
    Eigen::VectorXd eigvals_;  // eigenvalues of L^{-1} S L^{-T}
    Eigen::VectorXd u2_;
    Eigen::VectorXd warm_;
};

struct Candidate {
    double log_lambda;
    double gcv;
};

bool better(const Candidate& a, const Candidate& b) {
    if (a.gcv != b.gcv) return a.gcv < b.gcv;
    return a.log_lambda > b.log_lambda;  // ties toward the smoother fit
}

Candidate golden_refine(GcvProfile& f, double lo, double hi) {
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - invphi * (hi - lo);
    double x2 = lo + invphi * (hi - lo);
    double f1 = f(std::exp(x1));
    double f2 = f(std::exp(x2));
    while (hi - lo > kGoldenRelTol) {
        if (f1 < f2 || (f1 == f2 && x1 > x2)) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - invphi * (hi - lo);
            f1 = f(std::exp(x1));
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + invphi * (hi - lo);
            f2 = f(std::exp(x2));
        }
    }
    Candidate c{0.5 * (lo + hi), 0.0};
    c.gcv = f(std::exp(c.log_lambda));
    return c;
}

}  // namespace

LambdaSelection select_lambda(const ModelSpec& spec) {
    if (!spec.basis)
        throw std::invalid_argument("select_lambda: model has no smooth term");
    GcvProfile profile(spec, assemble(spec));

    const double lo = std::log(kLambdaLo);
    const double hi = std::log(kLambdaHi);
    std::vector<double> grid_x(kGridPoints), grid_g(kGridPoints);
    for (int i = 0; i < kGridPoints; ++i) {
        grid_x[i] = lo + (hi - lo) * i / (kGridPoints - 1);
        grid_g[i] = profile(std::exp(grid_x[i]));
    }

    std::vector<Candidate> candidates;
    bool boundary_chosen = false;
    for (int i = 1; i + 1 < kGridPoints; ++i) {
        if (grid_g[i] <= grid_g[i - 1] && grid_g[i] <= grid_g[i + 1])
            candidates.push_back(golden_refine(profile, grid_x[i - 1], grid_x[i + 1]));
    }
    // boundary grid points stay as unrefined candidates
    candidates.push_back({grid_x[0], grid_g[0]});
    candidates.push_back({grid_x[kGridPoints - 1], grid_g[kGridPoints - 1]});

    Candidate best = candidates[0];
    for (const auto& c : candidates)
        if (better(c, best)) best = c;
    if (best.log_lambda <= grid_x[0] || best.log_lambda >= grid_x[kGridPoints - 1])
        boundary_chosen = true;

    LambdaSelection sel;
    sel.lambda = std::exp(best.log_lambda);
    sel.boundary = boundary_chosen;
    sel.fit = fit_penalized(spec, sel.lambda);
    sel.fit.boundary_lambda = boundary_chosen;
    return sel;
}

}  // namespace epspline
