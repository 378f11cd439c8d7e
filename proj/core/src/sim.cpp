#include "epspline/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <thread>

extern "C" void openblas_set_num_threads(int);

namespace epspline {

namespace {

// RNG component tags (one independent stream per generated component)
enum : uint64_t {
    kTagLocations = 0,
    kTagZu = 1,
    kTagZc = 2,
    kTagZy = 3,
    kTagEpsX = 4,
    kTagEpsY = 5,
};

std::string fmt_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::string fmt_phi(const std::optional<double>& phi) {
    return phi ? fmt_num(*phi) : "NA";
}

}  // namespace

void Scenario::validate() const {
    if (n < 2) throw std::invalid_argument("Scenario: n must be >= 2");
    if (sigma_x2 < 0.0 || sigma_y2 <= 0.0)
        throw std::invalid_argument("Scenario: invalid variance");
    auto check_phi = [](const std::optional<double>& p) {
        if (p && *p <= 0.0) throw std::invalid_argument("Scenario: phi must be positive");
    };
    check_phi(phi_u);
    check_phi(phi_c);
    check_phi(phi_y);
    if (!phi_u && exposure_kind == ExposureKind::continuous && sigma_x2 <= 0.0)
        throw std::invalid_argument(
            "Scenario: phi_u absent with sigma_x2 = 0 leaves no unconfounded variability");
}

Scenario Scenario::make(const std::string& id_prefix, double sigma_x2,
                        std::optional<double> phi_u, std::optional<double> phi_c,
                        std::optional<double> phi_y, ExposureKind kind, int n) {
    Scenario s;
    s.n = n;
    s.sigma_x2 = sigma_x2;
    s.phi_u = phi_u;
    s.phi_c = phi_c;
    s.phi_y = phi_y;
    s.exposure_kind = kind;
    // equal loadings when both exposure components are present, sqrt(0.5)
    // otherwise so total exposure variability stays comparable
    double d = (phi_u && phi_c) ? 0.5 : std::sqrt(0.5);
    s.delta_u = d;
    s.delta_c = d;
    s.gamma_y = phi_y ? 1.0 : 0.0;
    s.id = id_prefix + "_sx" + fmt_num(sigma_x2) + "_pu" + fmt_phi(phi_u) + "_pc" +
           fmt_phi(phi_c);
    if (phi_y) s.id += "_py" + fmt_num(*phi_y);
    if (kind == ExposureKind::binary_latent_probit) s.id += "_bin";
    s.validate();
    return s;
}

std::vector<Scenario> scenario_grid(GridKind kind) {
    const std::vector<std::optional<double>> phis = {0.04, 0.15, 0.6, std::nullopt};
    std::vector<Scenario> grid;
    switch (kind) {
        case GridKind::main:
            for (double sx : {0.0, 0.056, 0.5})
                for (const auto& pu : phis)
                    for (const auto& pc : phis) {
                        if (!pu && sx == 0.0) continue;  // x fully collinear with z^c
                        grid.push_back(Scenario::make("main", sx, pu, pc, std::nullopt,
                                                      ExposureKind::continuous));
                    }
            break;
        case GridKind::appendix_a:
            for (const auto& [pc, pu, py] :
                 std::vector<std::tuple<double, double, double>>{
                     {0.04, 0.15, 0.6},
                     {0.04, 0.6, 0.15},
                     {0.15, 0.6, 0.04},
                     {0.15, 0.04, 0.6},
                     {0.6, 0.04, 0.15},
                     {0.6, 0.15, 0.04}})
                grid.push_back(Scenario::make("appA", 0.5, pu, pc, py,
                                              ExposureKind::continuous));
            break;
        case GridKind::appendix_b:
            for (const auto& [pc, pu] : std::vector<std::pair<double, double>>{
                     {0.04, 0.15},
                     {0.04, 0.6},
                     {0.15, 0.6},
                     {0.15, 0.04},
                     {0.6, 0.04},
                     {0.6, 0.15}})
                grid.push_back(Scenario::make("appB", 1.0, pu, pc, std::nullopt,
                                              ExposureKind::binary_latent_probit));
            break;
    }
    return grid;
}

Dataset generate_dataset(const Scenario& scenario, uint64_t master_seed, int rep) {
    scenario.validate();
    const int n = scenario.n;
    Dataset data;
    {
        RngStream rng(master_seed, scenario.id, rep, kTagLocations);
        data.locations = uniform_locations(n, rng);
    }

    auto draw_component = [&](const std::optional<double>& phi,
                              uint64_t tag) -> Eigen::VectorXd {
        if (!phi) return Eigen::VectorXd();
        RngStream rng(master_seed, scenario.id, rep, tag);
        MaternSpec spec{scenario.nu, *phi};
        return z_score(sample_gp(data.locations, spec, rng)).values;
    };
    Eigen::VectorXd z_u = draw_component(scenario.phi_u, kTagZu);
    Eigen::VectorXd z_c = draw_component(scenario.phi_c, kTagZc);
    Eigen::VectorXd z_y = draw_component(scenario.phi_y, kTagZy);

    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n);
    if (z_u.size()) x0 += scenario.delta_u * z_u;
    if (z_c.size()) x0 += scenario.delta_c * z_c;

    Eigen::VectorXd eps_x(n), eps_y(n);
    {
        RngStream rng(master_seed, scenario.id, rep, kTagEpsX);
        double sd = std::sqrt(scenario.sigma_x2);
        for (int i = 0; i < n; ++i) eps_x(i) = sd * rng.normal();
    }
    {
        RngStream rng(master_seed, scenario.id, rep, kTagEpsY);
        double sd = std::sqrt(scenario.sigma_y2);
        for (int i = 0; i < n; ++i) eps_y(i) = sd * rng.normal();
    }

    if (scenario.exposure_kind == ExposureKind::binary_latent_probit) {
        Eigen::VectorXd latent = x0 + eps_x;
        data.exposure = (latent.array() > 0.0).cast<double>();
        data.binary_exposure = true;
    } else {
        data.exposure = x0 + eps_x;
        data.binary_exposure = false;
    }

    data.outcome = scenario.beta * data.exposure + eps_y;
    if (z_c.size()) data.outcome += scenario.gamma * z_c;
    if (z_y.size()) data.outcome += scenario.gamma_y * z_y;

    GenerationTruth truth;
    truth.beta = scenario.beta;
    truth.z_c = z_c;
    truth.z_u = z_u;
    truth.z_y = z_y;
    truth.eps_x = eps_x;
    truth.eps_y = eps_y;
    truth.x0 = x0;
    data.truth = std::move(truth);
    return data;
}

std::string EstimatorSpec::label() const {
    switch (method) {
        case Method::NS: return "NS";
        case Method::FDF: return "F-DF:" + std::to_string(k - 1);
        case Method::PS: return "PS:K=" + std::to_string(k);
        case Method::SpatialPlus: return "Spatial+:K=" + std::to_string(k);
        case Method::EPS: {
            std::string l = "E-PS:K=" + std::to_string(k);
            if (family_explicit) {
                switch (exposure_family.kind) {
                    case FamilyKind::gaussian_identity: l += ":linear"; break;
                    case FamilyKind::binomial_logit: l += ":logit"; break;
                    case FamilyKind::binomial_probit: l += ":probit"; break;
                }
            }
            return l;
        }
    }
    return "?";
}

EstimatorSpec EstimatorSpec::parse(const std::string& text) {
    std::vector<std::string> parts;
    size_t start = 0;
    while (start <= text.size()) {
        size_t pos = text.find(':', start);
        if (pos == std::string::npos) {
            parts.push_back(text.substr(start));
            break;
        }
        parts.push_back(text.substr(start, pos - start));
        start = pos + 1;
    }
    if (parts.empty() || parts[0].empty())
        throw std::invalid_argument("method spec is empty");

    EstimatorSpec spec;
    const std::string& name = parts[0];
    if (name == "NS")
        spec.method = Method::NS;
    else if (name == "F-DF")
        spec.method = Method::FDF;
    else if (name == "PS")
        spec.method = Method::PS;
    else if (name == "E-PS")
        spec.method = Method::EPS;
    else if (name == "Spatial+")
        spec.method = Method::SpatialPlus;
    else
        throw std::invalid_argument("unknown method '" + name + "'");

    for (size_t i = 1; i < parts.size(); ++i) {
        const std::string& tok = parts[i];
        if (tok.rfind("K=", 0) == 0) {
            spec.k = std::stoi(tok.substr(2));
        } else if (spec.method == Method::FDF && !tok.empty() &&
                   tok.find_first_not_of("0123456789") == std::string::npos) {
            spec.k = std::stoi(tok) + 1;  // DF = K - 1
        } else if (spec.method == Method::EPS && tok == "logit") {
            spec.exposure_family = Family::logit();
            spec.family_explicit = true;
        } else if (spec.method == Method::EPS && tok == "probit") {
            spec.exposure_family = Family::probit();
            spec.family_explicit = true;
        } else if (spec.method == Method::EPS && tok == "linear") {
            spec.exposure_family = Family::gaussian();
            spec.family_explicit = true;
        } else {
            throw std::invalid_argument("unknown method option '" + tok + "' in '" +
                                        text + "'");
        }
    }
    if (spec.method != Method::NS && spec.k < 4)
        throw std::invalid_argument("method '" + text + "': basis dimension too small");
    return spec;
}

double quantile_type7(std::vector<double> values, double p) {
    if (values.empty()) throw std::invalid_argument("quantile of empty sample");
    std::sort(values.begin(), values.end());
    double h = (values.size() - 1) * p;
    size_t lo = static_cast<size_t>(std::floor(h));
    size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - lo) * (values[hi] - values[lo]);
}

MetricsRow compute_metrics(const std::vector<BetaEstimate>& estimates,
                           double true_beta) {
    if (estimates.size() < 2)
        throw std::invalid_argument("compute_metrics: need at least 2 estimates");
    const int m = static_cast<int>(estimates.size());
    std::vector<double> betas(m);
    double mean_beta = 0.0, mse = 0.0, mean_se = 0.0, mean_elapsed = 0.0;
    for (int i = 0; i < m; ++i) {
        betas[i] = estimates[i].beta_hat;
        mean_beta += betas[i];
        mse += (betas[i] - true_beta) * (betas[i] - true_beta);
        mean_se += estimates[i].se;
        mean_elapsed += estimates[i].elapsed;
    }
    mean_beta /= m;
    mse /= m;
    mean_se /= m;
    mean_elapsed /= m;
    double ss = 0.0;
    for (double b : betas) ss += (b - mean_beta) * (b - mean_beta);
    double sd = std::sqrt(ss / (m - 1));

    MetricsRow row;
    row.method = method_name(estimates[0].method);
    row.variant = estimates[0].variant;
    row.n_reps = m;
    row.mean_beta = mean_beta;
    row.bias = mean_beta - true_beta;
    row.rmse = std::sqrt(mse);
    row.se_ratio = sd > 0.0 ? mean_se / sd : std::numeric_limits<double>::quiet_NaN();
    row.q25 = quantile_type7(betas, 0.25);
    row.q75 = quantile_type7(betas, 0.75);
    row.mean_elapsed = mean_elapsed;
    row.mc_se_bias = sd / std::sqrt(static_cast<double>(m));
    return row;
}

ScenarioResult run_scenario(const Scenario& scenario,
                            const std::vector<EstimatorSpec>& methods, int n_reps,
                            uint64_t master_seed, int workers) {
    scenario.validate();
    if (methods.empty()) throw std::invalid_argument("run_scenario: no methods");
    if (n_reps < 1) throw std::invalid_argument("run_scenario: n_reps must be >= 1");
    openblas_set_num_threads(1);  // worker-count invariance of the numerics

    int k_max = 0;
    for (const auto& m : methods)
        if (m.method != Method::NS) k_max = std::max(k_max, m.k);
    for (const auto& m : methods)
        if (m.method != Method::NS && m.k > scenario.n)
            throw std::invalid_argument("run_scenario: basis dimension exceeds n");

    const int n_methods = static_cast<int>(methods.size());
    std::vector<std::vector<RepRecord>> slots(n_reps);

    auto run_rep = [&](int rep) {
        Dataset data = generate_dataset(scenario, master_seed, rep);
        std::optional<TprsSpectrum> spectrum;
        if (k_max > 0) spectrum.emplace(data.locations, k_max);

        std::vector<RepRecord> recs;
        recs.reserve(n_methods);
        for (int mi = 0; mi < n_methods; ++mi) {
            const EstimatorSpec& m = methods[mi];
            RepRecord rec;
            rec.scenario_id = scenario.id;
            rec.rep = rep;
            try {
                BetaEstimate est;
                switch (m.method) {
                    case Method::NS:
                        est = estimate_ns(data);
                        break;
                    case Method::FDF:
                        est = estimate_fdf(data, spectrum->basis_for(m.k));
                        break;
                    case Method::PS:
                        est = estimate_ps(data, spectrum->basis_for(m.k));
                        break;
                    case Method::EPS: {
                        Family fam = Family::gaussian();
                        if (m.family_explicit)
                            fam = m.exposure_family;
                        else if (data.binary_exposure)
                            fam = Family::logit();
                        est = estimate_eps(data, spectrum->basis_for(m.k), fam);
                        break;
                    }
                    case Method::SpatialPlus:
                        est = estimate_spatialplus(data, spectrum->basis_for(m.k));
                        break;
                }
                rec.method = method_name(est.method);
                rec.variant = est.variant;
                rec.beta_hat = est.beta_hat;
                rec.se = est.se;
                rec.lambda = est.lambda_used.value_or(
                    std::numeric_limits<double>::quiet_NaN());
                rec.edf_smooth = est.edf_smooth.value_or(
                    std::numeric_limits<double>::quiet_NaN());
                rec.elapsed = est.elapsed;
            } catch (const std::exception& e) {
                rec.method = method_name(m.method);
                rec.variant = "";
                rec.beta_hat = std::numeric_limits<double>::quiet_NaN();
                rec.se = std::numeric_limits<double>::quiet_NaN();
                rec.lambda = std::numeric_limits<double>::quiet_NaN();
                rec.edf_smooth = std::numeric_limits<double>::quiet_NaN();
                rec.failed = true;
                rec.error = e.what();
            }
            recs.push_back(std::move(rec));
        }
        slots[rep] = std::move(recs);
    };

    int pool = std::max(1, std::min(workers, n_reps));
    if (pool == 1) {
        for (int rep = 0; rep < n_reps; ++rep) run_rep(rep);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> threads;
        threads.reserve(pool);
        for (int t = 0; t < pool; ++t)
            threads.emplace_back([&] {
                for (int rep = next.fetch_add(1); rep < n_reps;
                     rep = next.fetch_add(1))
                    run_rep(rep);
            });
        for (auto& th : threads) th.join();
    }

    ScenarioResult result;
    for (int mi = 0; mi < n_methods; ++mi) {
        // rebuild estimates in replication order: deterministic aggregation
        // regardless of scheduling
        std::vector<BetaEstimate> ests;
        std::string variant;
        for (int rep = 0; rep < n_reps; ++rep) {
            const RepRecord& r = slots[rep][mi];
            if (r.failed) continue;
            BetaEstimate est;
            est.method = methods[mi].method;
            est.variant = r.variant;
            est.beta_hat = r.beta_hat;
            est.se = r.se;
            est.elapsed = r.elapsed;
            ests.push_back(std::move(est));
            variant = r.variant;
        }
        MetricsRow row;
        if (ests.size() >= 2) {
            row = compute_metrics(ests, scenario.beta);
        } else {
            row.method = method_name(methods[mi].method);
            row.n_reps = static_cast<int>(ests.size());
            row.variant = variant;
        }
        row.scenario_id = scenario.id;
        row.failure_count = n_reps - static_cast<int>(ests.size());
        result.metrics.push_back(std::move(row));
    }
    for (auto& recs : slots)
        for (auto& r : recs) result.replications.push_back(std::move(r));
    return result;
}

}  // namespace epspline
