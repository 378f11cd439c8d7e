#include "report.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include "runner.hpp"

namespace spatsim {

namespace {

std::string phi_field(const std::optional<double>& phi) {
    return phi ? csv_num(*phi) : "NA";
}

std::string kind_field(epspline::ExposureKind kind) {
    return kind == epspline::ExposureKind::continuous ? "continuous" : "binary";
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    return out;
}

}  // namespace

void write_replications_csv(const std::string& path, const ScenarioResults& results) {
    auto out = open_out(path);
    out << "scenario_id,sigma_x2,phi_u,phi_c,phi_y,exposure_kind,method,variant,"
           "rep,beta_hat,se,lambda,edf_smooth,elapsed_s,failed\n";
    for (const auto& [scenario, result] : results) {
        for (const auto& r : result.replications) {
            out << r.scenario_id << ',' << csv_num(scenario.sigma_x2) << ','
                << phi_field(scenario.phi_u) << ',' << phi_field(scenario.phi_c) << ','
                << phi_field(scenario.phi_y) << ',' << kind_field(scenario.exposure_kind)
                << ',' << r.method << ',' << r.variant << ',' << r.rep << ','
                << csv_num(r.beta_hat) << ',' << csv_num(r.se) << ','
                << csv_num(r.lambda) << ',' << csv_num(r.edf_smooth) << ','
                << csv_num(r.elapsed) << ',' << (r.failed ? 1 : 0) << '\n';
        }
    }
}

void write_summary_csv(const std::string& path, const ScenarioResults& results) {
    auto out = open_out(path);
    out << "scenario_id,method,variant,n_reps,mean_beta,bias,rmse,se_ratio,q25,q75,"
           "mean_elapsed,mc_se_bias,failure_count\n";
    for (const auto& [scenario, result] : results) {
        for (const auto& m : result.metrics) {
            out << m.scenario_id << ',' << m.method << ',' << m.variant << ','
                << m.n_reps << ',' << csv_num(m.mean_beta) << ',' << csv_num(m.bias)
                << ',' << csv_num(m.rmse) << ',' << csv_num(m.se_ratio) << ','
                << csv_num(m.q25) << ',' << csv_num(m.q75) << ','
                << csv_num(m.mean_elapsed) << ',' << csv_num(m.mc_se_bias) << ','
                << m.failure_count << '\n';
        }
    }
}

namespace {

struct Panel {
    std::optional<double> phi_u, phi_c;
    std::vector<epspline::MetricsRow> rows;
    double true_beta = 3.0;
};

std::string svg_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string phi_label(const std::optional<double>& phi) {
    if (!phi) return "NA";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", *phi);
    return buf;
}

void write_one_figure(const std::string& path, double sigma_x2,
                      std::vector<Panel> panels,
                      const std::vector<std::string>& methods) {
    // panel grid axes
    std::vector<std::string> us, cs;
    for (const auto& p : panels) {
        std::string u = phi_label(p.phi_u), c = phi_label(p.phi_c);
        if (std::find(us.begin(), us.end(), u) == us.end()) us.push_back(u);
        if (std::find(cs.begin(), cs.end(), c) == cs.end()) cs.push_back(c);
    }

    double lo = 1e300, hi = -1e300;
    for (const auto& p : panels) {
        for (const auto& r : p.rows) {
            lo = std::min(lo, r.q25);
            hi = std::max(hi, r.q75);
        }
        lo = std::min(lo, p.true_beta);
        hi = std::max(hi, p.true_beta);
    }
    if (lo > hi) { lo = 0.0; hi = 1.0; }
    double pad = 0.08 * (hi - lo + 1e-9);
    lo -= pad;
    hi += pad;

    const double pw = 170, ph = 130, mx = 70, my = 60, gap = 16;
    double width = mx + us.size() * (pw + gap) + 40;
    double height = my + cs.size() * (ph + gap) + 70;

    auto out = open_out(path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
        << "\" height=\"" << height << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    out << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" "
           "font-size=\"14\">beta estimates (mean, IQR), sigma_x2 = "
        << phi_label(sigma_x2) << "</text>\n";

    auto yc = [&](double v, double top) {
        return top + ph * (1.0 - (v - lo) / (hi - lo));
    };

    for (size_t ci = 0; ci < cs.size(); ++ci) {
        for (size_t ui = 0; ui < us.size(); ++ui) {
            const Panel* panel = nullptr;
            for (const auto& p : panels)
                if (phi_label(p.phi_u) == us[ui] && phi_label(p.phi_c) == cs[ci])
                    panel = &p;
            double x0 = mx + ui * (pw + gap);
            double y0 = my + ci * (ph + gap);
            out << "<rect x=\"" << x0 << "\" y=\"" << y0 << "\" width=\"" << pw
                << "\" height=\"" << ph
                << "\" fill=\"none\" stroke=\"#888\" stroke-width=\"1\"/>\n";
            if (ci == 0)
                out << "<text x=\"" << x0 + pw / 2 << "\" y=\"" << y0 - 6
                    << "\" text-anchor=\"middle\">phi_u = " << us[ui] << "</text>\n";
            if (ui == 0)
                out << "<text x=\"" << x0 - 8 << "\" y=\"" << y0 + ph / 2
                    << "\" text-anchor=\"end\">phi_c = " << cs[ci] << "</text>\n";
            if (!panel) continue;

            double yb = yc(panel->true_beta, y0);
            out << "<line x1=\"" << x0 << "\" y1=\"" << yb << "\" x2=\"" << x0 + pw
                << "\" y2=\"" << yb
                << "\" stroke=\"#333\" stroke-dasharray=\"4,3\" stroke-width=\"1\"/>\n";

            for (size_t mi = 0; mi < methods.size(); ++mi) {
                const epspline::MetricsRow* row = nullptr;
                for (const auto& r : panel->rows) {
                    std::string label = r.method;
                    if (!r.variant.empty()) label += ":" + r.variant;
                    if (label == methods[mi]) row = &r;
                }
                if (!row || row->n_reps < 2) continue;
                double x = x0 + pw * (mi + 0.5) / methods.size();
                out << "<line x1=\"" << x << "\" y1=\"" << yc(row->q25, y0)
                    << "\" x2=\"" << x << "\" y2=\"" << yc(row->q75, y0)
                    << "\" stroke=\"#1f77b4\" stroke-width=\"2\"/>\n";
                out << "<circle cx=\"" << x << "\" cy=\"" << yc(row->mean_beta, y0)
                    << "\" r=\"3\" fill=\"#d62728\"/>\n";
            }
            // y-axis ticks on the leftmost column
            if (ui == 0) {
                for (double f : {0.0, 0.5, 1.0}) {
                    double v = lo + f * (hi - lo);
                    out << "<text x=\"" << x0 - 42 << "\" y=\"" << yc(v, y0) + 4
                        << "\" font-size=\"9\">" << svg_num(v) << "</text>\n";
                }
            }
        }
    }

    // method legend
    double ly = my + cs.size() * (ph + gap) + 20;
    out << "<text x=\"" << mx << "\" y=\"" << ly << "\" font-size=\"10\">methods "
           "(left to right per panel): ";
    for (size_t mi = 0; mi < methods.size(); ++mi)
        out << (mi ? ", " : "") << methods[mi];
    out << "</text>\n</svg>\n";
}

}  // namespace

void write_figures(const std::string& out_dir, const ScenarioResults& results) {
    namespace fs = std::filesystem;
    std::map<double, std::vector<Panel>> by_sigma;
    std::vector<std::string> methods;
    for (const auto& [scenario, result] : results) {
        Panel p;
        p.phi_u = scenario.phi_u;
        p.phi_c = scenario.phi_c;
        p.true_beta = scenario.beta;
        p.rows = result.metrics;
        for (const auto& r : result.metrics) {
            std::string label = r.method;
            if (!r.variant.empty()) label += ":" + r.variant;
            if (std::find(methods.begin(), methods.end(), label) == methods.end())
                methods.push_back(label);
        }
        by_sigma[scenario.sigma_x2].push_back(std::move(p));
    }
    for (auto& [sigma, panels] : by_sigma) {
        char name[64];
        std::snprintf(name, sizeof name, "figure_sigma_x2_%g.svg", sigma);
        write_one_figure((fs::path(out_dir) / name).string(), sigma,
                         std::move(panels), methods);
    }
}

}  // namespace spatsim
