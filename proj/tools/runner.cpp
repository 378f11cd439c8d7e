#include "runner.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "report.hpp"

namespace spatsim {

using epspline::EstimatorSpec;
using epspline::ExposureKind;
using epspline::Scenario;

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

std::string trim(const std::string& s) {
    auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

[[noreturn]] void usage_error(const std::string& message) {
    throw std::invalid_argument(message +
                                "\nusage: spatsim --grid <main|appendix_a|appendix_b|FILE>"
                                " --methods M1,M2,... [--reps N] [--seed S] [--n N]"
                                " [--workers W] [--out DIR] [--plots] [--config FILE]");
}

void apply_key(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "grid") {
        cfg.grid = value;
    } else if (key == "methods") {
        cfg.methods.clear();
        for (const auto& m : split(value, ','))
            cfg.methods.push_back(EstimatorSpec::parse(trim(m)));
    } else if (key == "reps") {
        cfg.n_reps = std::stoi(value);
    } else if (key == "seed") {
        cfg.master_seed = std::stoull(value);
    } else if (key == "n") {
        cfg.n = std::stoi(value);
    } else if (key == "workers") {
        cfg.workers = std::stoi(value);
    } else if (key == "out") {
        cfg.out_dir = value;
    } else if (key == "plots") {
        cfg.emit_plots = (value == "" || value == "1" || value == "true");
    } else {
        usage_error("unknown option '" + key + "'");
    }
}

void load_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            usage_error("config line is not key=value: '" + line + "'");
        apply_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

}  // namespace

RunConfig parse_config(const std::vector<std::string>& args) {
    RunConfig cfg;
    if (const char* env = std::getenv("SPATSIM_WORKERS")) cfg.workers = std::atoi(env);

    // config file first so explicit flags override it
    for (size_t i = 0; i < args.size(); ++i)
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) usage_error("--config needs a file path");
            load_config_file(cfg, args[i + 1]);
        }

    for (size_t i = 0; i < args.size(); ++i) {
        const std::string& arg = args[i];
        if (arg.rfind("--", 0) != 0) usage_error("unexpected argument '" + arg + "'");
        std::string key = arg.substr(2);
        std::string value;
        auto eq = key.find('=');
        if (eq != std::string::npos) {
            value = key.substr(eq + 1);
            key = key.substr(0, eq);
        } else if (key != "plots" && i + 1 < args.size()) {
            value = args[++i];
        }
        if (key == "config") continue;  // handled above
        apply_key(cfg, key, value);
    }

    if (cfg.methods.empty()) usage_error("--methods must list at least one method");
    if (cfg.n_reps < 1) usage_error("--reps must be >= 1");
    if (cfg.n < 2) usage_error("--n must be >= 2");
    if (cfg.workers < 1) usage_error("--workers must be >= 1");
    for (const auto& m : cfg.methods)
        if (m.method != epspline::Method::NS && m.k > cfg.n)
            usage_error("method '" + m.label() + "': basis dimension exceeds n=" +
                        std::to_string(cfg.n));
    return cfg;
}

std::vector<Scenario> parse_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scenario file '" + path + "'");
    std::vector<Scenario> scenarios;
    std::string line;
    int lineno = 0;
    auto parse_phi = [](const std::string& tok) -> std::optional<double> {
        if (tok == "NA" || tok == "na") return std::nullopt;
        return std::stod(tok);
    };
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto f = split(line, ',');
        for (auto& t : f) t = trim(t);
        if (f.size() != 14)
            throw std::runtime_error("scenario file line " + std::to_string(lineno) +
                                     ": expected 14 fields, got " +
                                     std::to_string(f.size()));
        Scenario s;
        s.id = f[0];
        s.n = std::stoi(f[1]);
        s.sigma_x2 = std::stod(f[2]);
        s.phi_u = parse_phi(f[3]);
        s.phi_c = parse_phi(f[4]);
        s.phi_y = parse_phi(f[5]);
        s.nu = std::stod(f[6]);
        s.beta = std::stod(f[7]);
        s.gamma = std::stod(f[8]);
        s.gamma_y = std::stod(f[9]);
        s.sigma_y2 = std::stod(f[10]);
        s.delta_u = std::stod(f[11]);
        s.delta_c = std::stod(f[12]);
        if (f[13] == "continuous")
            s.exposure_kind = ExposureKind::continuous;
        else if (f[13] == "binary")
            s.exposure_kind = ExposureKind::binary_latent_probit;
        else
            throw std::runtime_error("scenario file line " + std::to_string(lineno) +
                                     ": unknown exposure kind '" + f[13] + "'");
        s.validate();
        scenarios.push_back(std::move(s));
    }
    return scenarios;
}

std::vector<Scenario> load_scenarios(const RunConfig& config) {
    std::vector<Scenario> scenarios;
    if (config.grid == "main")
        scenarios = epspline::scenario_grid(epspline::GridKind::main);
    else if (config.grid == "appendix_a")
        scenarios = epspline::scenario_grid(epspline::GridKind::appendix_a);
    else if (config.grid == "appendix_b")
        scenarios = epspline::scenario_grid(epspline::GridKind::appendix_b);
    else
        scenarios = parse_scenario_file(config.grid);
    for (auto& s : scenarios)
        if (config.grid == "main" || config.grid == "appendix_a" ||
            config.grid == "appendix_b")
            s.n = config.n;
    return scenarios;
}

std::string csv_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

int run(const RunConfig& config) {
    namespace fs = std::filesystem;
    fs::create_directories(config.out_dir);

    std::vector<Scenario> scenarios = load_scenarios(config);
    std::vector<std::pair<Scenario, epspline::ScenarioResult>> results;
    results.reserve(scenarios.size());
    bool any_failures = false;

    for (const auto& scenario : scenarios) {
        auto result = epspline::run_scenario(scenario, config.methods, config.n_reps,
                                             config.master_seed, config.workers);
        for (const auto& row : result.metrics)
            if (row.failure_count > 0) any_failures = true;
        results.emplace_back(scenario, std::move(result));
    }

    write_replications_csv((fs::path(config.out_dir) / "replications.csv").string(),
                           results);
    write_summary_csv((fs::path(config.out_dir) / "summary.csv").string(), results);
    if (config.emit_plots) write_figures(config.out_dir, results);
    return any_failures ? 2 : 0;
}

}  // namespace spatsim
