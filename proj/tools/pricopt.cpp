// Command-line front end: simulate, optimize, oracle, report.

#include <pricopt/pricopt.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace pricopt;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitInfeasible = 2;

std::string pct(double x) { return detail::format_fixed(x, 2); }

void print_summary(std::ostream& out, const Json& j) {
    const auto& s = j.at("solver");
    out << "objective        " << j.at("objective").get<std::string>() << '\n'
        << "customers        " << j.at("n").get<std::size_t>() << '\n'
        << "solver           " << s.at("solver").get<std::string>() << " (" << s.at("status").get<std::string>() << ")\n";
    if (s.contains("error")) {
        out << "error            " << s.at("error").get<std::string>() << '\n';
        return;
    }
    out << "volume ratio %   " << pct(j.at("volume_ratio").get<double>()) << '\n'
        << "count ratio %    " << pct(j.at("count_ratio").get<double>()) << '\n'
        << "mean delta %     " << pct(j.at("mean_delta").get<double>()) << '\n'
        << "increases        " << j.at("n_increases").get<std::size_t>() << " (mean "
        << pct(j.at("mean_increase").get<double>()) << "%)\n"
        << "decreases        " << j.at("n_decreases").get<std::size_t>() << " (mean "
        << pct(j.at("mean_decrease").get<double>()) << "%)\n"
        << "unchanged        " << j.at("n_zero").get<std::size_t>() << '\n'
        << "feasible         " << (j.at("feasible").get<bool>() ? "yes" : "no") << '\n';
}

ScenarioConfig load(const std::string& path, const std::optional<std::uint64_t>& seed) {
    auto c = load_scenario(path);
    if (seed) c.set_seed(*seed);
    return c;
}

int finish(const ScenarioOutcome& o, const std::optional<std::string>& out_dir) {
    if (out_dir) write_outputs(*out_dir, o);
    print_summary(std::cout, report_json(o));
    if (!o.report.error.empty()) return kExitError;
    return o.result.feasible ? kExitOk : kExitInfeasible;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Premium optimization for new-business pricing"};
    app.require_subcommand(1);

    std::string config_path, out_dir, in_dir;
    std::optional<std::uint64_t> seed;
    bool stats = false;

    auto* sim = app.add_subcommand("simulate", "Generate a synthetic portfolio");
    sim->add_option("--config", config_path, "Scenario JSON with a portfolio.simulate block")->required();
    sim->add_option("--out", out_dir, "Output directory")->required();
    sim->add_option("--seed", seed, "Override the scenario seed");
    sim->add_flag("--stats", stats, "Print per-column premium statistics");

    auto* opt = app.add_subcommand("optimize", "Run the configured solver and write the report");
    opt->add_option("--config", config_path, "Scenario JSON")->required();
    opt->add_option("--out", out_dir, "Output directory")->required();
    opt->add_option("--seed", seed, "Override the scenario seed");

    auto* orc = app.add_subcommand("oracle", "Exhaustive search over the scenario's delta grid");
    orc->add_option("--config", config_path, "Scenario JSON with a grid domain")->required();
    orc->add_option("--out", out_dir, "Optional output directory");
    orc->add_option("--seed", seed, "Override the scenario seed");

    auto* rep = app.add_subcommand("report", "Print the summary of an optimize run");
    rep->add_option("--in", in_dir, "Directory written by optimize")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            const auto c = load(config_path, seed);
            if (!c.simulate) throw ValidationError("scenario has no portfolio.simulate block");
            const auto portfolio = simulate_portfolio(*c.simulate);
            std::filesystem::create_directories(out_dir);
            write_text(std::filesystem::path(out_dir) / "portfolio.csv", serialize_portfolio(portfolio));
            if (stats) {
                std::ostringstream s;
                write_statistics(s, premium_statistics(portfolio));
                write_text(std::filesystem::path(out_dir) / "stats.csv", s.str());
                std::cout << s.str();
            }
            return kExitOk;
        }
        if (opt->parsed()) return finish(run_scenario(load(config_path, seed)), out_dir);
        if (orc->parsed()) {
            auto c = load(config_path, seed);
            c.solver = SolverKind::Oracle;
            c.validate();
            return finish(run_scenario(c), out_dir.empty() ? std::nullopt : std::optional<std::string>(out_dir));
        }
        if (rep->parsed()) {
            const auto path = std::filesystem::path(in_dir) / "report.json";
            std::ifstream in(path);
            if (!in) throw ParseError("cannot open '" + path.string() + "'");
            const auto j = Json::parse(in);
            print_summary(std::cout, j);
            return j.at("feasible").get<bool>() ? kExitOk : kExitInfeasible;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitError;
    }
    return kExitError;
}
