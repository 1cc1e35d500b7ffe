#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "limitlab/experiment.hpp"

namespace {

enum Exit { ok = 0, check_failed = 1, config = 2, budget = 3, other = 4 };

int cmd_run(const std::string& path) {
    limitlab::ExperimentReport rep;
    try {
        rep = limitlab::run_experiment(limitlab::parse_config_file(path));
    } catch (const limitlab::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return config;
    } catch (const limitlab::budget_exceeded& e) {
        std::cerr << "budget exceeded: " << e.what() << "\n";
        return budget;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid parameter: " << e.what() << "\n";
        return config;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return other;
    }

    try {
        const auto [json_path, csv_path] = limitlab::write_report(rep);
        std::cout << rep.id << ": " << rep.prediction << "\n";
        for (const auto& c : rep.checks)
            std::cout << (c.passed ? "  PASS  " : "  FAIL  ") << c.name << "  (" << c.value << "; " << c.criterion
                      << ")\n";
        std::cout << "wrote " << json_path.string() << " and " << csv_path.string() << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return other;
    }
    return rep.passed() ? ok : check_failed;
}

int cmd_describe(const std::string& id) {
    try {
        const auto& x = limitlab::find_experiment(id);
        std::cout << x.id << ": " << x.title << "\n\n" << x.description << "\n\ndefaults:\n";
        for (const auto& [k, v] : x.defaults)
            std::cout << "  " << k << " = " << v << "\n";
        return ok;
    } catch (const limitlab::config_error& e) {
        std::cerr << e.what() << "\n";
        return config;
    }
}

int cmd_plotdata(const std::string& path, const std::string& out) {
    try {
        std::ifstream in(path);
        if (!in)
            throw std::runtime_error("cannot open '" + path + "'");
        const auto csv = limitlab::plotdata_from_json(nlohmann::json::parse(in));
        if (out.empty())
            std::cout << csv;
        else
            limitlab::detail::write_atomically(out, csv);
        return ok;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return other;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"limitlab: limit laws for Markovian Bernoulli counts"};
    app.require_subcommand(1);

    std::string config_path;
    auto* run = app.add_subcommand("run", "Run an experiment described by a config file");
    run->add_option("config", config_path, "key = value config file")->required();

    auto* list = app.add_subcommand("list-experiments", "List registered experiments");

    std::string id;
    auto* describe = app.add_subcommand("describe", "Show what an experiment checks and its defaults");
    describe->add_option("id", id)->required();

    std::string report_path, out_path;
    auto* plot = app.add_subcommand("plotdata", "Emit the CSV table of a JSON report");
    plot->add_option("report", report_path)->required();
    plot->add_option("-o,--output", out_path, "write to a file instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : config;
    }

    if (*run)
        return cmd_run(config_path);
    if (*list) {
        for (const auto& x : limitlab::experiments())
            std::cout << x.id << "\t" << x.title << "\n";
        return ok;
    }
    if (*describe)
        return cmd_describe(id);
    if (*plot)
        return cmd_plotdata(report_path, out_path);
    return other;
}
