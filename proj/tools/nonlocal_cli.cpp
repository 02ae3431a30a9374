#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "nonlocal/tasks.hpp"

namespace {

using namespace nonlocal;

void apply_thread_env() {
    const char* v = std::getenv("NONLOCAL_THREADS");
    if (!v) return;
    const int n = std::atoi(v);
    if (n > 0) Eigen::setNbThreads(n);
}

int exec_run(const std::string& config_path, const std::vector<std::string>& sets,
             const std::string& out_override) {
    RunConfig rc;
    try {
        ConfigMap cfg = ConfigMap::from_file(config_path);
        for (const auto& s : sets) cfg.override_kv(s);
        if (!out_override.empty()) cfg.override_kv("run.out=" + out_override);
        rc = resolve_run(cfg);
    } catch (const std::exception& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    }
    RunReport rep;
    try {
        rep = run_task(rc);
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 1;
    }
    try {
        write_report(rep, rc.out_dir);
    } catch (const std::exception& e) {
        std::cerr << "cannot write outputs: " << e.what() << "\n";
        return 1;
    }
    std::cout << rep.text();
    return rep.overall() == Verdict::fail ? 1 : 0;
}

int exec_list() {
    for (const auto& sc : scenario_registry()) {
        std::cout << sc.name << "\n";
        std::cout << "    " << sc.description << "\n";
        std::cout << "    ambient_dim=" << sc.ambient_dim << " resolutions=";
        for (std::size_t i = 0; i < sc.resolutions.size(); ++i)
            std::cout << (i ? "," : "") << sc.resolutions[i];
        std::cout << " target=";
        switch (sc.target) {
            case TargetMode::principal: std::cout << "principal"; break;
            case TargetMode::second: std::cout << "second"; break;
            case TargetMode::first_simple_above_principal:
                std::cout << "first-simple-above-principal";
                break;
        }
        std::cout << "\n    fields=";
        for (std::size_t i = 0; i < sc.fields.size(); ++i)
            std::cout << (i ? "," : "") << sc.fields[i].name;
        std::cout << " route=" << to_string(sc.options.route)
                  << " curvature=" << to_string(sc.options.curvature);
        if (sc.adjudicate_conventions) std::cout << " conventions=adjudicated";
        if (sc.fk_eligible) std::cout << " symmetrization=eligible";
        std::cout << "\n";
    }
    return 0;
}

int exec_sweep(const std::string& scenario_filter, const std::vector<std::string>& sets,
               const std::string& out_override) {
    SweepConfig sw;
    try {
        ConfigMap cfg;
        for (const auto& s : sets) cfg.override_kv(s);
        if (!out_override.empty()) cfg.override_kv("run.out=" + out_override);
        sw = resolve_sweep(cfg, scenario_filter);
    } catch (const std::exception& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    }
    RunReport rep;
    try {
        rep = run_sweep(sw);
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 1;
    }
    try {
        write_report(rep, sw.out_dir);
    } catch (const std::exception& e) {
        std::cerr << "cannot write outputs: " << e.what() << "\n";
        return 1;
    }
    std::cout << rep.text();
    return rep.overall() == Verdict::fail ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    apply_thread_env();
    CLI::App app{"spectral toolkit for nonlocal operators: spectra, shape derivatives, "
                 "rearrangements"};
    app.require_subcommand(1);

    std::string config_path, out_override, sweep_filter;
    std::vector<std::string> sets;

    auto* run = app.add_subcommand("run", "execute the task described by a config file");
    run->add_option("config", config_path, "path to the config file")->required();
    run->add_option("--set", sets, "override a config key: section.key=value");
    run->add_option("--out", out_override, "output directory (overrides run.out)");

    auto* ls = app.add_subcommand("list-scenarios", "print the built-in scenario catalog");

    auto* sweep =
        app.add_subcommand("sweep", "convergence tables across each scenario's resolution ladder");
    sweep->add_option("--scenario", sweep_filter, "restrict to one built-in scenario");
    sweep->add_option("--set", sets, "override a config key: section.key=value");
    sweep->add_option("--out", out_override, "output directory (overrides run.out)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (run->parsed()) return exec_run(config_path, sets, out_override);
    if (ls->parsed()) return exec_list();
    if (sweep->parsed()) return exec_sweep(sweep_filter, sets, out_override);
    return 2;
}
