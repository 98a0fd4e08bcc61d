#include <geomech/errors.hpp>
#include <geomech/runner.hpp>

#include <CLI11.hpp>

#include <iostream>

using namespace geomech;
using namespace geomech::cli;

int main(int argc, char** argv) {
    CLI::App app{"geomech: Cartan-form Lagrangian mechanics, Routh reduction and the "
                 "factorizable-group example"};
    app.require_subcommand(1);

    std::string config_path;
    std::string outdir = ".";
    double dt_override = 0.0;
    int jobs = 1;

    const char* modes[] = {"simulate", "reduce", "compare", "check", "aks"};
    for (const char* mode : modes) {
        auto* sub = app.add_subcommand(mode);
        sub->add_option("--config", config_path, "run configuration (JSON)")->required();
        sub->add_option("--out", outdir, "output directory");
        sub->add_option("--dt", dt_override, "override the integration step");
        sub->add_option("--jobs", jobs, "concurrent independent runs where applicable");
    }

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg = load_config(config_path);
        cfg.mode = app.get_subcommands().front()->get_name();
        if (dt_override > 0.0) cfg.dt = dt_override;

        RunOutcome outcome = run_mode(cfg, outdir, jobs);
        for (const auto& line : outcome.report) std::cout << line << "\n";
        return outcome.code;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_validation;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_validation;
    } catch (const PreconditionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_validation;
    } catch (const Error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return exit_numerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_numerical;
    }
}
