#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ofjet/cli/run.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"Grid filter derivative engine: experiments on filter sensitivities and log-likelihood jets"};
    app.require_subcommand(1);
    std::string config;

    auto add = [&](const std::string& name, const std::string& help) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("config", config, "YAML run configuration")->required()->check(CLI::ExistingFile);
        return sub;
    };
    add("run", "Run the experiment named in the config");
    add("simulate", "Sample a trajectory of the model");
    add("check-derivs", "Compare filter derivatives against finite differences");
    add("forgetting", "Fit exponential forgetting rates of the derivative filter");
    add("ergodicity", "Monte-Carlo ergodicity probe of the filter-augmented chain");
    add("loglik", "Log-likelihood jet checks and average log-likelihood rate");
    add("rml", "Recursive maximum likelihood demonstration");
    add("assumptions", "Estimate mixing and score constants of the model");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : ofjet::cli::kInvalidConfig;
    }
    const std::string name = app.get_subcommands().front()->get_name();
    return ofjet::cli::run(name == "run" ? std::string() : name, config);
}
