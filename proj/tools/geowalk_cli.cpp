#include "CLI11.hpp"

#include <array>
#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include "geowalk/experiment.hpp"

namespace {

struct CommonFlags {
    std::string config;
    std::uint64_t seed = 0;
    int jobs = 0;
    std::string out;
    CLI::Option* config_opt = nullptr;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* jobs_opt = nullptr;
    CLI::Option* out_opt = nullptr;
};

void add_common(CLI::App* sub, CommonFlags& f) {
    f.config_opt = sub->add_option("--config", f.config, "key = value configuration file")
                       ->check(CLI::ExistingFile);
    f.seed_opt = sub->add_option("--seed", f.seed, "master seed (overrides the config)");
    f.jobs_opt = sub->add_option("--jobs", f.jobs,
                                 "worker threads, 0 = all cores (overrides the config)");
    f.out_opt =
        sub->add_option("--out", f.out, "output directory (overrides config and GEOWALK_OUT)");
}

geowalk::ExperimentConfig assemble(const CommonFlags& f) {
    geowalk::ExperimentConfig cfg;
    if (f.config_opt->count() > 0) cfg = geowalk::load_experiment_config(f.config);
    if (f.seed_opt->count() > 0) cfg.seed = f.seed;
    if (f.jobs_opt->count() > 0) cfg.jobs = f.jobs;
    if (f.out_opt->count() > 0) cfg.out = f.out;
    return cfg;
}

int run_command(const std::string& command, const CommonFlags& f) {
    const geowalk::ExperimentConfig cfg = assemble(f);
    const geowalk::ExperimentResult res = geowalk::run_experiment(cfg, command);
    geowalk::write_outputs(res, geowalk::resolve_out_dir(cfg));
    for (const auto& line : res.summary) std::cout << line << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"random walks tracking geodesics on trees, lamplighters and the half-plane"};
    app.require_subcommand(1);

    const std::array<std::pair<const char*, const char*>, 5> runs = {{
        {"drift", "estimate the linear escape rate of a random walk"},
        {"track", "measure how far walk positions stray from a drift-parametrized geodesic"},
        {"floyd", "certify rescaled path metrics against the tail bound"},
        {"lamplighter-oracle", "check the closed-form word length against exhaustive search"},
        {"visibility", "probe whether segments between deeper truncations stay near a ball"},
    }};
    std::array<CommonFlags, 6> flags;
    std::array<CLI::App*, 5> run_subs{};
    for (std::size_t i = 0; i < runs.size(); ++i) {
        run_subs[i] = app.add_subcommand(runs[i].first, runs[i].second);
        add_common(run_subs[i], flags[i]);
    }
    CLI::App* validate = app.add_subcommand("validate", "list configuration problems");
    add_common(validate, flags[5]);
    std::string validate_for = "track";
    validate
        ->add_option("command", validate_for, "run subcommand the config is meant for")
        ->check(CLI::IsMember(
            {"drift", "track", "floyd", "lamplighter-oracle", "visibility"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        for (std::size_t i = 0; i < runs.size(); ++i)
            if (run_subs[i]->parsed()) return run_command(runs[i].first, flags[i]);
        const geowalk::ExperimentConfig cfg = assemble(flags[5]);
        const std::vector<std::string> problems = geowalk::validate_config(cfg, validate_for);
        for (const auto& p : problems) std::cout << p << '\n';
        if (!problems.empty()) return 2;
        std::cout << "ok" << '\n';
        return 0;
    } catch (const geowalk::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const geowalk::ResourceError& e) {
        std::cerr << "resource error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
