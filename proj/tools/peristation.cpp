#include "peri/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    using peri::cli::CommandOptions;

    CLI::App app{"peristation: peristaltic tube-transport station tools"};
    app.require_subcommand(1);

    CommandOptions opt;
    std::string config, out, baselines, telemetry;
    std::uint64_t seed = 0;
    double duration = 0.0;

    auto add_config = [&](CLI::App* sub) {
        sub->add_option("--config", config, "YAML scenario file (defaults apply when omitted)")->check(CLI::ExistingFile);
    };

    auto* validate = app.add_subcommand("validate", "Check ring geometry and station layout");
    add_config(validate);

    auto* calibrate = app.add_subcommand("calibrate", "Measure per-module baseline inflation slopes");
    add_config(calibrate);
    calibrate->add_option("--out", out, "Baselines CSV (default baselines.csv)");
    calibrate->add_option("--seed", seed, "Sensor noise seed");

    auto* run = app.add_subcommand("run", "Simulate a transport run and write telemetry");
    add_config(run);
    run->add_option("--baselines", baselines, "Baselines CSV from 'calibrate' (calibrates inline when omitted)")
        ->check(CLI::ExistingFile);
    run->add_option("--out", out, "Telemetry CSV (default from config, else telemetry.csv)");
    run->add_option("--seed", seed, "Sensor noise seed");
    run->add_option("--duration", duration, "Simulated seconds before giving up");

    auto* sweep = app.add_subcommand("sweep", "Sweep one ring parameter and report d_c/r");
    add_config(sweep);
    sweep->add_option("--param", opt.param, "N, l or t")->required();
    sweep->add_option("--range", opt.range, "start:stop:step or a,b,c")->required();
    sweep->add_option("--out", out, "Sweep CSV (stdout when omitted)");

    auto* replay = app.add_subcommand("replay", "Re-drive the controller from a telemetry file and compare commands");
    add_config(replay);
    replay->add_option("--telemetry", telemetry, "Telemetry CSV written by 'run'")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    auto* sub = app.get_subcommands().front();
    if (sub->count("--config")) opt.config_path = config;
    if (sub->get_option_no_throw("--out") && sub->count("--out")) opt.out_path = out;
    if (sub->get_option_no_throw("--baselines") && sub->count("--baselines")) opt.baselines_path = baselines;
    if (sub->get_option_no_throw("--telemetry") && sub->count("--telemetry")) opt.telemetry_path = telemetry;
    if (sub->get_option_no_throw("--seed") && sub->count("--seed")) opt.seed = seed;
    if (sub->get_option_no_throw("--duration") && sub->count("--duration")) opt.duration = duration;

    if (sub == validate) return peri::cli::cmd_validate(opt, std::cout, std::cerr);
    if (sub == calibrate) return peri::cli::cmd_calibrate(opt, std::cout, std::cerr);
    if (sub == run) return peri::cli::cmd_run(opt, std::cout, std::cerr);
    if (sub == sweep) return peri::cli::cmd_sweep(opt, std::cout, std::cerr);
    return peri::cli::cmd_replay(opt, std::cout, std::cerr);
}
