#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "camnet/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"camnet: CAM beaconing simulator and KPI toolkit"};
    app.require_subcommand(1);

    camnet::SimulateOptions sim;
    std::string config, preset;
    std::uint64_t seed = 0;
    double duration_s = 0;
    auto* s = app.add_subcommand("simulate", "Run a scenario and write TX/RX logs");
    auto* cfg_opt = s->add_option("--config", config, "Scenario JSON file");
    auto* preset_opt = s->add_option("--preset", preset, "Built-in scenario")
                           ->check(CLI::IsMember(camnet::preset_names()));
    cfg_opt->excludes(preset_opt);
    s->add_option("--out", sim.out_dir, "Output directory")->capture_default_str();
    auto* seed_opt = s->add_option("--seed", seed, "Master seed (overrides CAMNET_SEED)");
    auto* dur_opt = s->add_option("--duration", duration_s, "Simulated seconds")->check(CLI::PositiveNumber);
    s->add_flag("--print-config", sim.print_config, "Print the resolved configuration and exit");

    camnet::AnalyzeOptions an;
    std::string kpi, nic;
    auto* a = app.add_subcommand("analyze", "Compute a KPI from a log directory");
    a->add_option("log_dir", an.log_dir, "Directory of *_tx.log / *_rx.log files")->required();
    a->add_option("--kpi", kpi, "KPI to compute")
        ->required()
        ->check(CLI::IsMember({"pdr-heatmap", "intervals", "horizon", "uplink"}));
    a->add_option("--out", an.out_dir, "Output directory (default: log_dir)");
    a->add_option("--cell-size", an.cell_size_m, "Heatmap cell size in metres")->capture_default_str();
    a->add_option("--min-samples", an.min_samples, "Minimum TX records per exported cell")->capture_default_str();
    a->add_option("--bin-width", an.bin_width_us, "Interval histogram bin width in microseconds")->capture_default_str();
    a->add_option("--horizon-bin", an.horizon_bin_m, "Horizon bin width in metres")->capture_default_str();
    a->add_option("--nic", nic, "Restrict to one NIC class")->check(CLI::IsMember({"HP", "LP"}));
    a->add_option("--rsu", an.rsus, "Node ids of fixed units (default: detect from logs)");

    std::string dataset, replay_out;
    auto* r = app.add_subcommand("replay", "Normalize external logs into canonical form");
    r->add_option("dataset_dir", dataset, "Directory of field-trial logs")->required();
    r->add_option("--out", replay_out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : camnet::kExitInvalid;
    }

    if (s->parsed()) {
        if (*cfg_opt) sim.config = config;
        if (*preset_opt) sim.preset = preset;
        if (*seed_opt) sim.seed = seed;
        if (*dur_opt) sim.duration_s = duration_s;
        return camnet::cmd_simulate(sim, std::cout, std::cerr);
    }
    if (a->parsed()) {
        an.kpi = *camnet::parse_kpi(kpi);
        if (!nic.empty()) an.nic = camnet::parse_nic(nic);
        return camnet::cmd_analyze(an, std::cout, std::cerr);
    }
    return camnet::cmd_replay(dataset, replay_out, std::cout, std::cerr);
}
