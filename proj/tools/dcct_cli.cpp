#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dcct/config.hpp"
#include "dcct/trainer.hpp"

namespace fs = std::filesystem;
using dcct::RunConfig;

namespace {

// All file emission goes through a temp file + rename, so outputs are either
// fully written or absent.
void atomic_write(const fs::path& path, const std::string& contents) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw std::runtime_error("cannot open: " + tmp.string());
        out << contents;
    }
    fs::rename(tmp, path);
}

std::string render_metrics(const std::vector<dcct::EpochMetrics>& log) {
    std::ostringstream ss;
    ss << dcct::EpochMetrics::csv_header() << "\n";
    for (const auto& m : log) ss << m.csv_row() << "\n";
    return ss.str();
}

RunConfig load_config(const std::string& path,
                      const std::vector<std::string>& overrides,
                      std::optional<std::uint64_t> seed_override) {
    auto kv = dcct::load_toml(path);
    dcct::apply_overrides(kv, overrides);
    if (seed_override) kv["seed"] = std::to_string(*seed_override);
    return dcct::config_from_map(kv);
}

struct RunOutputs {
    dcct::RunResult result;
    double wall_seconds = 0.0;
};

RunOutputs execute(const RunConfig& cfg) {
    auto t0 = std::chrono::steady_clock::now();
    dcct::Trainer trainer(cfg);
    RunOutputs out;
    out.result = trainer.run();
    out.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    return out;
}

nlohmann::json summary_json(const RunConfig& cfg, const RunOutputs& run) {
    nlohmann::json j;
    j["final_mAP"] = run.result.final_mAP;
    j["final_cmc"] = {{"top1", run.result.final_cmc[0]},
                      {"top5", run.result.final_cmc[1]},
                      {"top10", run.result.final_cmc[2]}};
    j["chosen_mean_net"] = run.result.chosen_net;
    j["dbi_fallback_net"] = run.result.dbi_fallback_net;
    j["epochs"] = cfg.epochs;
    j["iterations"] = cfg.iterations;
    j["seed"] = cfg.seed;
    j["use_dcdp"] = cfg.use_dcdp;
    j["use_csm"] = cfg.use_csm;
    j["skipped_epochs"] = run.result.skipped_epochs;
    j["wall_seconds"] = run.wall_seconds;
    return j;
}

int write_run_outputs(const RunConfig& cfg, const RunOutputs& run,
                      const fs::path& out_dir) {
    fs::create_directories(out_dir);
    // metrics.csv is written even if later steps fail
    atomic_write(out_dir / "metrics.csv", render_metrics(run.result.log));
    dcct::save_checkpoint(run.result.best_mean_net,
                          (out_dir / "best_mean_net.json").string());
    atomic_write(out_dir / "summary.json",
                 summary_json(cfg, run).dump(2) + "\n");
    return 0;
}

double mean_of(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / v.size();
}

double stddev_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double m = mean_of(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / (v.size() - 1));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dual-clustering co-teaching laboratory"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out";
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed_override;

    auto add_common = [&](CLI::App* cmd, bool need_config = true) {
        auto* opt = cmd->add_option("--config", config_path, "TOML config file");
        if (need_config) opt->required();
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--set", overrides, "KEY=VALUE override (repeatable)");
        cmd->add_option("--seed", seed_override, "seed override");
    };

    auto* cmd_run = app.add_subcommand("run", "train once and emit metrics");
    add_common(cmd_run);

    auto* cmd_ablate =
        app.add_subcommand("ablate", "2x2 DCDP/CSM grid over several seeds");
    add_common(cmd_ablate);
    std::vector<std::uint64_t> ablate_seeds = {1, 2, 3, 4, 5};
    cmd_ablate->add_option("--seeds", ablate_seeds, "seeds for each cell");

    auto* cmd_sweep = app.add_subcommand("sweep", "1-D parameter sweep");
    add_common(cmd_sweep);
    std::string sweep_param;
    std::vector<double> sweep_values;
    cmd_sweep->add_option("--param", sweep_param, "base | delta | gamma")
        ->required();
    cmd_sweep->add_option("--values", sweep_values, "values to sweep");

    auto* cmd_eval = app.add_subcommand("eval-checkpoint",
                                        "evaluate a saved mean net");
    add_common(cmd_eval);
    std::string checkpoint_path;
    cmd_eval->add_option("--checkpoint", checkpoint_path, "checkpoint JSON")
        ->required();

    auto* cmd_gen = app.add_subcommand("gen-data", "dump the dataset as CSV");
    add_common(cmd_gen);

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_run->parsed()) {
            RunConfig cfg = load_config(config_path, overrides, seed_override);
            auto run = execute(cfg);
            return write_run_outputs(cfg, run, out_dir);
        }

        if (cmd_ablate->parsed()) {
            RunConfig base_cfg =
                load_config(config_path, overrides, seed_override);
            fs::create_directories(out_dir);
            std::ostringstream csv;
            csv << "use_dcdp,use_csm,seeds,mean_mAP,std_mAP,mean_top1,std_top1\n";
            for (bool dcdp : {true, false}) {
                for (bool csm : {true, false}) {
                    std::vector<double> maps, top1s;
                    for (std::uint64_t seed : ablate_seeds) {
                        RunConfig cfg = base_cfg;
                        cfg.use_dcdp = dcdp;
                        cfg.use_csm = csm;
                        cfg.seed = seed;
                        // reuse one dataset per seed across all four cells
                        if (cfg.dataset.seed == 0) cfg.dataset.seed = seed;
                        auto run = execute(cfg);
                        maps.push_back(run.result.final_mAP);
                        top1s.push_back(run.result.final_cmc[0]);
                    }
                    csv.precision(17);
                    csv << (dcdp ? 1 : 0) << ',' << (csm ? 1 : 0) << ','
                        << ablate_seeds.size() << ',' << mean_of(maps) << ','
                        << stddev_of(maps) << ',' << mean_of(top1s) << ','
                        << stddev_of(top1s) << "\n";
                }
            }
            atomic_write(fs::path(out_dir) / "ablation.csv", csv.str());
            return 0;
        }

        if (cmd_sweep->parsed()) {
            if (sweep_param != "base" && sweep_param != "delta" &&
                sweep_param != "gamma") {
                std::cerr << "unknown sweep parameter '" << sweep_param
                          << "' (expected base, delta, or gamma)\n";
                return 2;
            }
            if (sweep_values.empty()) {
                std::cerr << "empty sweep values list\n";
                return 2;
            }
            RunConfig base_cfg =
                load_config(config_path, overrides, seed_override);
            fs::create_directories(out_dir);
            std::ostringstream csv;
            csv << sweep_param << ",mAP,top1\n";
            csv.precision(17);
            for (double v : sweep_values) {
                RunConfig cfg = base_cfg;
                if (sweep_param == "base")
                    cfg.base = v;
                else if (sweep_param == "delta")
                    cfg.delta = v;
                else
                    cfg.gamma = v;
                auto run = execute(cfg);
                csv << v << ',' << run.result.final_mAP << ','
                    << run.result.final_cmc[0] << "\n";
            }
            atomic_write(fs::path(out_dir) / "sweep.csv", csv.str());
            return 0;
        }

        if (cmd_eval->parsed()) {
            RunConfig cfg = load_config(config_path, overrides, seed_override);
            dcct::Trainer trainer(cfg);
            auto params = dcct::load_checkpoint(checkpoint_path);
            dcct::CoTeachState state = trainer.initial_state();
            state.params1 = params;
            state.mean1 = dcct::MeanNetParams::init_from(params, cfg.alpha);
            state.mean2 = state.mean1;
            trainer.evaluate_epoch(state);
            nlohmann::json j;
            j["mAP"] = state.metrics.mAP1;
            j["cmc"] = {{"top1", state.metrics.top1_1},
                        {"top5", state.metrics.top5_1},
                        {"top10", state.metrics.top10_1}};
            std::cout << j.dump(2) << "\n";
            return 0;
        }

        if (cmd_gen->parsed()) {
            RunConfig cfg = load_config(config_path, overrides, seed_override);
            dcct::DatasetSpec spec = cfg.dataset;
            if (spec.seed == 0) spec.seed = cfg.seed;
            auto ds = dcct::generate(spec);
            fs::create_directories(out_dir);
            fs::path target = fs::path(out_dir) / "dataset.csv";
            fs::path tmp = target;
            tmp += ".tmp";
            dcct::save_dataset_csv(ds, tmp.string());
            fs::rename(tmp, target);
            return 0;
        }
    } catch (const dcct::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
