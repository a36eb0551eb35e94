// Command-line front end: train, translate, evaluate, sweep, inspect.
// Exit codes: 0 success, 1 usage or config error, 2 runtime error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "dlp/config.hpp"
#include "dlp/data.hpp"
#include "dlp/metrics.hpp"
#include "dlp/nets.hpp"
#include "dlp/trainer.hpp"

namespace fs = std::filesystem;
using dlp::config::Config;

namespace {

fs::path run_root() {
    if (const char* env = std::getenv("DLPGAN_RUN_ROOT")) return env;
    return "runs";
}

void write_run_manifest(const fs::path& dir, const std::string& command,
                        const std::string& digest) {
    dlp::config::RunManifest m;
    m.command = command;
    m.config_digest = digest;
    m.timestamp = dlp::config::iso8601_now();
    fs::create_directories(dir);
    m.write(dir / "run_manifest.json");
}

Config load_config(const std::string& path, const std::vector<std::string>& overrides) {
    Config c = Config::from_file(path);
    c.apply_overrides(overrides);
    return c;
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& overrides,
              const std::string& run_name) {
    Config c = load_config(config_path, overrides);
    const fs::path dir = run_root() / (run_name.empty() ? "train_" + c.digest() : run_name);
    write_run_manifest(dir, "train", c.digest());
    dlp::train::train(c, dir);
    std::cout << "run directory: " << dir.string() << "\n";
    return 0;
}

int cmd_translate(const std::string& checkpoint, const std::string& input_dir,
                  const std::string& output_dir, const std::string& direction) {
    auto state = dlp::train::load_checkpoint(checkpoint, "", /*ignore_digest=*/true);
    auto& net = direction == "x2y" ? *state.g : *state.f;
    auto ds = dlp::data::load_domain_folder(input_dir, direction == "x2y" ? 'X' : 'Y', "test");

    fs::create_directories(output_dir);
    Config snapshot;  // digest of the resolved translate invocation
    snapshot.set("checkpoint", checkpoint);
    snapshot.set("direction", direction);
    write_run_manifest(output_dir, "translate", snapshot.digest());

    dlp::Rng rng(0);
    for (const auto& p : ds.image_paths) {
        cv::Mat raw = dlp::data::load_image(p);
        // center preprocessing at the native crop that keeps H, W divisible by 4
        int side = std::min(raw.rows, raw.cols);
        side -= side % 4;
        dlp::data::PreprocessConfig cfg{side, side, side, 0.0};
        dlp::Tensor t = dlp::data::preprocess(raw, cfg, rng, /*train_mode=*/false);
        dlp::Tensor out = dlp::nets::forward_generate(net, t);
        cv::Mat rgb = dlp::data::denormalize(out);
        cv::Mat bgr;
        cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
        fs::path out_path = fs::path(output_dir) / p.filename().replace_extension(".png");
        if (!cv::imwrite(out_path.string(), bgr))
            throw std::runtime_error("translate: cannot write " + out_path.string());
    }
    std::cout << "translated " << ds.image_paths.size() << " images to " << output_dir << "\n";
    return 0;
}

int cmd_evaluate(const std::string& generated_dir, const std::string& reference_dir,
                 const std::string& backend_kind, const std::string& backend_path,
                 const std::string& pairing, const std::string& report_path) {
    auto backend = dlp::backends::load_backend(dlp::backends::kind_from_string(backend_kind),
                                               backend_path);
    auto mode = pairing == "paired" ? dlp::metrics::Pairing::paired
                                    : dlp::metrics::Pairing::unpaired;
    auto report = dlp::metrics::evaluate_folder(generated_dir, reference_dir, backend, mode);

    nlohmann::json j;
    j["fid"] = report.fid;
    j["kid"] = report.kid;
    j["psnr_mean"] = report.psnr_mean;
    j["ssim_mean"] = report.ssim_mean;
    j["n_generated"] = report.n_generated;
    j["n_reference"] = report.n_reference;
    j["backend_id"] = report.backend_id;
    if (!report_path.empty()) {
        std::ofstream out(report_path);
        if (!out) throw std::runtime_error("evaluate: cannot write " + report_path);
        out << j.dump(2) << "\n";
    }
    std::cout << "metric      value\n";
    std::cout << "fid         " << report.fid << "\n";
    std::cout << "kid         " << report.kid << "\n";
    std::cout << "psnr_mean   " << report.psnr_mean << "\n";
    std::cout << "ssim_mean   " << report.ssim_mean << "\n";
    std::cout << "images      " << report.n_generated << " generated, " << report.n_reference
              << " reference (backend " << report.backend_id << ")\n";
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::vector<std::string>& overrides,
              const std::string& key, const std::vector<std::string>& values) {
    Config base = load_config(config_path, overrides);
    std::cout << "value run_directory final_total\n";
    for (const auto& v : values) {
        Config c = base;
        c.set(key, v);
        const fs::path dir = run_root() / ("sweep_" + key + "_" + v);
        write_run_manifest(dir, "sweep", c.digest());
        dlp::train::train(c, dir);
        // last row of the loss curve for the summary table
        std::ifstream log(dir / "losses.csv");
        std::string line, last;
        while (std::getline(log, line))
            if (!line.empty()) last = line;
        std::string total = "?";
        if (!last.empty()) {
            auto a = last.rfind(',');
            auto b = last.rfind(',', a - 1);
            if (a != std::string::npos && b != std::string::npos)
                total = last.substr(b + 1, a - b - 1);
        }
        std::cout << v << " " << dir.string() << " " << total << "\n";
    }
    return 0;
}

int cmd_inspect(const std::string& checkpoint) {
    auto state = dlp::train::load_checkpoint(checkpoint, "", /*ignore_digest=*/true);
    const int64_t g = dlp::nets::count_parameters(*state.g);
    const int64_t f = dlp::nets::count_parameters(*state.f);
    const int64_t dx = dlp::nets::count_parameters(*state.d_x);
    const int64_t dy = dlp::nets::count_parameters(*state.d_y);
    std::cout << "G   (" << state.g->topology_id() << "): " << g << " parameters\n";
    std::cout << "F   (" << state.f->topology_id() << "): " << f << " parameters\n";
    std::cout << "D_X (" << state.d_x->topology_id() << "): " << dx << " parameters\n";
    std::cout << "D_Y (" << state.d_y->topology_id() << "): " << dy << " parameters\n";
    std::cout << "total: " << (g + f + dx + dy) << " (reference figure 32.05 M)\n";
    std::cout << "epoch " << state.epoch << ", iteration " << state.iteration << ", seed "
              << state.cfg.seed << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"unpaired landscape painting <-> photo translation"};
    app.require_subcommand(1);

    std::string config_path, run_name, checkpoint, input_dir, output_dir, direction = "x2y";
    std::string generated_dir, reference_dir, backend_kind = "stub_inception", backend_path;
    std::string pairing = "paired", report_path, sweep_key;
    std::vector<std::string> sweep_values;

    auto* train = app.add_subcommand("train", "run the full training loop");
    train->add_option("config", config_path)->required();
    train->add_option("--run-name", run_name);
    train->allow_extras();  // --key=value overrides

    auto* translate = app.add_subcommand("translate", "apply a trained generator to a folder");
    translate->add_option("checkpoint", checkpoint)->required();
    translate->add_option("input_dir", input_dir)->required();
    translate->add_option("output_dir", output_dir)->required();
    translate->add_option("--direction", direction)->check(CLI::IsMember({"x2y", "y2x"}));

    auto* evaluate = app.add_subcommand("evaluate", "FID/KID/PSNR/SSIM between two folders");
    evaluate->add_option("generated_dir", generated_dir)->required();
    evaluate->add_option("reference_dir", reference_dir)->required();
    evaluate->add_option("--backend", backend_kind);
    evaluate->add_option("--backend-path", backend_path);
    evaluate->add_option("--pairing", pairing)->check(CLI::IsMember({"paired", "unpaired"}));
    evaluate->add_option("--report", report_path);

    auto* sweep = app.add_subcommand("sweep", "train once per value of a config key");
    sweep->add_option("config", config_path)->required();
    sweep->add_option("key", sweep_key)->required();
    sweep->add_option("values", sweep_values)->required();
    sweep->allow_extras();

    auto* inspect = app.add_subcommand("inspect", "print checkpoint topology and counts");
    inspect->add_option("checkpoint", checkpoint)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (train->parsed()) return cmd_train(config_path, train->remaining(), run_name);
        if (translate->parsed())
            return cmd_translate(checkpoint, input_dir, output_dir, direction);
        if (evaluate->parsed())
            return cmd_evaluate(generated_dir, reference_dir, backend_kind, backend_path,
                                pairing, report_path);
        if (sweep->parsed())
            return cmd_sweep(config_path, sweep->remaining(), sweep_key, sweep_values);
        if (inspect->parsed()) return cmd_inspect(checkpoint);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        const std::string what = e.what();
        std::cerr << "error: " << what << "\n";
        // config and input problems are usage errors
        if (what.rfind("config", 0) == 0 || what.find("cannot open") != std::string::npos ||
            what.find("not a directory") != std::string::npos)
            return 1;
        return 2;
    }
    return 1;
}
