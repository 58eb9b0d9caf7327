#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sono/commands.hpp"

namespace {

// Exit codes: 0 ok, 2 config errors, 3 data errors, 4 model/file errors,
// 1 anything else.
int run(int argc, char** argv) {
    CLI::App app{"sonohand: synthetic sonomyography hand-motion prediction pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<uint64_t> seed_override;
    std::optional<std::string> out_override;
    uint64_t demo_frames = 0;
    bool demo_frames_set = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "run config file (key = value lines)");
        cmd->add_option("--seed", seed_override, "replace the grid seed list with this seed");
        cmd->add_option("--out", out_override, "output directory override");
    };

    CLI::App* generate = app.add_subcommand("generate", "generate the session grid");
    CLI::App* train_svc = app.add_subcommand("train-svc", "train the hand-configuration classifier");
    CLI::App* train_cnn = app.add_subcommand("train-cnn", "train the per-cell angle regressors");
    CLI::App* eval = app.add_subcommand("eval", "evaluate stored models (accuracy, confusion, RMSE)");
    CLI::App* demo = app.add_subcommand("demo", "run the combined streaming predictor");
    for (CLI::App* cmd : {generate, train_svc, train_cnn, eval, demo}) add_common(cmd);
    demo->add_option("--frames", demo_frames, "number of frames to stream")
        ->each([&](const std::string&) { demo_frames_set = true; });

    CLI11_PARSE(app, argc, argv);

    sono::RunConfig cfg;
    if (!config_path.empty()) cfg = sono::load_run_config(config_path);
    if (seed_override) cfg.seeds = {*seed_override};
    if (out_override) cfg.out_dir = *out_override;

    if (generate->parsed()) sono::cmd_generate(cfg);
    if (train_svc->parsed()) sono::cmd_train_svc(cfg);
    if (train_cnn->parsed()) sono::cmd_train_cnn(cfg);
    if (eval->parsed()) sono::cmd_eval(cfg);
    if (demo->parsed()) sono::cmd_demo(cfg, demo_frames_set ? demo_frames : cfg.demo_frames);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const sono::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const sono::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const sono::ShapeError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const sono::DegenerateLabels& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const sono::DegenerateVector& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const sono::UnrecoverableOcclusion& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const sono::OutOfRange& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const sono::Error& e) {
        // Remaining library errors are file/model problems (Io, Format,
        // Bundle, Cache).
        std::fprintf(stderr, "model error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
