#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "roughforms/cli.hpp"

namespace {

int fail(int code, const std::string& cause, const std::string& path, const std::string& message) {
    const nlohmann::ordered_json e{{"error", "ValidationError"},
                                   {"cause", cause},
                                   {"path", path},
                                   {"message", message},
                                   {"exit_code", code}};
    std::cerr << e.dump() << std::endl;
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    namespace cli = roughforms::cli;
    CLI::App app{"Batch experiments with rough differential forms.", "roughforms"};
    app.set_version_flag("--version", cli::version());

    std::string command;
    std::string config_path;
    std::uint64_t seed = 0;
    int threads = 1;
    std::string out_dir;
    bool assert_mode = false;

    app.add_option("command", command, "integrate, product, pullback, stokes, subdiv-stats, norms, flatnorm, embed, "
                                        "gaussian-sample, kolmogorov-fit or expr-check")
        ->required()
        ->check(CLI::IsMember(cli::commands()));
    app.add_option("--config", config_path, "JSON experiment config, '-' for stdin")->required();
    auto* seed_opt = app.add_option("--seed", seed, "Overrides every seed in the config");
    app.add_option("--threads", threads, "Worker threads; results do not depend on it")->check(CLI::PositiveNumber);
    app.add_option("--out", out_dir, "Directory for result.json, CSV tables and meta.json");
    app.add_flag("--assert", assert_mode, "Exit with 4 when a reported acceptance check fails");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail(cli::kValidation, "CommandLine", "", e.what());
    }

    std::string text;
    std::string base_dir = ".";
    if (config_path == "-") {
        text.assign(std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>());
    } else {
        std::ifstream in(config_path);
        if (!in) return fail(cli::kValidation, "ConfigFile", "", "cannot open config '" + config_path + "'");
        std::ostringstream ss;
        ss << in.rdbuf();
        text = ss.str();
        base_dir = std::filesystem::path(config_path).parent_path().string();
        if (base_dir.empty()) base_dir = ".";
    }

    cli::RunOptions opts;
    if (*seed_opt) opts.seed = seed;
    opts.threads = threads;
    opts.assert_mode = assert_mode;
    opts.base_dir = base_dir;
    if (!out_dir.empty()) opts.out_dir = out_dir;

    const cli::RunResult r = cli::run(command, text, opts);
    if (!r.result_json.empty()) std::cout << r.result_json << std::flush;
    if (!r.error_json.empty()) std::cerr << r.error_json << std::endl;
    return r.exit_code;
}
