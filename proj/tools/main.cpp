#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rankclip/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"rankclip-lab: ranking-consistent contrastive training laboratory"};
    app.require_subcommand(1);

    std::string config_path, data_path, out_path, mode;
    std::uint64_t seed = 0;
    bool seed_set = false;

    auto add_common = [&](CLI::App* cmd, bool need_config) {
        auto* c = cmd->add_option("--config", config_path,
                                  "run configuration (JSON); for eval this may be a checkpoint");
        if (need_config) c->required();
        cmd->add_option("--data", data_path, "dataset file");
        cmd->add_option("--out", out_path, "output file or directory");
        cmd->add_option("--seed", seed, "override the run seed")
            ->each([&](const std::string&) { seed_set = true; });
    };

    auto* gen = app.add_subcommand("gen-data", "generate a synthetic paired dataset");
    add_common(gen, true);
    auto* train = app.add_subcommand("train", "train the dual encoder");
    add_common(train, true);
    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on the eval split");
    add_common(eval, true);
    auto* verify = app.add_subcommand("verify", "run the verification suites");
    add_common(verify, false);
    verify->add_option("--mode", mode, "gradcheck|oracle|schedule")->required();
    auto* compare = app.add_subcommand("compare", "train and evaluate loss variants side by side");
    add_common(compare, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : rankclip::kExitValidation;
    }

    const std::uint64_t* seed_override = seed_set ? &seed : nullptr;
    auto require = [](const std::string& v, const char* what) {
        if (v.empty()) {
            std::cerr << "error: missing --" << what << "\n";
            std::exit(rankclip::kExitValidation);
        }
    };

    if (gen->parsed()) {
        require(out_path, "out");
        return rankclip::cmd_gen_data(config_path, out_path);
    }
    if (train->parsed()) {
        require(data_path, "data");
        require(out_path, "out");
        return rankclip::cmd_train(config_path, data_path, out_path, seed_override);
    }
    if (eval->parsed()) {
        require(data_path, "data");
        require(out_path, "out");
        return rankclip::cmd_eval(config_path, data_path, out_path);
    }
    if (verify->parsed()) return rankclip::cmd_verify(mode);
    if (compare->parsed()) {
        require(out_path, "out");
        return rankclip::cmd_compare(config_path, out_path, seed_override);
    }
    return rankclip::kExitValidation;
}
