#pragma once

#include <string>

namespace rankclip {

// Exit codes shared by every subcommand:
// 0 success, 1 validation error, 2 runtime/divergence, 3 verification failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;
inline constexpr int kExitVerification = 3;

int cmd_gen_data(const std::string& config_path, const std::string& out_path);
int cmd_train(const std::string& config_path, const std::string& data_path,
              const std::string& out_dir, const std::uint64_t* seed_override = nullptr);
// config_or_checkpoint may be a checkpoint file (RCLC magic) or a run config
// whose train.checkpoint_path locates the checkpoint.
int cmd_eval(const std::string& config_or_checkpoint, const std::string& data_path,
             const std::string& out_path);
int cmd_verify(const std::string& mode);  // gradcheck | oracle | schedule
int cmd_compare(const std::string& config_path, const std::string& out_dir,
                const std::uint64_t* seed_override = nullptr);

}  // namespace rankclip
