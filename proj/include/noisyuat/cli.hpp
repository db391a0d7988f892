#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace noisyuat {

// Exit codes shared by every command.
enum ExitCode : int {
  kExitOk = 0,
  kExitUnexpected = 1,
  kExitValidation = 2,  // bad flags, invalid input, similarity violation
  kExitNumeric = 3,     // singular deep feature matrix, non-finite numerics
  kExitIo = 4,          // unreadable or malformed files
};

// Commands: train, finetune, predict, min-samples, scan, bench, validate.
// Warnings are written to `err` while the command runs.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);
// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace noisyuat
