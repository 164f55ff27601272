#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "atc/environment.hpp"

namespace atc::cli {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitIo = 2, kExitNumerical = 3 };

// Overrides the default output directory when --out is not given.
inline constexpr const char* kOutputDirEnv = "ATCMARL_OUTPUT_DIR";

// Versions written into the header line of every emitted file.
inline constexpr int kCurveFormatVersion = 1;
inline constexpr int kTimingFormatVersion = 1;
inline constexpr int kEvalFormatVersion = 1;
inline constexpr int kManifestFormatVersion = 1;

inline constexpr std::string_view kSimulatePolicies[] = {"checkpoint", "hold", "accel", "decel", "random"};

// Content hash in the style of `git hash-object`: SHA-1 of "blob <size>\0" + content.
std::string git_blob_sha1(std::string_view content);

// "{R1-R3, R2-R3}" for the default intersection scenario.
std::string conflict_graph(const ScenarioConfig& scenario);

// Parses argv (argv[0] is the program name) and runs the subcommand.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace atc::cli
