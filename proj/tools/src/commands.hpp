#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

namespace seer::cli {

enum ExitCode : int { ok = 0, runtime_failure = 1, usage_error = 2 };

/// Output root for `run`: $SEER_OUTPUT_DIR, or "runs".
std::string default_output_dir();

/// Writes to a sibling temp file and renames it over `path`, so readers never see a
/// partial file. Creates missing parent directories.
void write_atomic(const std::filesystem::path& path, std::string_view content);

/// Full command line, `argv[0]` included. Used by the executable and by in-process tests.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace seer::cli
