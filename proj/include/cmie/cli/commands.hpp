#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace cmie::cli {

/// Process exit codes.
enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

/// Subcommand names in pipeline order.
const std::vector<std::string>& command_names();

/// Built-in defaults of a subcommand's run configuration.
nlohmann::ordered_json default_run_config(const std::string& command);

/// Overlays `overrides` onto `base`. Top-level keys must already exist in
/// `base`; otherwise UsageError.
nlohmann::ordered_json merge_run_config(const nlohmann::ordered_json& base, const nlohmann::ordered_json& overrides,
                                        const std::string& source);

/// Runs one subcommand with an effective configuration. Throws the library
/// error types.
void run_command(const std::string& command, const nlohmann::ordered_json& config, std::ostream& out,
                 std::ostream& log);

/// Full command line (args[0] is the program name). Diagnostics go to `log`
/// as one line; the return value is an ExitCode.
int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& log);

}  // namespace cmie::cli
