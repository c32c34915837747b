#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace medreg::cli {

using Getenv = std::function<std::optional<std::string>(const std::string&)>;

// Runs one command (args exclude the program name). Returns the exit code:
// 0 ok, 2 usage, 3 data, 4 numeric divergence, 5 IO. Failures print one
// line to `err`: error code=<n> kind=<kind> message="<text>".
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const Getenv& getenv);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::vector<std::string> commands();
// Help text of a command and the long names of the flags it accepts.
std::string command_help(const std::string& command);
std::vector<std::string> command_flags(const std::string& command);

// Git blob id: SHA-1 of "blob <size>\0" + content, as hex.
std::string git_blob_sha1(std::string_view content);
std::string git_blob_sha1_file(const std::filesystem::path& path);

}  // namespace medreg::cli
