#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace ecd::scenario {

inline constexpr int schema_version = 1;
inline constexpr const char* tool_version = "1.0.0";

// Exit statuses of the runner.
enum ExitCode : int {
    exit_ok = 0,
    exit_internal = 1,
    exit_validation = 2,
    exit_numeric = 3,
    exit_accuracy = 4,
    exit_io = 5,
};

struct Diagnostic
{
    std::string path; // dotted key path, empty for parse errors
    std::string message;
    int line = 0; // 1-based, parse errors only
    int column = 0;
};

std::string to_string(const Diagnostic& d);

std::vector<std::string> kinds();

// Parses a config document (JSON, comments allowed). Parse failures come back
// as a single diagnostic with line and column.
nlohmann::json parse(const std::string& text, std::vector<Diagnostic>& diagnostics);

// Schema check only. Empty means valid.
std::vector<Diagnostic> validate(const nlohmann::json& doc);
std::vector<Diagnostic> validate_file(const std::filesystem::path& path);

// The document with every optional key filled with its default. Requires a valid document.
nlohmann::json normalize(const nlohmann::json& doc);

// "a.b.c=value"; value is read as JSON and falls back to a string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

struct RunOptions
{
    std::filesystem::path out_dir;
    unsigned workers = 0; // 0: all cores
};

// Validates, dispatches and writes <out_dir>/<file>.csv plus manifest.json.
// Returns the manifest. Throws ValidationError for invalid input; numeric and
// accuracy failures of the modules propagate. A tolerance that is missed but
// computed sets manifest["status"] = "accuracy-failure".
nlohmann::json run(const nlohmann::json& doc, const RunOptions& opt);

int exit_code_of(const std::exception& e);
int exit_code_of(const nlohmann::json& manifest);

} // namespace ecd::scenario
