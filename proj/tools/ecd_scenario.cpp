// ecd-scenario: run or validate a scenario config.
//
//   ecd-scenario run <config> [--out DIR] [--workers N] [--override key=value]...
//   ecd-scenario validate <config>
//
// Output directory: --out, else output.directory in the config, else
// $ECD_OUTPUT_DIR, else ./ecd-out/<name>.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ecd/scenario.hpp"

namespace sc = ecd::scenario;

namespace {

bool read_file(const std::string& path, std::string& text)
{
    std::ifstream f(path, std::ios::binary);
    if (!f)
        return false;
    std::stringstream ss;
    ss << f.rdbuf();
    text = ss.str();
    return true;
}

void print(const std::string& file, const std::vector<sc::Diagnostic>& diags)
{
    for (const auto& d : diags)
        std::cerr << file << ": " << sc::to_string(d) << "\n";
}

int cmd_validate(const std::string& file)
{
    const auto diags = sc::validate_file(file);
    if (diags.empty()) {
        std::cout << file << ": valid\n";
        return sc::exit_ok;
    }
    print(file, diags);
    return sc::exit_validation;
}

int cmd_run(const std::string& file, const std::string& out, unsigned workers, const std::vector<std::string>& overrides)
{
    std::string text;
    if (!read_file(file, text)) {
        std::cerr << file << ": cannot read\n";
        return sc::exit_io;
    }
    std::vector<sc::Diagnostic> diags;
    nlohmann::json doc = sc::parse(text, diags);
    if (!diags.empty()) {
        print(file, diags);
        return sc::exit_validation;
    }
    try {
        for (const auto& o : overrides)
            sc::apply_override(doc, o);
    } catch (const std::exception& e) {
        std::cerr << file << ": " << e.what() << "\n";
        return sc::exit_validation;
    }
    diags = sc::validate(doc);
    if (!diags.empty()) {
        print(file, diags);
        return sc::exit_validation;
    }

    sc::RunOptions opt;
    opt.workers = workers;
    if (!out.empty())
        opt.out_dir = out;
    else if (doc.contains("output") && doc["output"].contains("directory"))
        opt.out_dir = doc["output"]["directory"].get<std::string>();
    else if (const char* env = std::getenv("ECD_OUTPUT_DIR"))
        opt.out_dir = std::filesystem::path(env) / doc.value("name", doc["kind"].get<std::string>());
    else
        opt.out_dir = std::filesystem::path("ecd-out") / doc.value("name", doc["kind"].get<std::string>());

    try {
        const nlohmann::json m = sc::run(doc, opt);
        std::cout << (opt.out_dir / "manifest.json").string() << ": " << m["status"].get<std::string>() << "\n";
        for (const auto& f : m["failures"])
            std::cerr << "tolerance missed: " << f.get<std::string>() << "\n";
        return sc::exit_code_of(m);
    } catch (const std::exception& e) {
        std::cerr << file << ": " << e.what() << "\n";
        return sc::exit_code_of(e);
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Scenario runner for the extended charge dynamics library"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(sc::tool_version));

    std::string config, out;
    unsigned workers = 0;
    std::vector<std::string> overrides;

    auto* run = app.add_subcommand("run", "Run a scenario and write CSV data plus a JSON manifest");
    run->add_option("config", config, "Scenario file")->required();
    run->add_option("--out", out, "Output directory");
    run->add_option("--workers", workers, "Worker threads (0: all cores)");
    run->add_option("--override", overrides, "key.path=value, applied before validation")->allow_extra_args(false);

    auto* val = app.add_subcommand("validate", "Schema check only");
    val->add_option("config", config, "Scenario file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? sc::exit_ok : sc::exit_validation;
    }
    if (*val)
        return cmd_validate(config);
    return cmd_run(config, out, workers, overrides);
}
