// simrun: batch runner for protocol manifests.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "duality/manifest.hpp"

namespace {

constexpr int kRunFailure = 1;
constexpr int kConfigError = 2;

int execute(duality::RunManifest& m, unsigned threads, int verbosity) {
    duality::ExecuteOptions opt;
    opt.threads = threads;
    opt.verbosity = verbosity;
    opt.log = &std::cerr;
    try {
        const auto outcome = duality::execute_manifest(m, opt);
        if (verbosity >= 0) {
            for (const auto& r : outcome.runs) {
                std::cout << r.name << ": ";
                if (!r.ok) {
                    std::cout << "error\n";
                    continue;
                }
                std::cout << to_string(r.result->status);
                for (const auto& s : r.result->subsets)
                    std::cout << ' ' << s.name << '=' << to_string(s.classification.verdict);
                std::cout << '\n';
            }
            std::cout << "summary: " << (std::filesystem::path(m.output_dir) / "summary.json").string() << '\n';
        }
        return outcome.exit_code == 0 ? 0 : kRunFailure;
    } catch (const std::exception& e) {
        std::cerr << "simrun: " << e.what() << '\n';
        return kRunFailure;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Seeded Monte Carlo runs of which-way protocols"};
    app.require_subcommand(1);

    std::string manifest_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::string formats;
    unsigned threads = 1;
    int verbose = 0;
    bool quiet = false;

    auto* run = app.add_subcommand("run", "Execute a run manifest");
    run->add_option("manifest", manifest_path, "Manifest JSON file")->required();
    run->add_option("--seed", seed, "Override the seed of every run");
    run->add_option("--out", out_dir, "Output directory");
    run->add_option("--formats", formats, "Comma separated subset of json,csv,ascii");

    auto* acc = app.add_subcommand("acceptance", "Execute the built-in acceptance manifest");
    acc->add_option("--seed", seed, "Seed for every acceptance run");
    acc->add_option("--out", out_dir, "Output directory");
    acc->add_option("--formats", formats, "Comma separated subset of json,csv,ascii");

    for (auto* sub : {run, acc}) {
        sub->add_option("--threads", threads, "Worker threads per run")->check(CLI::Range(1u, 256u));
        sub->add_flag("-v,--verbose", verbose, "More progress output");
        sub->add_flag("-q,--quiet", quiet, "Only errors");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kConfigError;
    }
    const int verbosity = quiet ? -1 : verbose;

    duality::RunManifest manifest;
    try {
        if (run->parsed()) {
            std::ifstream in(manifest_path, std::ios::binary);
            if (!in) {
                std::cerr << "simrun: cannot read " << manifest_path << '\n';
                return kConfigError;
            }
            std::stringstream text;
            text << in.rdbuf();
            manifest = duality::parse_manifest(text.str());
        } else {
            manifest = seed ? duality::acceptance_manifest(*seed) : duality::acceptance_manifest();
        }
        if (seed) manifest.seed_override = *seed;
        if (!out_dir.empty()) manifest.output_dir = out_dir;
        if (!formats.empty()) manifest.formats = duality::parse_format_list(formats, "--formats");
    } catch (const duality::ConfigError& e) {
        std::cerr << "simrun: config error: " << e.what() << '\n';
        return kConfigError;
    }
    return execute(manifest, threads, verbosity);
}
