#pragma once

// Command-line front end: generate, featurize, trajectory, detect, baseline,
// evaluate, tune and export-plotdata.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dynamo/datagen.hpp"
#include "dynamo/detector.hpp"
#include "dynamo/dynclust.hpp"
#include "dynamo/eval.hpp"
#include "dynamo/events.hpp"

namespace dynamo::cli {

inline constexpr const char* kVersion = "1.0.0";

enum ExitCode : int { kOk = 0, kValidation = 1, kRuntime = 2 };

struct RunManifest {
    std::string subcommand;
    std::vector<std::filesystem::path> inputs;
    std::vector<std::filesystem::path> outputs;
    std::optional<std::filesystem::path> config;
    std::uint64_t seed = 0;
    std::string version = kVersion;

    // Inputs must exist as regular files; output directories must be creatable.
    void validate() const;
};

void to_json(nlohmann::json& j, const RunManifest& m);

// Everything a config file can set. Profile defaults apply first, explicit
// keys override them.
struct Settings {
    std::string profile = "realistic";
    DetectorConfig detector = DetectorConfig::realistic();
    ClusteringConfig clustering;
    ObservationWindow window;
    SearchSpace search = SearchSpace::realistic();
    std::optional<GeneratorSpec> generator;
};

// Throws ValidationError on unknown profiles, unknown keys or bad values.
Settings load_settings(const std::optional<std::filesystem::path>& config, const std::optional<std::string>& profile);
Settings settings_from_json(const nlohmann::json& j, const std::optional<std::string>& profile,
                            const std::string& origin = "config");

// Runs one command line; errors are reported on `err` as a JSON object and
// mapped to the exit codes above.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int main(int argc, char** argv);

}  // namespace dynamo::cli
