#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fwm/detection.hpp"
#include "fwm/medium.hpp"
#include "fwm/pulse.hpp"

namespace fwm {

struct GridConfig {
    double dt_ns = 2.0;
    std::size_t samples = 8192;
    double pulse_fwhm_ns = 587.0;
    double center_ns = 4096.0;
};

struct SweepConfig {
    double start = 0;
    double stop = 0;
    std::size_t points = 0;
    bool log_spacing = false;
    double delay_jitter = 0.0;  // relative 1-sigma applied to swept delays and bandwidths

    std::vector<double> values() const;
};

// Scenario-specific knobs. Each scenario reads only the ones it documents.
struct ScenarioParams {
    double input_photons = 0.7;
    double input_pW = 1.0;
    double span_MHz = 10.0;
    std::size_t spectrum_points = 401;
    std::size_t traces = 100000;
    std::size_t pilot_traces = 256;
    std::vector<double> candidates{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    DelayMethod delay_method = DelayMethod::peak;
    double linear_limit_photons = 1000.0;
    Mode mode = Mode::conjugate;
};

struct ScenarioConfig {
    std::string scenario;
    std::uint64_t seed = 1;
    std::string output = "out";
    MediumConfig medium;
    BandwidthModel bandwidth;
    DetectorConfig detector;
    PhotonCalibration calibration;
    GridConfig grid;
    std::optional<SweepConfig> sweep;
    ScenarioParams params;
    std::string config_sha256;
    unsigned threads = 0;  // 0 = hardware concurrency
};

// Parses and validates a JSON config. Throws ConfigError naming the offending key.
ScenarioConfig parse_config(std::string_view json_text);
ScenarioConfig load_config(const std::filesystem::path& path);

struct ScenarioOutput {
    std::vector<std::pair<std::string, std::string>> files;  // name -> contents
    std::string summary;
};

// Runs the named scenario fully in memory.
ScenarioOutput run_scenario(const ScenarioConfig& cfg);

// Writes every output plus manifest.json. All files are staged as temporaries
// first and renamed into place afterwards.
void write_outputs(const ScenarioConfig& cfg, const ScenarioOutput& out,
                   const std::filesystem::path& dir);

std::string manifest_json(const ScenarioConfig& cfg, const ScenarioOutput& out);

struct ScenarioInfo {
    std::string name;
    std::string figure;
    std::vector<std::string> required_blocks;
    std::vector<std::string> outputs;  // "file: col1, col2, ..."
    std::string description;
};

// Alphabetical.
const std::vector<ScenarioInfo>& scenario_catalog();
std::string list_scenarios();

std::string sha256_hex(std::string_view data);
std::string_view artifact_version();

}  // namespace fwm
