#pragma once

// Command-line front end. run_cli parses arguments into a RunConfig,
// validates it, runs the command and maps failures to exit codes
// (2 validation, 3 numeric, 4 I/O) with an error JSON on stderr.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nqm/states.hpp"

namespace nqm {

inline constexpr const char* kVersion = "1.0.0";

enum class Command { FilterCoeffs, Convert, Expect, Nqp, Criteria, Figure, Simulate, Estimate };
enum class OutputFormat { Csv, Json };

std::string to_string(Command command);

struct RunConfig {
    Command command = Command::FilterCoeffs;
    std::optional<StateSpec> state;
    std::optional<double> w;
    double extent = 4.0;
    int resolution = 81;
    int order = 8;
    int figure = 0;
    std::vector<double> nbars;  // figure 1 curve set; empty for the default
    std::optional<std::filesystem::path> table;       // moment-table JSON
    std::optional<std::filesystem::path> observable;  // observable JSON
    std::optional<std::filesystem::path> input;       // dataset
    std::optional<std::filesystem::path> output;
    std::optional<std::filesystem::path> svg;
    std::uint64_t seed = 0;
    int phases = 12;
    int per_phase = 10000;
    int bootstrap = 0;
    bool nqp = false;  // estimate: emit the NQP grid instead of moments
    OutputFormat format = OutputFormat::Csv;
    std::vector<std::string> arguments;  // original command line, for the sidecar
};

/// "kind:param[,param...]" or a JSON object. Kinds: vacuum, coherent:<complex>,
/// thermal:nbar, fock:n, spats:nbar, squeezed:V[,phase], fock_vector:c0,c1,...
/// Complex numbers are written 1.5, 0.5i, 1-2i. Errors name the field and
/// the 0-based character position.
StateSpec parse_state(std::string_view text);

/// Throws ValidationError for missing or out-of-range parameters.
void validate(const RunConfig& config);

/// Runs a validated config; writes to `out` unless config.output is set,
/// in which case the file and `<output>.meta.json` are written.
void run(const RunConfig& config, std::ostream& out);

/// Parses, validates, runs. Returns the exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nqm
