#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "porosplit/error.hpp"

namespace porosplit::cli {

enum class Command { Toy, Biot2d, Network, Balance, Iters, Stability, Convergence };
enum class Problem { Toy, Biot2d, NetworkToy };
enum class ReferenceChoice { Analytic, Fine };

[[nodiscard]] std::string_view to_string(Command c) noexcept;
[[nodiscard]] std::string_view to_string(Problem p) noexcept;

/// Fully resolved settings of one invocation.
struct RunConfig {
    Command command = Command::Toy;
    /// System used by convergence, balance and iters.
    Problem problem = Problem::Toy;
    int k = 1;
    /// Single runs use the first entry; studies use all of them.
    std::vector<double> taus;
    double T = 1.0;

    /// Absolute tolerance; when absent tol = τ^tol_exponent.
    std::optional<double> tol;
    std::optional<double> tol_exponent;
    /// Use 10^{−3−3k} in the convergence study.
    bool order_tol = false;

    std::optional<double> gamma;
    std::optional<double> L;
    double omega = 2.0;
    int grid = 16;
    std::size_t max_inner = 200;

    /// iters (toy): tol = ē τ^s with ē the mean implicit error.
    double tol_tau_exponent = 1.5;
    std::vector<double> omegas{2.0, 4.0};
    std::vector<double> gammas{0.5, 0.1};
    /// balance: s values; iters (biot2d): offsets d in τ^{k+d}.
    std::vector<double> exponents;

    /// Network toy, one entry per network.
    std::vector<double> alphas{1.0, 1.0};
    std::vector<double> Ms{1.0, 1.0};
    std::vector<double> kappas{1.0, 1.0};
    /// Symmetric exchange rate between every pair of networks.
    double beta = 0.5;

    ReferenceChoice reference = ReferenceChoice::Fine;
    int ref_factor = 8;
    int substeps = 64;

    std::filesystem::path out = ".";
    std::uint64_t seed = 1;
    std::size_t threads = 1;
    bool dry_run = false;
};

/// Parses arguments (without the program name). A `--config FILE` flag, or
/// the `file` argument, supplies flat `key = value` lines whose keys are the
/// long flag names; command-line flags take precedence. Throws UsageError for
/// unknown flags or keys and ValidationError when validate() fails.
[[nodiscard]] RunConfig parse_config(const std::vector<std::string>& args,
                                     const std::optional<std::filesystem::path>& file = std::nullopt);

/// Throws ValidationError unless k ∈ 1..5, at most one of gamma and L is set,
/// every τ divides T and the remaining numeric settings are in range.
void validate(const RunConfig& cfg);

/// `key = value` lines that parse back to the same configuration.
[[nodiscard]] std::string describe(const RunConfig& cfg);

/// Executes the command, writing CSV files below cfg.out and a summary to
/// `out`. Library errors propagate.
void run(const RunConfig& cfg, std::ostream& out);

/// Process exit status per error category.
[[nodiscard]] int exit_code(ErrorCode code) noexcept;

/// Text listing every exit status, shown in --help.
[[nodiscard]] std::string exit_code_help();

/// Full entry point: parse, run, map errors to exit codes.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace porosplit::cli
