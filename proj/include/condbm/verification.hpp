#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

// Self-checks shared by `verify` and the acceptance runner. Each check
// returns a pass flag and a one-line summary of the numbers behind it.
namespace condbm::verify {

struct CheckResult {
    int id = 0;
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

enum class Level { Quick, Full };

struct Options {
    std::uint64_t seed = 20261016;
    bool parallel = true;
    // Path to the CLI binary for the determinism check; empty runs it in process.
    std::string cli_path;
    std::string work_dir = ".";
    // Scale factor for Monte Carlo sizes (1 = full acceptance scale).
    double mc_scale = 1.0;
};

CheckResult moment_identities(const Options& opt);  // 1
CheckResult cross_method_moments(const Options& opt);  // 2
CheckResult monte_carlo_agreement(const Options& opt);  // 3
CheckResult table2_reproduction(const Options& opt);  // 4
CheckResult feller_suite(const Options& opt);  // 5
CheckResult close_mean_root(const Options& opt);  // 6
CheckResult symmetry_suite(const Options& opt);  // 7
CheckResult coefficient_identities(const Options& opt);  // 8
CheckResult synthetic_pipeline(const Options& opt);  // 9
CheckResult determinism(const Options& opt);  // 10

// Closed-form parts of check 7.
CheckResult symmetry_closed_form(const Options& opt);

struct Entry {
    int id;
    std::string name;
    std::function<CheckResult(const Options&)> run;
};
std::vector<Entry> suite(Level level);

// Runs the entries, timing each; exceptions become failures.
std::vector<CheckResult> run(const std::vector<Entry>& entries, const Options& opt,
                             const std::function<void(const CheckResult&)>& on_result = {});

}  // namespace condbm::verify
