#pragma once

// Differential and exhaustive verification of compiled nets against the
// sequential oracle, plus throughput benchmarking and the CLI entry point.

#include <cstdint>
#include <optional>

#include "shortcut/compiler.hpp"

namespace shortcut {

// Stable seeded PRNG (splitmix64) so reports reproduce across platforms.
struct SplitMix64 {
    std::uint64_t state;
    explicit SplitMix64(std::uint64_t seed) : state(seed) {}
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    // Uniform in [0, n) by modulo (documented; bias is < 2^-50 at desk sizes).
    int below(int n) { return static_cast<int>(next() % static_cast<std::uint64_t>(n)); }
};

struct Mismatch {
    std::uint64_t trial = 0;
    int position = 0;
    int expected = 0;
    int got = 0;
    std::vector<int> input;
};

struct VerificationReport {
    std::string automaton;
    std::string construction;
    int T = 0;
    std::uint64_t trials = 0;
    bool exhaustive = false;
    std::uint64_t seed = 0;
    std::uint64_t mismatches = 0;
    std::optional<Mismatch> first_mismatch;
    double max_decode_deviation = 0.0;     // distance of decoded activations to integers
    double max_workspace_deviation = 0.0;  // distance of workspace probes to integers
    bool workspace_ok = true;              // all probes within their declared tolerances
    double margin_budget = 0.25;           // Delta/4 margin of the decoding rule
    bool metrics_consistent = true;        // stored metrics match the weights
    double oracle_seconds = 0.0;
    double net_seconds = 0.0;
    int threads = 1;

    bool pass() const {
        return mismatches == 0 && metrics_consistent && max_decode_deviation <= margin_budget;
    }
    // Timings are machine-dependent; the default form is byte-reproducible
    // for a fixed seed.
    nlohmann::ordered_json to_json(bool with_timings = false) const;
};

VerificationReport differential_test(const Semiautomaton& a, int q0, const TransformerNet& net,
                                     int T, std::uint64_t trials, std::uint64_t seed,
                                     int threads = 0);

// Enumerates all |Sigma|^T sequences; throws ResourceError above the cap.
VerificationReport exhaustive_test(const Semiautomaton& a, int q0, const TransformerNet& net,
                                   int T, std::uint64_t cap = 1ULL << 20);

struct BenchResult {
    struct Row {
        int T = 0;
        int sequential_steps = 0;
        int layer_steps = 0;
        double oracle_seconds_per_seq = 0.0;
        double net_seconds_per_seq = 0.0;
    };
    std::vector<Row> rows;
    int threads = 1;
    nlohmann::ordered_json to_json() const;
};

BenchResult bench(const Semiautomaton& a, int q0, const TransformerNet& net,
                  const std::vector<int>& t_sweep, int reps, std::uint64_t seed);

// CLI entry point (subcommands: make, analyze, compile, simulate, verify,
// bench). Returns 0 on success, 1 on verification failure, 2 on usage or
// refusal errors.
int run_cli(const std::vector<std::string>& args);

} // namespace shortcut
