#pragma once

// Finite semiautomata, the sequential simulation oracle, and the builtin
// catalog (cyclic counters, memory units, gridworlds, dihedral groups,
// permutation actions, direct products).

#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace shortcut {

struct InputError : std::runtime_error {
    explicit InputError(const std::string& m) : std::runtime_error(m) {}
};
struct ResourceError : std::runtime_error {
    explicit ResourceError(const std::string& m) : std::runtime_error(m) {}
};
struct UnsupportedError : std::runtime_error {
    explicit UnsupportedError(const std::string& m) : std::runtime_error(m) {}
};

// A function Q -> Q on a dense 0-based state set, stored as its image vector.
struct Transformation {
    std::vector<int> image;

    int size() const { return static_cast<int>(image.size()); }
    int operator()(int q) const { return image[q]; }
    bool operator==(const Transformation&) const = default;
    bool is_identity() const;
    bool is_bijection() const;
    bool is_constant() const;
    static Transformation identity(int n);
    static Transformation constant(int n, int value);
};

// f after g: result(q) = f(g(q)). Sizes must match.
Transformation compose(const Transformation& f, const Transformation& g);

struct Semiautomaton {
    int num_states = 0;
    std::vector<std::string> alphabet;
    // delta[sigma][q] = next state, ordered as `alphabet`.
    std::vector<std::vector<int>> delta;
    std::string name;

    int num_symbols() const { return static_cast<int>(alphabet.size()); }
    int symbol_index(const std::string& label) const;  // InputError on unknown
    void validate() const;                             // InputError on bad table
};

struct StateSequence {
    int q0 = 0;
    std::vector<int> states;

    bool operator==(const StateSequence&) const = default;
};

// Ground-truth oracle: q_t = delta(q_{t-1}, sigma_t).
StateSequence sequential_simulate(const Semiautomaton& a, int q0, std::span<const int> symbols);
StateSequence sequential_simulate(const Semiautomaton& a, int q0,
                                  const std::vector<std::string>& labels);

// The per-symbol state map delta(., sigma).
Transformation transition_map(const Semiautomaton& a, int symbol);
Transformation transition_map(const Semiautomaton& a, const std::string& label);

// Builtin catalog. Names: cyclic, parity, memory, gridworld, dihedral,
// permutation-group, direct-product. Params are name-specific (see builtin()).
Semiautomaton make_cyclic(int n);
Semiautomaton make_parity();
Semiautomaton make_memory(int num_states);
Semiautomaton make_gridworld(int s);  // states 0..s
Semiautomaton make_dihedral(int n);   // 2n states (pos, dir)
Semiautomaton make_permutation_group(const std::vector<std::vector<int>>& generators,
                                     const std::vector<std::string>& labels = {});
Semiautomaton make_direct_product(const Semiautomaton& a, const Semiautomaton& b);

Semiautomaton builtin(const std::string& name, const nlohmann::json& params);

// UTF-8 JSON round trip: {"num_states", "alphabet", "delta", "name"?}.
nlohmann::ordered_json to_json(const Semiautomaton& a);
Semiautomaton semiautomaton_from_json(const nlohmann::json& j);
Semiautomaton load_semiautomaton(const std::string& path);
void save_semiautomaton(const Semiautomaton& a, const std::string& path);

inline const std::string kBottom = "⊥";  // the no-op symbol label

} // namespace shortcut
