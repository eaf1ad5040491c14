#pragma once

// Constructions that compile semiautomata into fixed-weight transformer nets:
// the log-depth prefix-composition scan, the constant-depth group pipeline
// (counters, direct/semidirect/wreath products, solvable groups via their
// composition series), permutation-reset simulation, user cascades, and the
// depth-2 gridworld net.

#include "shortcut/algebra.hpp"
#include "shortcut/gadgets.hpp"
#include "shortcut/net.hpp"

namespace shortcut {

struct BoundCheck {
    std::string name;
    double measured = 0.0;
    double bound = 0.0;
    bool pass = false;
};

struct CompileReport {
    std::string construction;
    std::string automaton;
    int T = 0;
    NetMetrics metrics;
    std::vector<BoundCheck> checks;

    void add(const std::string& name, double measured, double bound);
    bool all_pass() const;
    nlohmann::ordered_json to_json() const;
};

// A net simulating the canonical semiautomaton of `group` (states = symbols =
// element indices). Elements are encoded as integer vectors on rep_channels;
// the identity encodes to the zero vector.
struct GroupSim {
    TransformerNet net;
    FiniteSemigroup group;
    std::vector<std::vector<int>> rep;  // per element
    int rep_dim = 0;
    int rep_size = 1;  // entries lie in [0, rep_size)
    std::vector<int> rep_channels;
    int T = 0;
};

struct CompiledNet {
    TransformerNet net;
    CompileReport report;
};

// --- Log-depth prefix-composition scan --------------------------------------
CompiledNet compile_log_depth(const Semiautomaton& a, int q0, int T);

// --- Constant-depth algebraic pipeline ---------------------------------------
// Depth-1 modular counter; the canonical simulator for C_n.
GroupSim compile_mod_counter(int n, int T);
// Counter net for a mod-n counter semiautomaton with arbitrary q0.
CompiledNet compile_mod_counter_net(const Semiautomaton& a, int q0, int T);

// Depth-1 memory (flip-flop generalization) net.
CompiledNet compile_memory(int num_states, int T, int q0);

GroupSim combine_direct_product(const std::vector<GroupSim>& sims);

// G = N x| H for an explicit homomorphism phi: phi[h][n] = index of phi_h(n)
// in N. The result simulates the pair group with element index n * |H| + h.
GroupSim combine_semidirect(const GroupSim& sim_n, const GroupSim& sim_h,
                            const std::vector<std::vector<int>>& phi);

// Full wreath product N wr H (materialized; requires sim_h.rep_dim == 1).
GroupSim combine_wreath(const GroupSim& sim_n, const GroupSim& sim_h);

// Restricts a sim to a closed subset of its group's elements.
GroupSim restrict_sim(const GroupSim& sim, const std::vector<int>& element_subset);

// Simulation of any solvable group by walking its composition series
// (cyclic groups short-circuit to a single counter).
struct SolvableCompilation {
    GroupSim sim;
    CompileReport report;
};
SolvableCompilation compile_solvable_group(const FiniteSemigroup& g, int T);

// Permutation-reset semiautomaton whose permutation group is solvable.
CompiledNet compile_permutation_reset(const Semiautomaton& a, int q0, int T);

// User-supplied transformation cascade.
CompiledNet compile_cascade(const CascadeSpec& spec, const std::vector<int>& q0_tuple, int T);

// --- Depth-2 gridworld construction ------------------------------------------
struct GridworldTrace {
    int final_state = 0;
    int t_uniq = 0, t_min = 0, t_max = 0, t_final = 0;
    int boundary = 0;
    std::vector<int> prefix_sums;  // including the S+1 leading -1 pads
};

// Reference parallel algorithm; actions in {-1, 0, +1}.
GridworldTrace gridworld_final_state(std::span<const int> actions, int s);
// Per-prefix variant: the full trajectory via the parallel rule.
std::vector<int> gridworld_trajectory(std::span<const int> actions, int s);

CompiledNet compile_gridworld(int s, int T);

// --- Bridges ----------------------------------------------------------------
// Simulates automaton `a` with a group sim whose group contains all of a's
// transition maps (as transformations on a's states): encoder maps symbols to
// elements, decoder applies the prefix element to q0.
TransformerNet net_for_automaton(const GroupSim& sim, const Semiautomaton& a, int q0);

// Dispatch used by the CLI: picks a constant-depth route for the automaton
// (group / permutation-reset) or throws UnsupportedError with the refusal.
CompiledNet compile_krohn_rhodes(const Semiautomaton& a, int q0, int T);

// Shared layout constants for group-sim nets (workspace first, then the
// padding flag and the log positional channel).
struct GroupNetLayout {
    int rep_dim;
    int d;           // rep_dim + 2
    int pad_flag;    // rep_dim
    int gamma;       // rep_dim + 1
};
GroupNetLayout group_net_layout(int rep_dim);

int ceil_log2(int t);

} // namespace shortcut
