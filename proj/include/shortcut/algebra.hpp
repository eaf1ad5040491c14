#pragma once

// Finite transformation-semigroup machinery: closure under composition,
// maximal subgroups, solvability, composition series, group products,
// universal-embedding bookkeeping for the group compiler, and exact cascade
// evaluation.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "shortcut/semiautomaton.hpp"

namespace shortcut {

struct FiniteSemigroup {
    std::vector<Transformation> elements;   // deduplicated
    std::vector<std::vector<int>> cayley;   // cayley[i][j] = index of elements[i] o elements[j]
    std::vector<int> generators;            // indices into elements
    bool contains_identity = false;
    int identity_index = -1;
    bool all_invertible = false;

    int size() const { return static_cast<int>(elements.size()); }
    int ground_size() const { return elements.empty() ? 0 : elements[0].size(); }
    int mul(int i, int j) const { return cayley[i][j]; }
    int find(const Transformation& t) const;  // -1 if absent
    bool is_group() const { return contains_identity && all_invertible; }
    int inverse(int i) const;                 // InputError if no inverse
    int power(int i, int k) const;            // k >= 0 (k = 0 needs identity)
    int element_order(int i) const;           // group elements only
};

// Breadth-first closure of the generators under composition.
FiniteSemigroup semigroup_closure(const std::vector<Transformation>& generators,
                                  std::size_t element_cap = 1000000);

// Transformation semigroup T(A) generated by the per-symbol maps.
FiniteSemigroup transformation_semigroup(const Semiautomaton& a,
                                         std::size_t element_cap = 1000000);

// Subgroup-as-index-set helpers. Subsets are sorted parent element indices.
bool is_subgroup(const FiniteSemigroup& s, const std::vector<int>& subset);

// Extracts a closed subset as its own FiniteSemigroup. old_to_new, if given,
// receives the parent-index -> new-index map (-1 elsewhere).
FiniteSemigroup subsemigroup(const FiniteSemigroup& s, const std::vector<int>& subset,
                             std::vector<int>* old_to_new = nullptr);

// For each idempotent e, the group of units of eSe, returned as element-index
// sets (exact-duplicate sets removed).
std::vector<std::vector<int>> maximal_subgroups(const FiniteSemigroup& s);

bool is_solvable_group(const FiniteSemigroup& g);  // InputError if not a group
bool is_solvable_subgroup(const FiniteSemigroup& s, const std::vector<int>& subset);

// True iff every maximal subgroup of T(A) is solvable.
bool is_solvable_semiautomaton(const Semiautomaton& a, std::size_t element_cap = 1000000);

// True iff every maximal subgroup of T(A) is trivial.
bool is_aperiodic(const FiniteSemigroup& s);

struct CompositionSeries {
    // chain[0] = whole group, chain.back() = {identity}; each entry is a
    // maximal proper normal subgroup of its predecessor.
    std::vector<std::vector<int>> chain;
    std::vector<int> factor_orders;  // |chain[i]| / |chain[i+1]|
};

CompositionSeries composition_series(const FiniteSemigroup& g);
CompositionSeries composition_series_subset(const FiniteSemigroup& s, std::vector<int> subset);

// All normal subgroups of the given subgroup (unions of its conjugacy classes
// that are closed under the operation).
std::vector<std::vector<int>> normal_subgroups(const FiniteSemigroup& s,
                                               const std::vector<int>& subset);

// Canonical group semiautomaton: Q = Sigma = element indices,
// delta(g, h) = h o g. Identity is labeled "e", other elements "g<i>".
Semiautomaton canonical_group_semiautomaton(const FiniteSemigroup& g);

// Product-action direct product: ground set Qa x Qb, one element per pair.
FiniteSemigroup direct_product_group(const FiniteSemigroup& a, const FiniteSemigroup& b);

// Left-regular realization of an abstract group given by its Cayley table.
FiniteSemigroup left_regular_group(const std::vector<std::vector<int>>& cayley);

// Wreath product N wr H with H-indexed coordinates:
// (f, a) . (f', b) = (x -> f(x) o f'(x o a), a o b), realized left-regularly.
// Element index = a * |N|^|H| + sum_x f(x) * |N|^x.
FiniteSemigroup wreath_product_group(const FiniteSemigroup& n, const FiniteSemigroup& h);

// Quotient of `big` by the normal subgroup `normal` when the quotient is
// cyclic of prime order p (the composition-series case).
struct CyclicQuotient {
    int p = 1;
    std::vector<int> transversal;     // parent indices tau(0..p-1); tau(0) = identity
    std::vector<int> coset_exponent;  // per position in `big`: m with g in coset(u^m)
};
CyclicQuotient cyclic_quotient(const FiniteSemigroup& s, const std::vector<int>& big,
                               const std::vector<int>& normal);

// Krasner-Kaloujnine-style embedding of `big` into normal wr C_p along a
// cyclic quotient: g -> (f_g, m_g) with
//   f_g(x) = tau(x) o g o tau((x + m_g) mod p)^-1  in `normal`.
struct WreathEmbedding {
    CyclicQuotient quotient;
    std::vector<int> normal_pos_of_parent;     // parent idx -> position in `normal` (-1 elsewhere)
    std::vector<std::vector<int>> f_parts;     // per position in `big`: p positions into `normal`
    std::vector<int> m_exp;                    // per position in `big`
};
WreathEmbedding wreath_embedding(const FiniteSemigroup& s, const std::vector<int>& big,
                                 const std::vector<int>& normal);

bool is_permutation_reset(const Semiautomaton& a);

// ---------------------------------------------------------------------------
// Cascade products.

struct CascadeSpec {
    std::vector<Semiautomaton> components;
    // deps[i] is the dependency table of component i+2, keyed by
    // "q1,...,q_{i+1},<raw label>"; values are component-(i+2) symbol labels.
    std::vector<std::unordered_map<std::string, std::string>> deps;
    // Keyed by "q1,...,qn"; values are target-automaton states.
    std::unordered_map<std::string, int> readout;
    std::string name;

    int levels() const { return static_cast<int>(components.size()); }
    // InputError if component 1's alphabet is not usable as the raw alphabet,
    // a component is not permutation-reset, or a table is missing entries.
    void validate() const;
};

struct CascadeResult {
    std::vector<std::vector<int>> tuples;  // state tuple after each step
    std::vector<int> readout_states;
};

CascadeResult cascade_evaluate(const CascadeSpec& spec, const std::vector<int>& q0_tuple,
                               std::span<const int> raw_symbols);

std::string cascade_key(std::span<const int> states);
std::string cascade_key(std::span<const int> states, const std::string& label);

nlohmann::ordered_json to_json(const CascadeSpec& spec);
CascadeSpec cascade_from_json(const nlohmann::json& j);
CascadeSpec load_cascade(const std::string& path);
void save_cascade(const CascadeSpec& spec, const std::string& path);

// The shipped cascade for the 3-state gridworld: last-direction flip-flop,
// mod-2 reversal counter, and a memory unit, with an exact readout.
CascadeSpec gridworld2_cascade();

// The shipped cascade for the dihedral walker D_{2n}: a direction flip-flop
// driving a mod-n counter.
CascadeSpec dihedral_cascade(int n);

} // namespace shortcut
