#include "shortcut/algebra.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

namespace shortcut {

namespace {

bool is_prime(int n) {
    if (n < 2) return false;
    for (int d = 2; d * d <= n; ++d)
        if (n % d == 0) return false;
    return true;
}

std::vector<int> sorted(std::vector<int> v) {
    std::sort(v.begin(), v.end());
    return v;
}

} // namespace

int FiniteSemigroup::find(const Transformation& t) const {
    for (int i = 0; i < size(); ++i)
        if (elements[i] == t) return i;
    return -1;
}

int FiniteSemigroup::inverse(int i) const {
    if (identity_index < 0) throw InputError("inverse: semigroup has no identity");
    for (int j = 0; j < size(); ++j)
        if (mul(i, j) == identity_index && mul(j, i) == identity_index) return j;
    throw InputError("inverse: element has no inverse");
}

int FiniteSemigroup::power(int i, int k) const {
    if (k == 0) {
        if (identity_index < 0) throw InputError("power 0 needs an identity");
        return identity_index;
    }
    int acc = i;
    for (int s = 1; s < k; ++s) acc = mul(acc, i);
    return acc;
}

int FiniteSemigroup::element_order(int i) const {
    if (identity_index < 0) throw InputError("element_order needs an identity");
    int acc = i, k = 1;
    while (acc != identity_index) {
        acc = mul(acc, i);
        if (++k > size()) throw InputError("element_order: element is not of finite group order");
    }
    return k;
}

FiniteSemigroup semigroup_closure(const std::vector<Transformation>& generators,
                                  std::size_t element_cap) {
    if (generators.empty()) throw InputError("semigroup_closure: no generators");
    int n = generators[0].size();
    for (const auto& g : generators)
        if (g.size() != n) throw InputError("semigroup_closure: mixed ground-set sizes");

    FiniteSemigroup s;
    std::map<std::vector<int>, int> index;
    auto intern = [&](const Transformation& t) {
        auto it = index.find(t.image);
        if (it != index.end()) return it->second;
        if (s.elements.size() >= element_cap)
            throw ResourceError("semigroup closure exceeded element cap");
        int id = s.size();
        index.emplace(t.image, id);
        s.elements.push_back(t);
        return id;
    };

    for (const auto& g : generators) {
        int id = intern(g);
        if (std::find(s.generators.begin(), s.generators.end(), id) == s.generators.end())
            s.generators.push_back(id);
    }
    // Breadth-first closure; products of known elements with generators suffice,
    // then the full Cayley table is completed below.
    for (std::size_t i = 0; i < s.elements.size(); ++i) {
        for (int g : s.generators) {
            intern(compose(s.elements[i], s.elements[g]));
            intern(compose(s.elements[g], s.elements[i]));
        }
    }
    s.cayley.assign(s.size(), std::vector<int>(s.size(), -1));
    for (int i = 0; i < s.size(); ++i) {
        for (int j = 0; j < s.size(); ++j) {
            auto it = index.find(compose(s.elements[i], s.elements[j]).image);
            if (it == index.end())
                throw ResourceError("closure incomplete (internal)");
            s.cayley[i][j] = it->second;
        }
    }
    s.identity_index = -1;
    for (int i = 0; i < s.size(); ++i)
        if (s.elements[i].is_identity()) s.identity_index = i;
    s.contains_identity = s.identity_index >= 0;
    s.all_invertible = true;
    for (const auto& e : s.elements)
        if (!e.is_bijection()) { s.all_invertible = false; break; }
    return s;
}

FiniteSemigroup transformation_semigroup(const Semiautomaton& a, std::size_t element_cap) {
    a.validate();
    std::vector<Transformation> gens;
    for (int i = 0; i < a.num_symbols(); ++i) gens.push_back(transition_map(a, i));
    return semigroup_closure(gens, element_cap);
}

namespace {

// Local identity of a subset: the element acting as a two-sided identity on
// the subset (maximal subgroups at an idempotent e have e, not the global
// identity). Returns -1 if none.
int local_identity(const FiniteSemigroup& s, const std::vector<int>& subset) {
    for (int e : subset) {
        bool ok = true;
        for (int x : subset)
            if (s.mul(e, x) != x || s.mul(x, e) != x) { ok = false; break; }
        if (ok) return e;
    }
    return -1;
}

} // namespace

bool is_subgroup(const FiniteSemigroup& s, const std::vector<int>& subset) {
    if (subset.empty()) return false;
    std::vector<char> in(s.size(), 0);
    for (int i : subset) in[i] = 1;
    int e = local_identity(s, subset);
    if (e < 0) return false;
    for (int i : subset)
        for (int j : subset)
            if (!in[s.mul(i, j)]) return false;
    for (int i : subset) {
        bool has_inv = false;
        for (int j : subset)
            if (s.mul(i, j) == e && s.mul(j, i) == e) { has_inv = true; break; }
        if (!has_inv) return false;
    }
    return true;
}

FiniteSemigroup subsemigroup(const FiniteSemigroup& s, const std::vector<int>& subset,
                             std::vector<int>* old_to_new) {
    std::vector<int> map(s.size(), -1);
    FiniteSemigroup r;
    for (std::size_t k = 0; k < subset.size(); ++k) {
        map[subset[k]] = static_cast<int>(k);
        r.elements.push_back(s.elements[subset[k]]);
    }
    r.cayley.assign(r.size(), std::vector<int>(r.size(), -1));
    for (std::size_t i = 0; i < subset.size(); ++i) {
        for (std::size_t j = 0; j < subset.size(); ++j) {
            int prod = s.mul(subset[i], subset[j]);
            if (map[prod] < 0) throw InputError("subsemigroup: subset is not closed");
            r.cayley[i][j] = map[prod];
        }
    }
    r.generators.resize(r.size());
    std::iota(r.generators.begin(), r.generators.end(), 0);
    r.identity_index = -1;
    for (int i = 0; i < r.size(); ++i)
        if (r.elements[i].is_identity()) r.identity_index = i;
    r.contains_identity = r.identity_index >= 0;
    r.all_invertible = true;
    for (const auto& e : r.elements)
        if (!e.is_bijection()) { r.all_invertible = false; break; }
    if (old_to_new) *old_to_new = map;
    return r;
}

std::vector<std::vector<int>> maximal_subgroups(const FiniteSemigroup& s) {
    std::vector<std::vector<int>> out;
    for (int e = 0; e < s.size(); ++e) {
        if (s.mul(e, e) != e) continue;  // idempotents only
        // Local monoid eSe.
        std::set<int> local;
        for (int x = 0; x < s.size(); ++x) local.insert(s.mul(e, s.mul(x, e)));
        // Units of eSe with identity e.
        std::vector<int> units;
        for (int x : local) {
            for (int y : local) {
                if (s.mul(x, y) == e && s.mul(y, x) == e) {
                    units.push_back(x);
                    break;
                }
            }
        }
        units = sorted(units);
        units.erase(std::unique(units.begin(), units.end()), units.end());
        if (std::find(out.begin(), out.end(), units) == out.end()) out.push_back(units);
    }
    return out;
}

namespace {

// Subgroup generated by `seed` inside s (BFS closure under multiplication).
std::vector<int> generated_subgroup(const FiniteSemigroup& s, std::vector<int> seed, int e) {
    std::set<int> in(seed.begin(), seed.end());
    in.insert(e);
    std::vector<int> queue(in.begin(), in.end());
    for (std::size_t i = 0; i < queue.size(); ++i) {
        for (std::size_t j = 0; j < queue.size(); ++j) {
            for (int prod : {s.mul(queue[i], queue[j]), s.mul(queue[j], queue[i])}) {
                if (in.insert(prod).second) queue.push_back(prod);
            }
        }
    }
    return std::vector<int>(queue.begin(), queue.end());
}

int subgroup_identity(const FiniteSemigroup& s, const std::vector<int>& subset) {
    int e = local_identity(s, subset);
    if (e < 0) throw InputError("subset is not a group (no identity)");
    return e;
}

int inverse_in(const FiniteSemigroup& s, const std::vector<int>& subset, int x, int e) {
    for (int y : subset)
        if (s.mul(x, y) == e && s.mul(y, x) == e) return y;
    throw InputError("subset is not a group (missing inverse)");
}

} // namespace

std::vector<std::vector<int>> normal_subgroups(const FiniteSemigroup& s,
                                               const std::vector<int>& subset) {
    int e = subgroup_identity(s, subset);
    // Conjugacy classes of the subgroup.
    std::map<int, int> cls;
    std::vector<std::vector<int>> classes;
    for (int h : subset) {
        if (cls.count(h)) continue;
        std::set<int> c;
        for (int g : subset) {
            int gi = inverse_in(s, subset, g, e);
            c.insert(s.mul(g, s.mul(h, gi)));
        }
        int id = static_cast<int>(classes.size());
        classes.emplace_back(c.begin(), c.end());
        for (int x : c) cls[x] = id;
    }
    // Normal closures of single classes, then close under joins.
    std::set<std::vector<int>> normals;
    normals.insert({e});
    normals.insert(sorted(subset));
    for (const auto& c : classes) {
        auto closure = generated_subgroup(s, c, e);
        normals.insert(sorted(closure));
    }
    bool grew = true;
    while (grew) {
        grew = false;
        std::vector<std::vector<int>> cur(normals.begin(), normals.end());
        for (std::size_t i = 0; i < cur.size() && !grew; ++i) {
            for (std::size_t j = i + 1; j < cur.size() && !grew; ++j) {
                std::vector<int> u;
                std::set_union(cur[i].begin(), cur[i].end(), cur[j].begin(), cur[j].end(),
                               std::back_inserter(u));
                auto join = sorted(generated_subgroup(s, u, e));
                if (normals.insert(join).second) grew = true;
            }
        }
    }
    return std::vector<std::vector<int>>(normals.begin(), normals.end());
}

CompositionSeries composition_series_subset(const FiniteSemigroup& s, std::vector<int> subset) {
    subset = sorted(subset);
    if (!is_subgroup(s, subset)) throw InputError("composition_series: not a group");
    CompositionSeries out;
    out.chain.push_back(subset);
    while (out.chain.back().size() > 1) {
        const auto& cur = out.chain.back();
        auto normals = normal_subgroups(s, cur);
        // Maximal proper normal subgroup: largest, ties by lexicographically
        // smallest element set (element sets are sorted).
        const std::vector<int>* best = nullptr;
        for (const auto& n : normals) {
            if (n.size() >= cur.size()) continue;
            if (!best || n.size() > best->size() || (n.size() == best->size() && n < *best))
                best = &n;
        }
        if (!best) throw InputError("composition_series: no proper normal subgroup (internal)");
        out.factor_orders.push_back(static_cast<int>(cur.size() / best->size()));
        out.chain.push_back(*best);
    }
    return out;
}

CompositionSeries composition_series(const FiniteSemigroup& g) {
    if (!g.is_group()) throw InputError("composition_series: input is not a group");
    std::vector<int> all(g.size());
    std::iota(all.begin(), all.end(), 0);
    return composition_series_subset(g, all);
}

bool is_solvable_subgroup(const FiniteSemigroup& s, const std::vector<int>& subset) {
    if (!is_subgroup(s, subset)) throw InputError("is_solvable: subset is not a group");
    int e = subgroup_identity(s, subset);
    std::vector<int> cur = sorted(subset);
    for (int step = 0; step <= s.size(); ++step) {
        if (cur.size() == 1) return true;
        // Commutator subgroup [cur, cur].
        std::set<int> comms;
        for (int a : cur) {
            int ai = inverse_in(s, cur, a, e);
            for (int b : cur) {
                int bi = inverse_in(s, cur, b, e);
                comms.insert(s.mul(a, s.mul(b, s.mul(ai, bi))));
            }
        }
        auto next = sorted(generated_subgroup(s, {comms.begin(), comms.end()}, e));
        if (next == cur) return false;  // derived series stalled above trivial
        cur = next;
    }
    return false;
}

bool is_solvable_group(const FiniteSemigroup& g) {
    if (!g.is_group()) throw InputError("is_solvable_group: input is not a group");
    std::vector<int> all(g.size());
    std::iota(all.begin(), all.end(), 0);
    return is_solvable_subgroup(g, all);
}

bool is_solvable_semiautomaton(const Semiautomaton& a, std::size_t element_cap) {
    auto t = transformation_semigroup(a, element_cap);
    for (const auto& h : maximal_subgroups(t))
        if (!is_solvable_subgroup(t, h)) return false;
    return true;
}

bool is_aperiodic(const FiniteSemigroup& s) {
    for (const auto& h : maximal_subgroups(s))
        if (h.size() > 1) return false;
    return true;
}

Semiautomaton canonical_group_semiautomaton(const FiniteSemigroup& g) {
    if (!g.is_group()) throw InputError("canonical_group_semiautomaton: input is not a group");
    Semiautomaton a;
    a.num_states = g.size();
    a.name = "canonical-" + std::to_string(g.size());
    for (int h = 0; h < g.size(); ++h) {
        a.alphabet.push_back(h == g.identity_index ? "e" : "g" + std::to_string(h));
        std::vector<int> row(g.size());
        for (int q = 0; q < g.size(); ++q) row[q] = g.mul(h, q);
        a.delta.push_back(std::move(row));
    }
    return a;
}

FiniteSemigroup direct_product_group(const FiniteSemigroup& a, const FiniteSemigroup& b) {
    int na = a.ground_size(), nb = b.ground_size();
    std::vector<Transformation> els;
    FiniteSemigroup r;
    for (int i = 0; i < a.size(); ++i) {
        for (int j = 0; j < b.size(); ++j) {
            Transformation t;
            t.image.resize(na * nb);
            for (int qa = 0; qa < na; ++qa)
                for (int qb = 0; qb < nb; ++qb)
                    t.image[qa * nb + qb] = a.elements[i].image[qa] * nb + b.elements[j].image[qb];
            r.elements.push_back(std::move(t));
        }
    }
    int n = r.size();
    r.cayley.assign(n, std::vector<int>(n, -1));
    for (int i = 0; i < a.size(); ++i)
        for (int j = 0; j < b.size(); ++j)
            for (int k = 0; k < a.size(); ++k)
                for (int l = 0; l < b.size(); ++l)
                    r.cayley[i * b.size() + j][k * b.size() + l] =
                        a.mul(i, k) * b.size() + b.mul(j, l);
    r.generators.resize(n);
    std::iota(r.generators.begin(), r.generators.end(), 0);
    r.identity_index = -1;
    for (int i = 0; i < n; ++i)
        if (r.elements[i].is_identity()) r.identity_index = i;
    r.contains_identity = r.identity_index >= 0;
    r.all_invertible = a.all_invertible && b.all_invertible;
    return r;
}

FiniteSemigroup left_regular_group(const std::vector<std::vector<int>>& cayley) {
    int n = static_cast<int>(cayley.size());
    FiniteSemigroup r;
    for (int i = 0; i < n; ++i) {
        Transformation t;
        t.image = cayley[i];  // x -> i o x
        r.elements.push_back(std::move(t));
    }
    r.cayley = cayley;
    r.generators.resize(n);
    std::iota(r.generators.begin(), r.generators.end(), 0);
    r.identity_index = -1;
    for (int i = 0; i < n; ++i)
        if (r.elements[i].is_identity()) r.identity_index = i;
    r.contains_identity = r.identity_index >= 0;
    r.all_invertible = true;
    for (const auto& e : r.elements)
        if (!e.is_bijection()) { r.all_invertible = false; break; }
    // Sanity: left-regular multiplication must reproduce the table.
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (r.elements[i].image[j] != cayley[i][j])
                throw InputError("left_regular_group: inconsistent Cayley table");
    return r;
}

FiniteSemigroup wreath_product_group(const FiniteSemigroup& n, const FiniteSemigroup& h) {
    if (!n.is_group() || !h.is_group())
        throw InputError("wreath_product_group: both factors must be groups");
    int p = h.size();
    long long total = p;
    for (int x = 0; x < p; ++x) {
        total *= n.size();
        if (total > 20000) throw ResourceError("wreath product too large to materialize");
    }
    int nn = n.size();
    long long base = 1;
    std::vector<long long> pow(p + 1);
    for (int x = 0; x <= p; ++x) { pow[x] = base; base *= nn; }
    auto encode = [&](const std::vector<int>& f, int a) {
        long long idx = a * pow[p];
        for (int x = 0; x < p; ++x) idx += f[x] * pow[x];
        return static_cast<int>(idx);
    };
    int sz = static_cast<int>(total);
    std::vector<std::vector<int>> cay(sz, std::vector<int>(sz, -1));
    std::vector<std::vector<int>> fs(sz, std::vector<int>(p));
    std::vector<int> as(sz);
    for (int idx = 0; idx < sz; ++idx) {
        long long r = idx;
        as[idx] = static_cast<int>(r / pow[p]);
        r %= pow[p];
        for (int x = 0; x < p; ++x) {
            fs[idx][x] = static_cast<int>(r % nn);
            r /= nn;
        }
    }
    std::vector<int> f2(p);
    for (int i = 0; i < sz; ++i) {
        for (int j = 0; j < sz; ++j) {
            // (f,a) . (f',b) = (x -> f(x) o f'(x o a), a o b)
            for (int x = 0; x < p; ++x) f2[x] = n.mul(fs[i][x], fs[j][h.mul(x, as[i])]);
            cay[i][j] = encode(f2, h.mul(as[i], as[j]));
        }
    }
    return left_regular_group(cay);
}

CyclicQuotient cyclic_quotient(const FiniteSemigroup& s, const std::vector<int>& big,
                               const std::vector<int>& normal) {
    if (big.size() % normal.size() != 0)
        throw InputError("cyclic_quotient: |normal| does not divide |big|");
    int p = static_cast<int>(big.size() / normal.size());
    if (!is_prime(p) && p != 1)
        throw UnsupportedError("quotient of order " + std::to_string(p) + " is not prime");
    int e = subgroup_identity(s, big);
    std::set<int> nset(normal.begin(), normal.end());
    // Left coset signature of g: the sorted set g o N.
    auto coset_of = [&](int g) {
        std::vector<int> c;
        c.reserve(normal.size());
        for (int x : normal) c.push_back(s.mul(g, x));
        return sorted(c);
    };
    CyclicQuotient q;
    q.p = p;
    if (p == 1) {
        q.transversal = {e};
        q.coset_exponent.assign(big.size(), 0);
        return q;
    }
    int u = -1;
    for (int g : big)
        if (!nset.count(g)) { u = g; break; }
    std::vector<std::vector<int>> cosets(p);
    q.transversal.resize(p);
    int cur = e;
    for (int k = 0; k < p; ++k) {
        q.transversal[k] = cur;
        cosets[k] = coset_of(cur);
        cur = s.mul(u, cur);  // u^(k+1)
    }
    q.coset_exponent.resize(big.size());
    for (std::size_t i = 0; i < big.size(); ++i) {
        auto c = coset_of(big[i]);
        int m = -1;
        for (int k = 0; k < p; ++k)
            if (cosets[k] == c) { m = k; break; }
        if (m < 0) throw InputError("cyclic_quotient: quotient is not cyclic of prime order");
        q.coset_exponent[i] = m;
    }
    return q;
}

WreathEmbedding wreath_embedding(const FiniteSemigroup& s, const std::vector<int>& big,
                                 const std::vector<int>& normal) {
    WreathEmbedding w;
    w.quotient = cyclic_quotient(s, big, normal);
    int p = w.quotient.p;
    w.normal_pos_of_parent.assign(s.size(), -1);
    for (std::size_t i = 0; i < normal.size(); ++i) w.normal_pos_of_parent[normal[i]] = static_cast<int>(i);
    std::vector<int> tau_inv(p);
    for (int x = 0; x < p; ++x) tau_inv[x] = inverse_in(s, big, w.quotient.transversal[x],
                                                        subgroup_identity(s, big));
    w.f_parts.resize(big.size());
    w.m_exp.resize(big.size());
    for (std::size_t i = 0; i < big.size(); ++i) {
        int g = big[i];
        int m = w.quotient.coset_exponent[i];
        w.m_exp[i] = m;
        w.f_parts[i].resize(p);
        for (int x = 0; x < p; ++x) {
            int fx = s.mul(s.mul(w.quotient.transversal[x], g), tau_inv[(x + m) % p]);
            int pos = w.normal_pos_of_parent[fx];
            if (pos < 0) throw InputError("wreath_embedding: f part fell outside the normal subgroup");
            w.f_parts[i][x] = pos;
        }
    }
    return w;
}

bool is_permutation_reset(const Semiautomaton& a) {
    for (int i = 0; i < a.num_symbols(); ++i) {
        auto t = transition_map(a, i);
        if (!t.is_bijection() && !t.is_constant()) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Cascades.

std::string cascade_key(std::span<const int> states) {
    std::string k;
    for (std::size_t i = 0; i < states.size(); ++i) {
        if (i) k += ',';
        k += std::to_string(states[i]);
    }
    return k;
}

std::string cascade_key(std::span<const int> states, const std::string& label) {
    std::string k = cascade_key(states);
    if (!k.empty()) k += ',';
    k += label;
    return k;
}

void CascadeSpec::validate() const {
    if (components.empty()) throw InputError("cascade: needs at least one component");
    for (const auto& c : components) {
        c.validate();
        if (!is_permutation_reset(c))
            throw InputError("cascade: component " + c.name + " is not permutation-reset");
    }
    if (static_cast<int>(deps.size()) != levels() - 1)
        throw InputError("cascade: need one dependency table per component after the first");
    const auto& raw = components[0].alphabet;
    // Totality of every dependency table and of the readout.
    std::vector<int> tuple(levels(), 0);
    for (int i = 1; i < levels(); ++i) {
        std::vector<int> prefix(i, 0);
        while (true) {
            for (const auto& label : raw) {
                auto key = cascade_key(std::span<const int>(prefix.data(), i), label);
                auto it = deps[i - 1].find(key);
                if (it == deps[i - 1].end())
                    throw InputError("cascade: dependency table " + std::to_string(i + 1) +
                                     " missing entry " + key);
                components[i].symbol_index(it->second);  // throws on bad label
            }
            int k = i - 1;
            while (k >= 0 && ++prefix[k] == components[k].num_states) prefix[k--] = 0;
            if (k < 0) break;
        }
    }
    while (true) {
        auto key = cascade_key(tuple);
        if (!readout.count(key)) throw InputError("cascade: readout missing entry " + key);
        int k = levels() - 1;
        while (k >= 0 && ++tuple[k] == components[k].num_states) tuple[k--] = 0;
        if (k < 0) break;
    }
}

CascadeResult cascade_evaluate(const CascadeSpec& spec, const std::vector<int>& q0_tuple,
                               std::span<const int> raw_symbols) {
    int n = spec.levels();
    if (static_cast<int>(q0_tuple.size()) != n)
        throw InputError("cascade_evaluate: tuple arity mismatch");
    for (int i = 0; i < n; ++i)
        if (q0_tuple[i] < 0 || q0_tuple[i] >= spec.components[i].num_states)
            throw InputError("cascade_evaluate: q0 tuple entry out of range");
    CascadeResult out;
    std::vector<int> cur = q0_tuple, next(n);
    for (int raw : raw_symbols) {
        if (raw < 0 || raw >= spec.components[0].num_symbols())
            throw InputError("cascade_evaluate: raw symbol out of range");
        const std::string& label = spec.components[0].alphabet[raw];
        for (int i = 0; i < n; ++i) {
            int sym;
            if (i == 0) {
                sym = raw;
            } else {
                auto key = cascade_key(std::span<const int>(cur.data(), i), label);
                auto it = spec.deps[i - 1].find(key);
                if (it == spec.deps[i - 1].end())
                    throw InputError("cascade_evaluate: missing dependency entry " + key);
                sym = spec.components[i].symbol_index(it->second);
            }
            next[i] = spec.components[i].delta[sym][cur[i]];
        }
        cur = next;
        out.tuples.push_back(cur);
        auto it = spec.readout.find(cascade_key(cur));
        if (it == spec.readout.end())
            throw InputError("cascade_evaluate: missing readout entry " + cascade_key(cur));
        out.readout_states.push_back(it->second);
    }
    return out;
}

nlohmann::ordered_json to_json(const CascadeSpec& spec) {
    nlohmann::ordered_json j;
    j["components"] = nlohmann::ordered_json::array();
    for (const auto& c : spec.components) j["components"].push_back(to_json(c));
    j["deps"] = nlohmann::ordered_json::array();
    for (const auto& d : spec.deps) {
        nlohmann::ordered_json t = nlohmann::ordered_json::object();
        std::vector<std::string> keys;
        for (const auto& [k, v] : d) keys.push_back(k);
        std::sort(keys.begin(), keys.end());
        for (const auto& k : keys) t[k] = d.at(k);
        j["deps"].push_back(std::move(t));
    }
    nlohmann::ordered_json r = nlohmann::ordered_json::object();
    std::vector<std::string> keys;
    for (const auto& [k, v] : spec.readout) keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    for (const auto& k : keys) r[k] = spec.readout.at(k);
    j["readout"] = std::move(r);
    if (!spec.name.empty()) j["name"] = spec.name;
    return j;
}

CascadeSpec cascade_from_json(const nlohmann::json& j) {
    CascadeSpec s;
    try {
        for (const auto& c : j.at("components")) s.components.push_back(semiautomaton_from_json(c));
        for (const auto& d : j.at("deps"))
            s.deps.push_back(d.get<std::unordered_map<std::string, std::string>>());
        s.readout = j.at("readout").get<std::unordered_map<std::string, int>>();
        if (j.contains("name")) s.name = j.at("name").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("bad cascade json: ") + e.what());
    }
    s.validate();
    return s;
}

CascadeSpec load_cascade(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(path + ": " + e.what());
    }
    return cascade_from_json(j);
}

void save_cascade(const CascadeSpec& spec, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path);
    out << to_json(spec).dump(2) << "\n";
}

CascadeSpec dihedral_cascade(int n) {
    if (n < 2) throw InputError("dihedral cascade: n must be >= 2");
    Semiautomaton dir;
    dir.num_states = 2;
    dir.name = "direction";
    dir.alphabet = {"advance", "reverse"};
    dir.delta = {{0, 1}, {1, 0}};
    Semiautomaton ctr = make_cyclic(n);
    ctr.name = "position";
    CascadeSpec c;
    c.name = "dihedral" + std::to_string(2 * n) + "-cascade";
    c.components = {dir, ctr};
    c.deps.resize(1);
    for (int b = 0; b < 2; ++b) {
        c.deps[0][cascade_key(std::vector<int>{b}, "advance")] =
            b == 0 ? "1" : std::to_string(n - 1);
        c.deps[0][cascade_key(std::vector<int>{b}, "reverse")] = "0";
    }
    for (int b = 0; b < 2; ++b)
        for (int s = 0; s < n; ++s)
            c.readout[cascade_key(std::vector<int>{b, s})] = s + n * b;
    c.validate();
    return c;
}

CascadeSpec gridworld2_cascade() {
    // Component 1: last non-bottom direction (0 = L, 1 = R).
    Semiautomaton dir;
    dir.num_states = 2;
    dir.name = "last-dir";
    dir.alphabet = {"L", kBottom, "R"};
    dir.delta = {{0, 0}, {0, 1}, {1, 1}};

    // Component 2: mod-2 count of direction reversals.
    Semiautomaton par = make_cyclic(2);
    par.name = "reversal-parity";

    // Component 3: memory bit s; the tracked wall bit is w = s xor parity.
    Semiautomaton mem = make_memory(2);
    mem.name = "wall-latch";

    CascadeSpec c;
    c.name = "grid2-cascade";
    c.components = {dir, par, mem};
    c.deps.resize(2);
    // Reversal events toggle the parity; same-direction moves leave it alone.
    for (int d = 0; d < 2; ++d) {
        c.deps[0][cascade_key(std::vector<int>{d}, "L")] = d == 1 ? "1" : "0";
        c.deps[0][cascade_key(std::vector<int>{d}, "R")] = d == 0 ? "1" : "0";
        c.deps[0][cascade_key(std::vector<int>{d}, kBottom)] = "0";
    }
    // A move continuing the current direction pins the walker to that wall:
    // latch s so that w = s xor parity = 1.
    for (int d = 0; d < 2; ++d) {
        for (int p = 0; p < 2; ++p) {
            std::vector<int> st{d, p};
            c.deps[1][cascade_key(st, "L")] = d == 0 ? std::to_string(1 ^ p) : kBottom;
            c.deps[1][cascade_key(st, "R")] = d == 1 ? std::to_string(1 ^ p) : kBottom;
            c.deps[1][cascade_key(st, kBottom)] = kBottom;
        }
    }
    for (int d = 0; d < 2; ++d) {
        for (int p = 0; p < 2; ++p) {
            for (int s = 0; s < 2; ++s) {
                int w = s ^ p;
                int q = d == 0 ? (w ? 0 : 1) : (w ? 2 : 1);
                c.readout[cascade_key(std::vector<int>{d, p, s})] = q;
            }
        }
    }
    c.validate();
    return c;
}

} // namespace shortcut
