#include "shortcut/semiautomaton.hpp"

#include <fstream>
#include <numeric>

namespace shortcut {

bool Transformation::is_identity() const {
    for (int i = 0; i < size(); ++i)
        if (image[i] != i) return false;
    return true;
}

bool Transformation::is_bijection() const {
    std::vector<char> seen(image.size(), 0);
    for (int v : image) {
        if (v < 0 || v >= size() || seen[v]) return false;
        seen[v] = 1;
    }
    return true;
}

bool Transformation::is_constant() const {
    for (int v : image)
        if (v != image[0]) return false;
    return true;
}

Transformation Transformation::identity(int n) {
    Transformation t;
    t.image.resize(n);
    std::iota(t.image.begin(), t.image.end(), 0);
    return t;
}

Transformation Transformation::constant(int n, int value) {
    Transformation t;
    t.image.assign(n, value);
    return t;
}

Transformation compose(const Transformation& f, const Transformation& g) {
    if (f.size() != g.size())
        throw InputError("compose: ground-set size mismatch");
    Transformation r;
    r.image.resize(f.size());
    for (int i = 0; i < f.size(); ++i) r.image[i] = f.image[g.image[i]];
    return r;
}

int Semiautomaton::symbol_index(const std::string& label) const {
    for (int i = 0; i < num_symbols(); ++i)
        if (alphabet[i] == label) return i;
    throw InputError("unknown symbol label: " + label);
}

void Semiautomaton::validate() const {
    if (num_states < 1) throw InputError("semiautomaton needs at least one state");
    if (alphabet.empty()) throw InputError("semiautomaton needs a nonempty alphabet");
    std::unordered_map<std::string, int> seen;
    for (const auto& s : alphabet)
        if (++seen[s] > 1) throw InputError("duplicate alphabet label: " + s);
    if (static_cast<int>(delta.size()) != num_symbols())
        throw InputError("delta row count does not match alphabet size");
    for (const auto& row : delta) {
        if (static_cast<int>(row.size()) != num_states)
            throw InputError("delta row length does not match num_states");
        for (int v : row)
            if (v < 0 || v >= num_states) throw InputError("delta entry out of range");
    }
}

StateSequence sequential_simulate(const Semiautomaton& a, int q0, std::span<const int> symbols) {
    if (q0 < 0 || q0 >= a.num_states) throw InputError("q0 out of range");
    StateSequence out;
    out.q0 = q0;
    out.states.reserve(symbols.size());
    int q = q0;
    for (int s : symbols) {
        if (s < 0 || s >= a.num_symbols()) throw InputError("symbol index out of range");
        q = a.delta[s][q];
        out.states.push_back(q);
    }
    return out;
}

StateSequence sequential_simulate(const Semiautomaton& a, int q0,
                                  const std::vector<std::string>& labels) {
    std::vector<int> idx;
    idx.reserve(labels.size());
    for (const auto& l : labels) idx.push_back(a.symbol_index(l));
    return sequential_simulate(a, q0, idx);
}

Transformation transition_map(const Semiautomaton& a, int symbol) {
    if (symbol < 0 || symbol >= a.num_symbols()) throw InputError("symbol index out of range");
    return Transformation{a.delta[symbol]};
}

Transformation transition_map(const Semiautomaton& a, const std::string& label) {
    return transition_map(a, a.symbol_index(label));
}

Semiautomaton make_cyclic(int n) {
    if (n < 1) throw InputError("cyclic: n must be positive");
    Semiautomaton a;
    a.num_states = n;
    a.name = "C" + std::to_string(n);
    for (int z = 0; z < n; ++z) {
        a.alphabet.push_back(std::to_string(z));
        std::vector<int> row(n);
        for (int q = 0; q < n; ++q) row[q] = (q + z) % n;
        a.delta.push_back(std::move(row));
    }
    return a;
}

Semiautomaton make_parity() {
    Semiautomaton a = make_cyclic(2);
    a.name = "parity";
    return a;
}

Semiautomaton make_memory(int num_states) {
    if (num_states < 1) throw InputError("memory: need at least one state");
    Semiautomaton a;
    a.num_states = num_states;
    a.name = "memory" + std::to_string(num_states);
    a.alphabet.push_back(kBottom);
    std::vector<int> id(num_states);
    std::iota(id.begin(), id.end(), 0);
    a.delta.push_back(id);
    for (int q = 0; q < num_states; ++q) {
        a.alphabet.push_back(std::to_string(q));
        a.delta.push_back(std::vector<int>(num_states, q));
    }
    return a;
}

Semiautomaton make_gridworld(int s) {
    if (s < 1) throw InputError("gridworld: S must be >= 1");
    Semiautomaton a;
    a.num_states = s + 1;
    a.name = "grid" + std::to_string(s);
    a.alphabet = {"L", kBottom, "R"};
    std::vector<int> left(s + 1), stay(s + 1), right(s + 1);
    for (int q = 0; q <= s; ++q) {
        left[q] = std::max(q - 1, 0);
        stay[q] = q;
        right[q] = std::min(q + 1, s);
    }
    a.delta = {left, stay, right};
    return a;
}

Semiautomaton make_dihedral(int n) {
    if (n < 2) throw InputError("dihedral: n must be >= 2");
    Semiautomaton a;
    a.num_states = 2 * n;
    a.name = "D" + std::to_string(2 * n);
    a.alphabet = {"advance", "reverse"};
    // state (s, b): index s + n * (b is minus). advance: (s + b mod n, b);
    // reverse: (s, -b).
    std::vector<int> adv(2 * n), rev(2 * n);
    for (int s = 0; s < n; ++s) {
        adv[s] = (s + 1) % n;
        adv[s + n] = (s + n - 1) % n + n;
        rev[s] = s + n;
        rev[s + n] = s;
    }
    a.delta = {adv, rev};
    return a;
}

Semiautomaton make_permutation_group(const std::vector<std::vector<int>>& generators,
                                     const std::vector<std::string>& labels) {
    if (generators.empty()) throw InputError("permutation-group: need generators");
    int n = static_cast<int>(generators[0].size());
    if (!labels.empty() && labels.size() != generators.size())
        throw InputError("permutation-group: label count mismatch");
    Semiautomaton a;
    a.num_states = n;
    a.name = "perm" + std::to_string(n);
    for (std::size_t i = 0; i < generators.size(); ++i) {
        Transformation t{generators[i]};
        if (t.size() != n || !t.is_bijection())
            throw InputError("permutation-group: generator is not a permutation");
        a.alphabet.push_back(labels.empty() ? "p" + std::to_string(i) : labels[i]);
        a.delta.push_back(generators[i]);
    }
    return a;
}

Semiautomaton make_direct_product(const Semiautomaton& a, const Semiautomaton& b) {
    a.validate();
    b.validate();
    Semiautomaton p;
    p.num_states = a.num_states * b.num_states;
    p.name = a.name + "x" + b.name;
    // Symbols (sa|sb) with an identity symbol "e" adjoined on each side.
    auto side_labels = [](const Semiautomaton& m) {
        std::vector<std::string> l = m.alphabet;
        l.push_back("e");
        return l;
    };
    auto la = side_labels(a), lb = side_labels(b);
    for (std::size_t i = 0; i < la.size(); ++i) {
        for (std::size_t j = 0; j < lb.size(); ++j) {
            p.alphabet.push_back(la[i] + "|" + lb[j]);
            std::vector<int> row(p.num_states);
            for (int qa = 0; qa < a.num_states; ++qa) {
                for (int qb = 0; qb < b.num_states; ++qb) {
                    int na = i < a.delta.size() ? a.delta[i][qa] : qa;
                    int nb = j < b.delta.size() ? b.delta[j][qb] : qb;
                    row[qa * b.num_states + qb] = na * b.num_states + nb;
                }
            }
            p.delta.push_back(std::move(row));
        }
    }
    return p;
}

Semiautomaton builtin(const std::string& name, const nlohmann::json& params) {
    auto geti = [&](const std::string& key) {
        if (!params.contains(key)) throw InputError("builtin " + name + ": missing param " + key);
        return params.at(key).get<int>();
    };
    if (name == "cyclic") return make_cyclic(geti("n"));
    if (name == "parity") return make_parity();
    if (name == "memory") return make_memory(geti("num_states"));
    if (name == "gridworld") return make_gridworld(geti("S"));
    if (name == "dihedral") return make_dihedral(geti("n"));
    if (name == "permutation-group") {
        if (!params.contains("generators"))
            throw InputError("builtin permutation-group: missing param generators");
        auto gens = params.at("generators").get<std::vector<std::vector<int>>>();
        std::vector<std::string> labels;
        if (params.contains("labels")) labels = params.at("labels").get<std::vector<std::string>>();
        return make_permutation_group(gens, labels);
    }
    if (name == "direct-product") {
        if (!params.contains("left") || !params.contains("right"))
            throw InputError("builtin direct-product: needs left and right");
        return make_direct_product(semiautomaton_from_json(params.at("left")),
                                   semiautomaton_from_json(params.at("right")));
    }
    throw InputError("unknown builtin: " + name);
}

nlohmann::ordered_json to_json(const Semiautomaton& a) {
    nlohmann::ordered_json j;
    j["num_states"] = a.num_states;
    j["alphabet"] = a.alphabet;
    j["delta"] = a.delta;
    if (!a.name.empty()) j["name"] = a.name;
    return j;
}

Semiautomaton semiautomaton_from_json(const nlohmann::json& j) {
    Semiautomaton a;
    try {
        a.num_states = j.at("num_states").get<int>();
        a.alphabet = j.at("alphabet").get<std::vector<std::string>>();
        a.delta = j.at("delta").get<std::vector<std::vector<int>>>();
        if (j.contains("name")) a.name = j.at("name").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("bad semiautomaton json: ") + e.what());
    }
    a.validate();
    return a;
}

Semiautomaton load_semiautomaton(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(path + ": " + e.what());
    }
    return semiautomaton_from_json(j);
}

void save_semiautomaton(const Semiautomaton& a, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path);
    out << to_json(a).dump(2) << "\n";
}

} // namespace shortcut
