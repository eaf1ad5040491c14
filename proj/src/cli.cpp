#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "shortcut/harness.hpp"

namespace shortcut {

namespace {

std::vector<std::string> split_list(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty() || !out.empty()) out.push_back(cur);
    return out;
}

std::vector<int> parse_ints(const std::string& s, char sep = ',') {
    std::vector<int> out;
    for (const auto& tok : split_list(s, sep)) {
        if (tok.empty()) continue;
        out.push_back(std::stoi(tok));
    }
    return out;
}

std::vector<std::string> parse_symbols(const std::string& s) {
    std::vector<std::string> out;
    for (auto& tok : split_list(s, ',')) {
        if (tok.empty()) continue;
        out.push_back(tok == "_" ? kBottom : tok);
    }
    return out;
}

bool is_net_file(const nlohmann::json& j) {
    return j.contains("format") && j.at("format") == "shortcut-net-v1";
}

bool is_cascade_file(const nlohmann::json& j) { return j.contains("components"); }

nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(path + ": " + e.what());
    }
    return j;
}

int cmd_make(const std::string& name, int n, int num_states, int s, const std::string& gens,
             const std::string& left, const std::string& right, const std::string& of,
             const std::string& out_path) {
    if (name == "grid2-cascade" || name == "dihedral-cascade") {
        CascadeSpec spec =
            name == "grid2-cascade" ? gridworld2_cascade() : dihedral_cascade(n > 0 ? n : 4);
        save_cascade(spec, out_path);
        std::cout << "wrote " << out_path << " (" << spec.levels() << " components)\n";
        return 0;
    }
    Semiautomaton a;
    if (name == "canonical-group") {
        if (of.empty()) throw InputError("make canonical-group needs --of <automaton.json>");
        auto base = load_semiautomaton(of);
        auto t = transformation_semigroup(base);
        if (!t.is_group())
            throw InputError("canonical-group: the transformation semigroup is not a group");
        a = canonical_group_semiautomaton(t);
        a.name = base.name.empty() ? a.name : "canonical-" + base.name;
    } else {
        nlohmann::json params;
        if (n > 0) params["n"] = n;
        if (num_states > 0) params["num_states"] = num_states;
        if (s > 0) params["S"] = s;
        if (!gens.empty()) {
            std::vector<std::vector<int>> g;
            for (const auto& perm : split_list(gens, ';'))
                if (!perm.empty()) g.push_back(parse_ints(perm));
            params["generators"] = g;
        }
        if (!left.empty()) params["left"] = read_json(left);
        if (!right.empty()) params["right"] = read_json(right);
        a = builtin(name, params);
    }
    save_semiautomaton(a, out_path);
    std::cout << "wrote " << out_path << " (" << a.num_states << " states, "
              << a.num_symbols() << " symbols)\n";
    return 0;
}

int cmd_analyze(const std::string& path, std::size_t cap) {
    auto a = load_semiautomaton(path);
    auto t = transformation_semigroup(a, cap);
    std::cout << "automaton: " << (a.name.empty() ? path : a.name) << "\n";
    std::cout << "states: " << a.num_states << ", symbols: " << a.num_symbols() << "\n";
    std::cout << "|T(A)|: " << t.size() << "\n";
    std::cout << "contains identity: " << (t.contains_identity ? "true" : "false") << "\n";
    std::cout << "group: " << (t.is_group() ? "true" : "false") << "\n";
    std::cout << "permutation-reset: " << (is_permutation_reset(a) ? "true" : "false") << "\n";
    auto subs = maximal_subgroups(t);
    std::cout << "maximal subgroup orders:";
    for (const auto& h : subs) std::cout << " " << h.size();
    std::cout << "\n";
    bool solv = true;
    for (const auto& h : subs)
        if (!is_solvable_subgroup(t, h)) solv = false;
    std::cout << "solvable: " << (solv ? "true" : "false") << "\n";
    std::cout << "aperiodic: " << (is_aperiodic(t) ? "true" : "false") << "\n";
    return 0;
}

int cmd_compile(const std::string& path, const std::string& construction, int T, int q0,
                const std::string& q0_tuple, const std::string& out_path) {
    auto j = read_json(path);
    CompiledNet compiled;
    if (is_cascade_file(j) || construction == "cascade") {
        CascadeSpec spec = cascade_from_json(j);
        std::vector<int> tuple;
        if (!q0_tuple.empty()) tuple = parse_ints(q0_tuple);
        else tuple.assign(spec.levels(), 0);
        compiled = compile_cascade(spec, tuple, T);
    } else {
        Semiautomaton a = semiautomaton_from_json(j);
        if (construction == "log-depth") {
            compiled = compile_log_depth(a, q0, T);
        } else if (construction == "krohn-rhodes") {
            compiled = compile_krohn_rhodes(a, q0, T);
        } else if (construction == "counter") {
            compiled = compile_mod_counter_net(a, q0, T);
        } else if (construction == "memory") {
            // Validate the memory shape and recover per-symbol targets.
            compiled = [&] {
                for (int sym = 0; sym < a.num_symbols(); ++sym) {
                    auto tm = transition_map(a, sym);
                    if (!tm.is_identity() && !tm.is_constant())
                        throw InputError("memory construction needs a memory semiautomaton");
                }
                CompiledNet c = compile_memory(a.num_states, T, q0);
                // Re-point the encoder at the automaton's own alphabet order.
                TransformerNet net = c.net;
                std::vector<std::vector<double>> enc(a.num_symbols());
                std::vector<std::string> syms(a.num_symbols());
                for (int sym = 0; sym < a.num_symbols(); ++sym) {
                    auto tm = transition_map(a, sym);
                    syms[sym] = a.alphabet[sym];
                    enc[sym] = tm.is_identity() ? c.net.encoder[0]
                                                : c.net.encoder[1 + tm.image[0]];
                }
                net.symbols = std::move(syms);
                net.encoder = std::move(enc);
                net.automaton_name = a.name;
                net.metrics = net.recompute_metrics();
                c.net = std::move(net);
                c.report.automaton = a.name;
                return c;
            }();
        } else if (construction == "gridworld") {
            Semiautomaton ref = make_gridworld(a.num_states - 1);
            if (a.delta != ref.delta)
                throw InputError("gridworld construction needs the gridworld semiautomaton");
            if (q0 != 0) throw InputError("gridworld construction starts at q0 = 0");
            compiled = compile_gridworld(a.num_states - 1, T);
            compiled.net.symbols = a.alphabet;
            compiled.net.automaton_name = a.name;
        } else {
            throw InputError("unknown construction: " + construction);
        }
    }
    nlohmann::ordered_json out = to_json(compiled.net);
    out["report"] = compiled.report.to_json();
    std::ofstream os(out_path);
    if (!os) throw InputError("cannot write " + out_path);
    os << out.dump() << "\n";
    std::cout << compiled.report.to_json().dump(2) << "\n";
    std::cout << "wrote " << out_path << "\n";
    if (!compiled.report.all_pass()) {
        std::cerr << "metric conformance FAILED\n";
        return 1;
    }
    return 0;
}

int cmd_simulate(const std::string& path, int q0, const std::string& input) {
    auto j = read_json(path);
    auto symbols = parse_symbols(input);
    std::vector<int> states;
    if (is_net_file(j)) {
        TransformerNet net = net_from_json(j);
        states = net_evaluate(net, symbols).states;
    } else {
        Semiautomaton a = semiautomaton_from_json(j);
        states = sequential_simulate(a, q0, symbols).states;
    }
    for (std::size_t i = 0; i < states.size(); ++i)
        std::cout << (i ? " " : "") << states[i];
    std::cout << "\n";
    return 0;
}

int cmd_verify(const std::string& aut_path, const std::string& net_path, bool exhaustive,
               std::uint64_t trials, std::uint64_t seed, int T, int threads, bool quiet) {
    Semiautomaton a = load_semiautomaton(aut_path);
    auto raw = read_json(net_path);
    TransformerNet net = net_from_json(raw);
    if (T <= 0) T = net.capacity;
    VerificationReport rep = exhaustive
                                 ? exhaustive_test(a, net.q0, net, T)
                                 : differential_test(a, net.q0, net, T, trials, seed, threads);
    // Full metric conformance: the compile report stored with the net must
    // also hold.
    bool report_ok = true;
    if (raw.contains("report") && raw["report"].contains("all_pass"))
        report_ok = raw["report"]["all_pass"].get<bool>();
    if (!quiet) {
        auto j = rep.to_json(true);
        j["compile_report_conformance"] = report_ok;
        std::cout << j.dump(2) << "\n";
    }
    return rep.pass() && report_ok ? 0 : 1;
}

int cmd_bench(const std::string& aut_path, const std::string& net_path,
              const std::string& sweep, int reps, std::uint64_t seed) {
    Semiautomaton a = load_semiautomaton(aut_path);
    TransformerNet net = load_net(net_path);
    std::vector<int> ts = parse_ints(sweep);
    if (ts.empty()) ts = {net.capacity};
    BenchResult res = bench(a, net.q0, net, ts, reps, seed);
    std::cout << res.to_json().dump(2) << "\n";
    return 0;
}

} // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"shortcut: compile finite semiautomata into fixed-weight transformer nets"};
    app.require_subcommand(1);

    // make
    auto* mk = app.add_subcommand("make", "write a builtin semiautomaton to a JSON file");
    std::string mk_name, mk_gens, mk_left, mk_right, mk_of, mk_out = "automaton.json";
    int mk_n = 0, mk_states = 0, mk_s = 0;
    mk->add_option("name", mk_name,
                   "cyclic|parity|memory|gridworld|dihedral|permutation-group|direct-product|"
                   "canonical-group|grid2-cascade|dihedral-cascade")
        ->required();
    mk->add_option("--n", mk_n, "order (cyclic, dihedral)");
    mk->add_option("--states", mk_states, "state count (memory)");
    mk->add_option("--S", mk_s, "wall index (gridworld)");
    mk->add_option("--gens", mk_gens, "semicolon-separated permutations, e.g. '1,0,2;1,2,0'");
    mk->add_option("--left", mk_left, "left factor file (direct-product)");
    mk->add_option("--right", mk_right, "right factor file (direct-product)");
    mk->add_option("--of", mk_of, "base automaton file (canonical-group)");
    mk->add_option("-o,--output", mk_out, "output path");

    // analyze
    auto* an = app.add_subcommand("analyze", "closure, maximal subgroups, solvability");
    std::string an_path;
    std::size_t an_cap = 1000000;
    an->add_option("automaton", an_path)->required();
    an->add_option("--cap", an_cap, "element cap for the closure");

    // compile
    auto* co = app.add_subcommand("compile", "compile an automaton or cascade into a net");
    std::string co_path, co_construction = "log-depth", co_tuple, co_out = "net.json";
    int co_T = 16, co_q0 = 0;
    co->add_option("input", co_path, "automaton.json or cascade.json")->required();
    co->add_option("--construction", co_construction,
                   "log-depth|krohn-rhodes|gridworld|counter|memory|cascade");
    co->add_option("--T", co_T, "compiled sequence length");
    co->add_option("--q0", co_q0, "initial state");
    co->add_option("--q0-tuple", co_tuple, "cascade initial tuple, e.g. '0,0,1'");
    co->add_option("-o,--output", co_out, "output path");

    // simulate
    auto* si = app.add_subcommand("simulate", "run the oracle or a net on an input");
    std::string si_path, si_input;
    int si_q0 = 0;
    si->add_option("file", si_path, "automaton.json or net.json")->required();
    si->add_option("--q0", si_q0, "initial state (oracle only)");
    si->add_option("--input", si_input, "comma-separated symbols ('_' = no-op)")->required();

    // verify
    auto* ve = app.add_subcommand("verify", "differential or exhaustive test of a net");
    std::string ve_aut, ve_net;
    bool ve_exh = false, ve_quiet = false;
    std::uint64_t ve_trials = 1000, ve_seed = 0;
    int ve_T = 0, ve_threads = 0;
    ve->add_option("automaton", ve_aut)->required();
    ve->add_option("net", ve_net)->required();
    ve->add_flag("--exhaustive", ve_exh, "enumerate all sequences");
    ve->add_option("--trials", ve_trials);
    ve->add_option("--seed", ve_seed);
    ve->add_option("--T", ve_T, "test length (default: net capacity)");
    ve->add_option("--threads", ve_threads);
    ve->add_flag("--quiet", ve_quiet);

    // bench
    auto* be = app.add_subcommand("bench", "oracle vs net step counts and wall clock");
    std::string be_aut, be_net, be_sweep;
    int be_reps = 5;
    std::uint64_t be_seed = 0;
    be->add_option("automaton", be_aut)->required();
    be->add_option("net", be_net)->required();
    be->add_option("--T-sweep", be_sweep, "comma-separated lengths");
    be->add_option("--reps", be_reps);
    be->add_option("--seed", be_seed);

    std::vector<std::string> argv_rev(args.rbegin(), args.rend());
    try {
        app.parse(argv_rev);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (mk->parsed())
            return cmd_make(mk_name, mk_n, mk_states, mk_s, mk_gens, mk_left, mk_right, mk_of,
                            mk_out);
        if (an->parsed()) return cmd_analyze(an_path, an_cap);
        if (co->parsed()) return cmd_compile(co_path, co_construction, co_T, co_q0, co_tuple,
                                             co_out);
        if (si->parsed()) return cmd_simulate(si_path, si_q0, si_input);
        if (ve->parsed())
            return cmd_verify(ve_aut, ve_net, ve_exh, ve_trials, ve_seed, ve_T, ve_threads,
                              ve_quiet);
        if (be->parsed()) return cmd_bench(be_aut, be_net, be_sweep, be_reps, be_seed);
    } catch (const UnsupportedError& e) {
        std::cerr << "refused: " << e.what() << "\n";
        return 2;
    } catch (const ResourceError& e) {
        std::cerr << "refused: " << e.what() << "\n";
        return 2;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const DecodeError& e) {
        std::cerr << "decode error: " << e.what() << " (activation " << e.offending_value
                  << " at position " << e.position << ")\n";
        return 1;
    }
    return 2;
}

} // namespace shortcut
