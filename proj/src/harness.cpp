#include "shortcut/harness.hpp"

#include <atomic>
#include <chrono>
#include <mutex>
#include <thread>

namespace shortcut {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Symbol-index map from the automaton's alphabet into the net's encoder order.
std::vector<int> symbol_bridge(const Semiautomaton& a, const TransformerNet& net) {
    std::vector<int> map(a.num_symbols());
    for (int s = 0; s < a.num_symbols(); ++s) map[s] = net.symbol_index(a.alphabet[s]);
    return map;
}

struct TrialOutcome {
    std::uint64_t mismatches = 0;
    std::optional<Mismatch> first;
    double max_decode = 0.0;
    double max_ws = 0.0;
    bool ws_ok = true;
    double oracle_s = 0.0;
    double net_s = 0.0;
};

void run_one(const Semiautomaton& a, int q0, const TransformerNet& net,
             const std::vector<int>& bridge, const std::vector<int>& seq, std::uint64_t trial,
             TrialOutcome& out, const EvalCache* cache) {
    auto t0 = std::chrono::steady_clock::now();
    StateSequence expect = sequential_simulate(a, q0, seq);
    out.oracle_s += seconds_since(t0);
    std::vector<int> mapped(seq.size());
    for (std::size_t i = 0; i < seq.size(); ++i) mapped[i] = bridge[seq[i]];
    EvalStats stats;
    t0 = std::chrono::steady_clock::now();
    StateSequence got;
    bool decode_failed = false;
    int fail_pos = 0;
    try {
        got = net_evaluate(net, mapped, &stats, cache);
    } catch (const DecodeError& e) {
        decode_failed = true;
        fail_pos = e.position;
    }
    out.net_s += seconds_since(t0);
    out.max_decode = std::max(out.max_decode, stats.max_decode_deviation);
    out.max_ws = std::max(out.max_ws, stats.max_workspace_deviation);
    out.ws_ok = out.ws_ok && stats.workspace_ok;
    auto record = [&](int pos, int exp_state, int got_state) {
        ++out.mismatches;
        if (!out.first || trial < out.first->trial ||
            (trial == out.first->trial && pos < out.first->position)) {
            Mismatch m;
            m.trial = trial;
            m.position = pos;
            m.expected = exp_state;
            m.got = got_state;
            m.input = seq;
            out.first = m;
        }
    };
    if (decode_failed) {
        record(fail_pos, fail_pos < static_cast<int>(expect.states.size())
                             ? expect.states[fail_pos]
                             : -1,
               -1);
        return;
    }
    for (std::size_t i = 0; i < expect.states.size(); ++i) {
        if (got.states[i] != expect.states[i]) {
            record(static_cast<int>(i), expect.states[i], got.states[i]);
            break;  // count one mismatch per trial, at its first position
        }
    }
}

void merge(TrialOutcome& into, const TrialOutcome& from) {
    into.mismatches += from.mismatches;
    if (from.first) {
        if (!into.first || from.first->trial < into.first->trial) into.first = from.first;
    }
    into.max_decode = std::max(into.max_decode, from.max_decode);
    into.max_ws = std::max(into.max_ws, from.max_ws);
    into.ws_ok = into.ws_ok && from.ws_ok;
    into.oracle_s += from.oracle_s;
    into.net_s += from.net_s;
}

} // namespace

VerificationReport differential_test(const Semiautomaton& a, int q0, const TransformerNet& net,
                                     int T, std::uint64_t trials, std::uint64_t seed,
                                     int threads) {
    a.validate();
    if (T > net.capacity) throw InputError("differential_test: T exceeds net capacity");
    auto bridge = symbol_bridge(a, net);
    if (threads <= 0) {
        threads = static_cast<int>(std::thread::hardware_concurrency());
        if (threads <= 0) threads = 1;
        threads = std::min<std::uint64_t>(threads, std::max<std::uint64_t>(trials, 1));
    }

    VerificationReport rep;
    rep.automaton = a.name;
    rep.construction = net.construction;
    rep.T = T;
    rep.trials = trials;
    rep.seed = seed;
    rep.threads = threads;
    rep.metrics_consistent = net.recompute_metrics() == net.metrics;
    EvalCache cache = build_eval_cache(net);

    std::vector<TrialOutcome> outcomes(threads);
    std::atomic<std::uint64_t> counter{0};
    auto worker = [&](int w) {
        TrialOutcome& out = outcomes[w];
        std::vector<int> seq(T);
        for (;;) {
            std::uint64_t i = counter.fetch_add(1);
            if (i >= trials) break;
            SplitMix64 rng(seed * 0x2545F4914F6CDD1DULL + i);
            for (int t = 0; t < T; ++t) seq[t] = rng.below(a.num_symbols());
            run_one(a, q0, net, bridge, seq, i, out, &cache);
        }
    };
    if (threads == 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < threads; ++w) pool.emplace_back(worker, w);
        for (auto& th : pool) th.join();
    }
    TrialOutcome total;
    for (const auto& o : outcomes) merge(total, o);
    rep.mismatches = total.mismatches;
    rep.first_mismatch = total.first;
    rep.max_decode_deviation = total.max_decode;
    rep.max_workspace_deviation = total.max_ws;
    rep.workspace_ok = total.ws_ok;
    rep.oracle_seconds = total.oracle_s;
    rep.net_seconds = total.net_s;
    return rep;
}

VerificationReport exhaustive_test(const Semiautomaton& a, int q0, const TransformerNet& net,
                                   int T, std::uint64_t cap) {
    a.validate();
    if (T > net.capacity) throw InputError("exhaustive_test: T exceeds net capacity");
    VerificationReport rep;
    rep.automaton = a.name;
    rep.construction = net.construction;
    rep.T = T;
    rep.exhaustive = true;
    rep.metrics_consistent = net.recompute_metrics() == net.metrics;
    if (T == 0) return rep;  // vacuous pass

    double total_d = std::pow(static_cast<double>(a.num_symbols()), T);
    if (total_d > static_cast<double>(cap))
        throw ResourceError("exhaustive_test: |Sigma|^T = " + std::to_string(total_d) +
                            " exceeds the cap; use --trials " + std::to_string(cap) +
                            " with a seed instead");
    std::uint64_t total = static_cast<std::uint64_t>(total_d);
    rep.trials = total;
    auto bridge = symbol_bridge(a, net);
    EvalCache cache = build_eval_cache(net);
    TrialOutcome out;
    std::vector<int> seq(T, 0);
    for (std::uint64_t i = 0; i < total; ++i) {
        run_one(a, q0, net, bridge, seq, i, out, &cache);
        int k = T - 1;
        while (k >= 0 && ++seq[k] == a.num_symbols()) seq[k--] = 0;
    }
    rep.mismatches = out.mismatches;
    rep.first_mismatch = out.first;
    rep.max_decode_deviation = out.max_decode;
    rep.max_workspace_deviation = out.max_ws;
    rep.workspace_ok = out.ws_ok;
    rep.oracle_seconds = out.oracle_s;
    rep.net_seconds = out.net_s;
    return rep;
}

nlohmann::ordered_json VerificationReport::to_json(bool with_timings) const {
    nlohmann::ordered_json j;
    j["automaton"] = automaton;
    j["construction"] = construction;
    j["T"] = T;
    j["trials"] = trials;
    j["exhaustive"] = exhaustive;
    j["seed"] = seed;
    j["mismatches"] = mismatches;
    if (first_mismatch) {
        j["first_mismatch"] = {{"trial", first_mismatch->trial},
                               {"position", first_mismatch->position},
                               {"expected", first_mismatch->expected},
                               {"got", first_mismatch->got},
                               {"input", first_mismatch->input}};
    } else {
        j["first_mismatch"] = nullptr;
    }
    j["max_decode_deviation"] = max_decode_deviation;
    j["max_workspace_deviation"] = max_workspace_deviation;
    j["workspace_ok"] = workspace_ok;
    j["margin_budget"] = margin_budget;
    j["metrics_consistent"] = metrics_consistent;
    j["pass"] = pass();
    if (with_timings) {
        j["oracle_seconds"] = oracle_seconds;
        j["net_seconds"] = net_seconds;
        j["threads"] = threads;
    }
    return j;
}

BenchResult bench(const Semiautomaton& a, int q0, const TransformerNet& net,
                  const std::vector<int>& t_sweep, int reps, std::uint64_t seed) {
    a.validate();
    BenchResult res;
    auto bridge = symbol_bridge(a, net);
    for (int T : t_sweep) {
        if (T > net.capacity) throw InputError("bench: T exceeds net capacity");
        BenchResult::Row row;
        row.T = T;
        row.sequential_steps = T;
        row.layer_steps = static_cast<int>(net.layers.size());
        SplitMix64 rng(seed);
        EvalCache cache = build_eval_cache(net);
        std::vector<int> seq(T), mapped(T);
        double osum = 0.0, nsum = 0.0;
        for (int r = 0; r < reps; ++r) {
            for (int t = 0; t < T; ++t) seq[t] = rng.below(a.num_symbols());
            for (int t = 0; t < T; ++t) mapped[t] = bridge[seq[t]];
            auto t0 = std::chrono::steady_clock::now();
            volatile int sink = sequential_simulate(a, q0, seq).states.back();
            osum += seconds_since(t0);
            t0 = std::chrono::steady_clock::now();
            sink = net_evaluate(net, mapped, nullptr, &cache).states.back();
            (void)sink;
            nsum += seconds_since(t0);
        }
        row.oracle_seconds_per_seq = osum / reps;
        row.net_seconds_per_seq = nsum / reps;
        res.rows.push_back(row);
    }
    return res;
}

nlohmann::ordered_json BenchResult::to_json() const {
    nlohmann::ordered_json j;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& r : rows)
        arr.push_back({{"T", r.T},
                       {"sequential_steps", r.sequential_steps},
                       {"layer_steps", r.layer_steps},
                       {"oracle_seconds_per_seq", r.oracle_seconds_per_seq},
                       {"net_seconds_per_seq", r.net_seconds_per_seq}});
    j["rows"] = std::move(arr);
    j["threads"] = threads;
    return j;
}

} // namespace shortcut
