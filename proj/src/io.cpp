#include "qcsp/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "qcsp/model.hpp"

namespace qcsp {

namespace {

// Strips comments, splits into whitespace tokens, remembers source lines.
struct Tok {
    std::string text;
    int line;
};

std::vector<Tok> tokenize(std::istream& in) {
    std::vector<Tok> toks;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
        std::istringstream ls(line);
        std::string t;
        while (ls >> t) toks.push_back({t, lineno});
    }
    return toks;
}

class TokStream {
public:
    explicit TokStream(std::istream& in) : toks_(tokenize(in)) {}
    bool done() const { return pos_ >= toks_.size(); }
    int line() const {
        if (pos_ < toks_.size()) return toks_[pos_].line;
        return toks_.empty() ? 0 : toks_.back().line;
    }
    const std::string& peek() const {
        if (done()) throw ParseError(line(), "unexpected end of file");
        return toks_[pos_].text;
    }
    std::string word() {
        const std::string& s = peek();
        ++pos_;
        return s;
    }
    long long integer(const char* what) {
        std::string s = word();
        try {
            size_t used = 0;
            long long v = std::stoll(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw ParseError(toks_[pos_ - 1].line,
                             std::string("expected ") + what + ", got '" + s + "'");
        }
    }

private:
    std::vector<Tok> toks_;
    size_t pos_ = 0;
};

int int_in(TokStream& ts, const char* what, long long lo, long long hi) {
    int line = ts.line();
    long long v = ts.integer(what);
    if (v < lo || v > hi)
        throw ParseError(line, std::string(what) + " " + std::to_string(v) + " out of range [" +
                                   std::to_string(lo) + "," + std::to_string(hi) + "]");
    return static_cast<int>(v);
}

} // namespace

Instance parse_instance(std::istream& in, const std::string& name) {
    TokStream ts(in);
    if (ts.done()) throw ParseError(0, "empty instance file");
    int at = ts.line();
    if (ts.word() != "QCSP") throw ParseError(at, "expected 'QCSP' magic");
    at = ts.line();
    if (ts.integer("format version") != 1) throw ParseError(at, "unsupported format version");

    Instance inst;
    inst.name = name;
    const int n = int_in(ts, "task count", 0, 62); // routing search uses 64-bit task masks
    const int q = int_in(ts, "crane count", 1, 16);
    inst.bays = int_in(ts, "bay count", 1, 100000);
    inst.safety = int_in(ts, "safety margin", 0, 100000);
    at = ts.line();
    inst.travel = ts.integer("travel time");
    if (inst.travel < 0) throw ParseError(at, "negative travel time");

    inst.tasks.resize(static_cast<size_t>(n));
    inst.cranes.resize(static_cast<size_t>(q));
    std::vector<bool> task_seen(static_cast<size_t>(n) + 1, false);
    std::vector<bool> crane_seen(static_cast<size_t>(q) + 1, false);
    std::vector<std::pair<int, int>> nsim_listed;
    std::vector<int> nsim_lines;

    while (!ts.done()) {
        int at = ts.line();
        std::string kw = ts.word();
        if (kw == "TASK") {
            int id = int_in(ts, "task id", 1, n);
            if (task_seen[static_cast<size_t>(id)]) throw ParseError(at, "duplicate task id");
            task_seen[static_cast<size_t>(id)] = true;
            Task& t = inst.tasks[static_cast<size_t>(id) - 1];
            t.id = id;
            t.bay = int_in(ts, "task bay", 1, inst.bays);
            t.p = ts.integer("processing time");
            if (t.p < 0) throw ParseError(at, "negative processing time");
        } else if (kw == "CRANE") {
            int id = int_in(ts, "crane id", 1, q);
            if (crane_seen[static_cast<size_t>(id)]) throw ParseError(at, "duplicate crane id");
            crane_seen[static_cast<size_t>(id)] = true;
            Crane& c = inst.cranes[static_cast<size_t>(id) - 1];
            c.id = id;
            c.ready = ts.integer("ready time");
            if (c.ready < 0) throw ParseError(at, "negative ready time");
            c.start_bay = int_in(ts, "start bay", 0, inst.bays);
            c.final_bay = int_in(ts, "final bay", 0, inst.bays);
        } else if (kw == "PREC") {
            int i = int_in(ts, "task id", 1, n);
            int j = int_in(ts, "task id", 1, n);
            if (i == j) throw ParseError(at, "precedence of a task with itself");
            if (std::find(inst.prec.begin(), inst.prec.end(), std::make_pair(i, j)) !=
                inst.prec.end())
                throw ParseError(at, "duplicate precedence pair");
            inst.prec.emplace_back(i, j);
        } else if (kw == "NSIM") {
            int i = int_in(ts, "task id", 1, n);
            int j = int_in(ts, "task id", 1, n);
            if (i == j) throw ParseError(at, "non-simultaneity of a task with itself");
            auto pr = std::minmax(i, j);
            if (std::find(nsim_listed.begin(), nsim_listed.end(),
                          std::make_pair(pr.first, pr.second)) != nsim_listed.end())
                throw ParseError(at, "duplicate non-simultaneity pair");
            nsim_listed.emplace_back(pr.first, pr.second);
            nsim_lines.push_back(at);
        } else {
            throw ParseError(at, "unknown directive '" + kw + "'");
        }
    }

    for (int i = 1; i <= n; ++i)
        if (!task_seen[static_cast<size_t>(i)])
            throw ParseError(0, "missing TASK line for id " + std::to_string(i));
    for (int k = 1; k <= q; ++k)
        if (!crane_seen[static_cast<size_t>(k)])
            throw ParseError(0, "missing CRANE line for id " + std::to_string(k));

    // Implied pairs must stay implicit so the canonical form is unique.
    for (size_t idx = 0; idx < nsim_listed.size(); ++idx) {
        auto [i, j] = nsim_listed[idx];
        if (inst.task(i).bay == inst.task(j).bay)
            throw ParseError(nsim_lines[idx], "NSIM pair " + std::to_string(i) + "," +
                                                  std::to_string(j) +
                                                  " is implied (same bay); do not list it");
        if (std::find(inst.prec.begin(), inst.prec.end(), std::make_pair(i, j)) !=
                inst.prec.end() ||
            std::find(inst.prec.begin(), inst.prec.end(), std::make_pair(j, i)) !=
                inst.prec.end())
            throw ParseError(nsim_lines[idx], "NSIM pair " + std::to_string(i) + "," +
                                                  std::to_string(j) +
                                                  " is implied (precedence); do not list it");
    }
    inst.nonsim = std::move(nsim_listed);

    try {
        normalize(inst);
    } catch (const Error& e) {
        throw ParseError(0, e.what());
    }
    return inst;
}

Instance parse_instance_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open " + path);
    std::string name = path;
    if (auto pos = name.find_last_of("/\\"); pos != std::string::npos) name.erase(0, pos + 1);
    if (auto pos = name.rfind('.'); pos != std::string::npos && pos > 0) name.erase(pos);
    return parse_instance(f, name);
}

std::string write_instance(const Instance& inst) {
    std::ostringstream out;
    out << "QCSP 1\n";
    out << inst.n() << ' ' << inst.q() << ' ' << inst.bays << ' ' << inst.safety << ' '
        << inst.travel << '\n';
    for (const Task& t : inst.tasks) out << "TASK " << t.id << ' ' << t.bay << ' ' << t.p << '\n';
    for (const Crane& c : inst.cranes)
        out << "CRANE " << c.id << ' ' << c.ready << ' ' << c.start_bay << ' ' << c.final_bay
            << '\n';
    for (auto [i, j] : inst.prec) out << "PREC " << i << ' ' << j << '\n';

    std::set<std::pair<int, int>> implied;
    for (auto [i, j] : inst.prec) implied.insert(std::minmax(i, j));
    for (auto [i, j] : inst.nonsim) {
        if (inst.task(i).bay == inst.task(j).bay) continue;
        if (implied.count({i, j})) continue;
        out << "NSIM " << i << ' ' << j << '\n';
    }
    return out.str();
}

std::string write_routing(const Instance& inst, const Routing& r) {
    std::ostringstream out;
    for (int k = 1; k <= r.q(); ++k) {
        out << k << ':';
        for (int t : r.sequences[static_cast<size_t>(k)]) out << ' ' << t;
        out << " | " << r.route_cost[static_cast<size_t>(k)] << '\n';
    }
    out << "eta: " << r.eta << '\n';
    (void)inst;
    return out.str();
}

std::string write_schedule(const Instance& inst, const Routing& r, const Schedule& s) {
    std::ostringstream out;
    for (int i = 1; i <= inst.n(); ++i)
        out << i << ": crane " << r.crane_of(i) << ", " << s.start(inst, i) << ", "
            << s.completion[static_cast<size_t>(i)] << '\n';
    for (int k = 1; k <= inst.q(); ++k)
        out << "crane " << k << ": " << s.crane_completion[static_cast<size_t>(k)] << '\n';
    out << "W: " << s.makespan << '\n';
    return out.str();
}

std::string write_solution(const Instance& inst, const Solution& sol) {
    return "routing:\n" + write_routing(inst, sol.routing) + "schedule:\n" +
           write_schedule(inst, sol.routing, sol.schedule);
}

namespace {

// Line-oriented reader for solution files (token layout is too positional
// for the whitespace tokenizer).
std::vector<std::pair<int, std::string>> content_lines(std::istream& in) {
    std::vector<std::pair<int, std::string>> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        auto last = line.find_last_not_of(" \t\r");
        out.emplace_back(lineno, line.substr(first, last - first + 1));
    }
    return out;
}

} // namespace

Solution parse_solution(const Instance& inst, std::istream& in) {
    auto lines = content_lines(in);
    size_t at = 0;
    auto need = [&](const std::string& what) -> const std::pair<int, std::string>& {
        if (at >= lines.size()) throw ParseError(0, "unexpected end of solution: expected " + what);
        return lines[at];
    };

    if (need("'routing:'").second != "routing:")
        throw ParseError(lines[at].first, "expected 'routing:'");
    ++at;

    Solution sol;
    sol.routing = Routing(inst.q());
    for (int k = 1; k <= inst.q(); ++k) {
        auto [lineno, text] = need("routing line for crane " + std::to_string(k));
        ++at;
        std::istringstream ls(text);
        int kk = 0;
        char colon = 0;
        if (!(ls >> kk >> colon) || colon != ':' || kk != k)
            throw ParseError(lineno, "expected '" + std::to_string(k) + ": ...'");
        std::vector<int> seq;
        std::string tok;
        bool saw_bar = false;
        Time listed_cost = -1;
        while (ls >> tok) {
            if (tok == "|") {
                if (!(ls >> listed_cost)) throw ParseError(lineno, "missing route cost after '|'");
                saw_bar = true;
                break;
            }
            try {
                seq.push_back(std::stoi(tok));
            } catch (const std::exception&) {
                throw ParseError(lineno, "bad task id '" + tok + "'");
            }
            if (seq.back() < 1 || seq.back() > inst.n())
                throw ParseError(lineno, "unknown task id " + std::to_string(seq.back()));
        }
        if (!saw_bar) throw ParseError(lineno, "missing '| cost'");
        Time actual = route_cost(inst, k, seq);
        if (listed_cost != actual)
            throw ParseError(lineno, "route cost " + std::to_string(listed_cost) +
                                         " does not match sequence (expected " +
                                         std::to_string(actual) + ")");
        sol.routing.sequences[static_cast<size_t>(k)] = std::move(seq);
        sol.routing.route_cost[static_cast<size_t>(k)] = actual;
        sol.routing.eta = std::max(sol.routing.eta, actual);
    }
    {
        auto [lineno, text] = need("'eta:'");
        ++at;
        std::istringstream ls(text);
        std::string kw;
        Time v = -1;
        if (!(ls >> kw >> v) || kw != "eta:") throw ParseError(lineno, "expected 'eta: <value>'");
        if (v != sol.routing.eta)
            throw ParseError(lineno, "eta " + std::to_string(v) + " does not match routes");
    }

    if (need("'schedule:'").second != "schedule:")
        throw ParseError(lines[at].first, "expected 'schedule:'");
    ++at;

    sol.schedule = Schedule(inst.n(), inst.q());
    for (int i = 1; i <= inst.n(); ++i) {
        auto [lineno, text] = need("schedule line for task " + std::to_string(i));
        ++at;
        std::istringstream ls(text);
        int id = 0, k = 0;
        char colon = 0;
        std::string kw;
        Time start = 0, comp = 0;
        if (!(ls >> id >> colon >> kw) || colon != ':' || kw != "crane")
            throw ParseError(lineno, "expected '<i>: crane <k>, <start>, <completion>'");
        std::string rest;
        std::getline(ls, rest);
        long long s_ll = 0, c_ll = 0;
        if (std::sscanf(rest.c_str(), " %d , %lld , %lld", &k, &s_ll, &c_ll) != 3)
            throw ParseError(lineno, "expected '<i>: crane <k>, <start>, <completion>'");
        start = s_ll;
        comp = c_ll;
        if (id != i) throw ParseError(lineno, "schedule lines must be ordered by task id");
        if (k != sol.routing.crane_of(i))
            throw ParseError(lineno, "crane " + std::to_string(k) +
                                         " does not match routing assignment");
        if (comp - start != inst.task(i).p)
            throw ParseError(lineno, "completion - start must equal processing time");
        sol.schedule.completion[static_cast<size_t>(i)] = comp;
    }
    for (int k = 1; k <= inst.q(); ++k) {
        auto [lineno, text] = need("crane completion line");
        ++at;
        std::istringstream ls(text);
        std::string kw;
        int id = 0;
        char colon = 0;
        Time v = 0;
        if (!(ls >> kw >> id >> colon >> v) || kw != "crane" || colon != ':' || id != k)
            throw ParseError(lineno, "expected 'crane " + std::to_string(k) + ": <completion>'");
        sol.schedule.crane_completion[static_cast<size_t>(k)] = v;
    }
    {
        auto [lineno, text] = need("'W:'");
        ++at;
        std::istringstream ls(text);
        std::string kw;
        Time v = 0;
        if (!(ls >> kw >> v) || kw != "W:") throw ParseError(lineno, "expected 'W: <value>'");
        sol.schedule.makespan = v;
    }
    if (at != lines.size()) throw ParseError(lines[at].first, "trailing content in solution file");
    return sol;
}

Solution parse_solution_file(const Instance& inst, const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open " + path);
    return parse_solution(inst, f);
}

namespace {

std::vector<Time> read_times(TokStream& ts, int count, const char* what) {
    std::vector<Time> out;
    out.reserve(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) out.push_back(ts.integer(what));
    return out;
}

Instance assemble(const std::string& name, int n, int q, int bays, Time t, int safety,
                  const std::vector<Time>& task_bays, const std::vector<Time>& task_p,
                  const std::vector<Time>& crane_l0, const std::vector<Time>& crane_r,
                  const std::vector<Time>& crane_lT,
                  const std::vector<std::pair<int, int>>& prec) {
    Instance inst;
    inst.name = name;
    inst.bays = bays;
    inst.travel = t;
    inst.safety = safety;
    for (int i = 1; i <= n; ++i)
        inst.tasks.push_back({i, static_cast<int>(task_bays[static_cast<size_t>(i) - 1]),
                              task_p[static_cast<size_t>(i) - 1]});
    // Crane ids follow rail order; re-sort by start bay in case the source
    // lists them differently.
    std::vector<size_t> order(static_cast<size_t>(q));
    for (size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return crane_l0[a] < crane_l0[b]; });
    for (int k = 1; k <= q; ++k) {
        size_t src = order[static_cast<size_t>(k) - 1];
        inst.cranes.push_back({k, crane_r[src], static_cast<int>(crane_l0[src]),
                               static_cast<int>(crane_lT[src])});
    }
    inst.prec = prec;
    normalize(inst);
    return inst;
}

} // namespace

// Layout rule (documented in io.hpp / README): after "n q [B]" come n bays,
// n processing times, q start bays; if any tokens remain, the next q are
// ready times and the rest are precedence pairs. B is detected by token
// count: the explicit-B reading is tried first and wins when it consumes the
// file exactly.
Instance convert_kim(std::istream& in, const std::string& name) {
    TokStream ts(in);
    const int n = int_in(ts, "task count", 0, 62);
    const int q = int_in(ts, "crane count", 1, 16);
    std::vector<Time> rest;
    while (!ts.done()) rest.push_back(ts.integer("value"));

    auto build = [&](bool explicit_b) -> Instance {
        size_t at = 0;
        int bays = 0;
        if (explicit_b) {
            if (rest.empty()) throw Error("missing bay count");
            bays = static_cast<int>(rest[at++]);
        }
        auto take = [&](int count, const char* what) {
            std::vector<Time> v;
            for (int i = 0; i < count; ++i) {
                if (at >= rest.size()) throw Error(std::string("missing ") + what);
                v.push_back(rest[at++]);
            }
            return v;
        };
        auto tb = take(n, "task bays");
        auto tp = take(n, "processing times");
        auto cl = take(q, "crane start bays");
        std::vector<Time> cr(static_cast<size_t>(q), 0);
        if (rest.size() - at > 0) cr = take(q, "ready times");
        if ((rest.size() - at) % 2 != 0) throw Error("dangling value at end of file");
        std::vector<std::pair<int, int>> prec;
        while (at < rest.size()) {
            int i = static_cast<int>(rest[at]);
            int j = static_cast<int>(rest[at + 1]);
            at += 2;
            prec.emplace_back(i, j);
        }
        if (!explicit_b) {
            for (Time b : tb) bays = std::max<int>(bays, static_cast<int>(b));
            for (Time b : cl) bays = std::max<int>(bays, static_cast<int>(b));
        }
        std::vector<Time> lT(static_cast<size_t>(q), 0);
        return assemble(name, n, q, bays, /*t=*/1, /*safety=*/1, tb, tp, cl, cr, lT, prec);
    };

    try {
        return build(true);
    } catch (const Error&) {
        return build(false);
    }
}

Instance convert_meisel(std::istream& in, const std::string& name) {
    TokStream ts(in);
    const int n = int_in(ts, "task count", 0, 62);
    const int q = int_in(ts, "crane count", 1, 16);
    const int bays = int_in(ts, "bay count", 1, 100000);
    const Time t = ts.integer("travel time");
    const int safety = int_in(ts, "safety margin", 0, 100000);
    auto tb = read_times(ts, n, "task bay");
    auto tp = read_times(ts, n, "processing time");
    auto cl = read_times(ts, q, "crane start bay");
    auto cr = read_times(ts, q, "crane ready time");
    auto lT = read_times(ts, q, "crane final bay");
    std::vector<std::pair<int, int>> prec;
    while (!ts.done()) {
        int i = int_in(ts, "task id", 1, n);
        int j = int_in(ts, "task id", 1, n);
        prec.emplace_back(i, j);
    }
    return assemble(name, n, q, bays, t, safety, tb, tp, cl, cr, lT, prec);
}

Instance convert_kim(const std::string& text, const std::string& name) {
    std::istringstream in(text);
    return convert_kim(in, name);
}

Instance convert_meisel(const std::string& text, const std::string& name) {
    std::istringstream in(text);
    return convert_meisel(in, name);
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open " + path + " for writing");
    f << content;
    if (!f) throw Error("write failed: " + path);
}

} // namespace qcsp
