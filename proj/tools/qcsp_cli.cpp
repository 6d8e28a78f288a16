#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qcsp/decomp.hpp"
#include "qcsp/io.hpp"
#include "qcsp/model.hpp"
#include "qcsp/oracle.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitTimeLimit = 2;
constexpr int kExitInputError = 3;
constexpr int kExitInvalid = 4;

// Default time limit in seconds from QCSP_TIME_LIMIT; -1 = unlimited.
double env_time_limit() {
    const char* v = std::getenv("QCSP_TIME_LIMIT");
    if (!v || !*v) return -1.0;
    try {
        return std::stod(v);
    } catch (...) {
        return -1.0;
    }
}

long long to_ms(double seconds) {
    if (seconds < 0) return -1;
    return static_cast<long long>(seconds * 1000.0);
}

int cmd_solve(const std::string& path, double time_limit, const std::string& algorithm,
              bool no_limits, const std::string& emit, bool no_timing) {
    qcsp::Instance inst;
    try {
        inst = qcsp::parse_instance_file(path);
    } catch (const qcsp::Error& e) {
        std::cerr << "error: " << path << ": " << e.what() << "\n";
        return kExitInputError;
    }

    if (algorithm == "oracle") {
        qcsp::OracleLimits limits;
        qcsp::SolveReport rep;
        try {
            qcsp::OracleResult res = qcsp::brute_force(inst, limits, !no_limits);
            rep.status = qcsp::SolveReport::Status::OPTIMAL;
            rep.lb = rep.ub = res.W;
            rep.have_solution = true;
            rep.best_routing = res.routing;
            rep.best_schedule = res.schedule;
            rep.master_nodes = res.routings_tried;
        } catch (const qcsp::Error& e) {
            std::cerr << "error: " << e.what() << "\n";
            return kExitInputError;
        }
        qcsp::write_report(std::cout, inst, rep, !no_timing);
        return kExitOk;
    }

    qcsp::DriverConfig cfg;
    cfg.time_limit_ms = to_ms(time_limit);
    cfg.enforce_limits = !no_limits;
    qcsp::SolveReport rep = qcsp::run(inst, cfg);

    if (emit == "text") {
        const char* status = rep.status == qcsp::SolveReport::Status::OPTIMAL ? "optimal"
                             : rep.status == qcsp::SolveReport::Status::TIME_LIMIT
                                 ? "time limit"
                                 : "infeasible input";
        std::cout << inst.name << ": " << status;
        if (rep.have_solution) std::cout << ", makespan " << rep.ub;
        std::cout << ", bounds [" << rep.lb << ", "
                  << (rep.ub >= qcsp::kInfTime ? std::string("inf") : std::to_string(rep.ub))
                  << "], " << rep.iterations << " iteration(s)";
        if (!no_timing) std::cout << ", " << rep.wall_ms << " ms";
        std::cout << "\n";
        if (!rep.error.empty()) std::cout << "reason: " << rep.error << "\n";
        if (rep.have_solution)
            std::cout << "routing:\n"
                      << qcsp::write_routing(inst, rep.best_routing) << "schedule:\n"
                      << qcsp::write_schedule(inst, rep.best_routing, rep.best_schedule);
    } else {
        qcsp::write_report(std::cout, inst, rep, !no_timing);
    }

    switch (rep.status) {
    case qcsp::SolveReport::Status::OPTIMAL: return kExitOk;
    case qcsp::SolveReport::Status::TIME_LIMIT: return kExitTimeLimit;
    case qcsp::SolveReport::Status::INFEASIBLE_INPUT: return kExitInputError;
    }
    return kExitInputError;
}

int cmd_validate(const std::string& instance_path, const std::string& solution_path,
                 bool no_limits) {
    qcsp::Instance inst;
    qcsp::Solution sol;
    try {
        inst = qcsp::parse_instance_file(instance_path);
        sol = qcsp::parse_solution_file(inst, solution_path);
    } catch (const qcsp::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInputError;
    }
    std::vector<qcsp::Violation> violations;
    try {
        violations = qcsp::validate_schedule(inst, sol.routing, sol.schedule, !no_limits);
    } catch (const qcsp::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInputError;
    }
    if (violations.empty()) {
        std::cout << "valid\n";
        return kExitOk;
    }
    for (const qcsp::Violation& v : violations) {
        std::cout << qcsp::to_string(v.kind);
        if (v.a) std::cout << " " << v.a;
        if (v.b) std::cout << " " << v.b;
        if (!v.detail.empty()) std::cout << ": " << v.detail;
        std::cout << "\n";
    }
    return kExitInvalid;
}

int cmd_convert(const std::string& path, const std::string& from, const std::string& out) {
    qcsp::Instance inst;
    try {
        if (from == "kim") inst = qcsp::convert_kim(qcsp::read_file(path), path);
        else if (from == "meisel") inst = qcsp::convert_meisel(qcsp::read_file(path), path);
        else inst = qcsp::parse_instance_file(path);
    } catch (const qcsp::Error& e) {
        std::cerr << "error: " << path << ": " << e.what() << "\n";
        return kExitInputError;
    }
    std::string text = qcsp::write_instance(inst);
    if (out.empty()) {
        std::cout << text;
    } else {
        qcsp::write_file(out, text);
    }
    return kExitOk;
}

int cmd_generate(const qcsp::GenParams& params, const std::string& out) {
    qcsp::Instance inst;
    try {
        inst = qcsp::generate(params);
    } catch (const qcsp::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInputError;
    }
    std::string text = qcsp::write_instance(inst);
    if (out.empty()) std::cout << text;
    else qcsp::write_file(out, text);
    return kExitOk;
}

int cmd_bench(const std::string& dir, double time_limit, bool no_timing) {
    namespace fs = std::filesystem;
    std::vector<fs::path> files;
    try {
        for (const auto& entry : fs::directory_iterator(dir))
            if (entry.is_regular_file()) files.push_back(entry.path());
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInputError;
    }
    std::sort(files.begin(), files.end());

    std::cout << "name status W lb ub iterations cuts";
    if (!no_timing) std::cout << " wall_ms";
    std::cout << "\n";
    for (const fs::path& f : files) {
        std::string name = f.filename().string();
        qcsp::Instance inst;
        try {
            inst = qcsp::parse_instance_file(f.string());
        } catch (const qcsp::Error& e) {
            std::cout << name << " ERROR " << e.what() << "\n";
            continue;
        }
        qcsp::DriverConfig cfg;
        cfg.time_limit_ms = to_ms(time_limit);
        qcsp::SolveReport rep = qcsp::run(inst, cfg);
        long long cuts = 0;
        for (long long c : rep.cuts_added) cuts += c;
        const char* status = rep.status == qcsp::SolveReport::Status::OPTIMAL ? "OPTIMAL"
                             : rep.status == qcsp::SolveReport::Status::TIME_LIMIT
                                 ? "TIME_LIMIT"
                                 : "INFEASIBLE_INPUT";
        auto num = [](qcsp::Time v) {
            return v >= qcsp::kInfTime ? std::string("inf") : std::to_string(v);
        };
        std::cout << name << " " << status << " "
                  << (rep.have_solution ? num(rep.ub) : "inf") << " " << num(rep.lb) << " "
                  << num(rep.ub) << " " << rep.iterations << " " << cuts;
        if (!no_timing) std::cout << " " << rep.wall_ms;
        std::cout << "\n";
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact quay crane scheduling: routing/scheduling decomposition solver"};
    app.require_subcommand(1);

    // solve
    std::string solve_path, algorithm = "decomp", emit = "structured";
    double time_limit = env_time_limit();
    bool no_limits = false, no_timing = false;
    CLI::App* solve = app.add_subcommand("solve", "solve one instance file");
    solve->add_option("path", solve_path, "instance file")->required();
    solve->add_option("--time-limit", time_limit, "seconds; negative = unlimited");
    solve->add_option("--algorithm", algorithm, "decomp|oracle")
        ->check(CLI::IsMember({"decomp", "oracle"}));
    solve->add_flag("--no-limits", no_limits, "let every crane serve every bay");
    solve->add_option("--emit", emit, "text|structured")
        ->check(CLI::IsMember({"text", "structured"}));
    solve->add_flag("--no-timing", no_timing, "omit wall-clock fields");

    // validate
    std::string val_instance, val_solution;
    bool val_no_limits = false;
    CLI::App* validate = app.add_subcommand("validate", "check a solution file");
    validate->add_option("instance", val_instance, "instance file")->required();
    validate->add_option("solution", val_solution, "solution file")->required();
    validate->add_flag("--no-limits", val_no_limits, "skip crane range checks");

    // convert
    std::string conv_path, conv_from = "canonical", conv_out;
    CLI::App* convert = app.add_subcommand("convert", "rewrite an instance in canonical form");
    convert->add_option("path", conv_path, "source file")->required();
    convert->add_option("--from", conv_from, "kim|meisel|canonical")
        ->check(CLI::IsMember({"kim", "meisel", "canonical"}));
    convert->add_option("-o,--output", conv_out, "write here instead of stdout");

    // generate
    qcsp::GenParams params;
    std::string gen_out;
    CLI::App* generate = app.add_subcommand("generate", "emit a random instance");
    generate->add_option("--seed", params.seed, "rng seed");
    generate->add_option("--n-min", params.n_min);
    generate->add_option("--n-max", params.n_max);
    generate->add_option("--q-min", params.q_min);
    generate->add_option("--q-max", params.q_max);
    generate->add_option("--bays-min", params.bays_min);
    generate->add_option("--bays-max", params.bays_max);
    generate->add_option("--safety-min", params.safety_min);
    generate->add_option("--safety-max", params.safety_max);
    generate->add_option("--travel-min", params.travel_min);
    generate->add_option("--travel-max", params.travel_max);
    generate->add_option("--p-min", params.p_min);
    generate->add_option("--p-max", params.p_max);
    generate->add_option("--ready-min", params.ready_min);
    generate->add_option("--ready-max", params.ready_max);
    generate->add_option("--ratio", params.tasks_per_bay, "tasks per occupied bay");
    generate->add_option("--density", params.prec_density, "kept fraction of derived pairs");
    generate->add_option("-o,--output", gen_out, "write here instead of stdout");

    // bench
    std::string bench_dir;
    double bench_limit = env_time_limit();
    bool bench_no_timing = false;
    CLI::App* bench = app.add_subcommand("bench", "solve every instance in a directory");
    bench->add_option("dir", bench_dir, "directory of canonical instance files")->required();
    bench->add_option("--time-limit", bench_limit, "seconds per instance");
    bench->add_flag("--no-timing", bench_no_timing, "omit wall-clock column");

    CLI11_PARSE(app, argc, argv);

    if (solve->parsed())
        return cmd_solve(solve_path, time_limit, algorithm, no_limits, emit, no_timing);
    if (validate->parsed()) return cmd_validate(val_instance, val_solution, val_no_limits);
    if (convert->parsed()) return cmd_convert(conv_path, conv_from, conv_out);
    if (generate->parsed()) return cmd_generate(params, gen_out);
    if (bench->parsed()) return cmd_bench(bench_dir, bench_limit, bench_no_timing);
    return kExitInputError;
}
