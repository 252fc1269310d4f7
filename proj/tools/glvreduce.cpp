// glvreduce: simulate generalized Lotka-Volterra systems, build and solve
// exact reduced models (memory method), check algebraic-method residuals,
// and analyze which reductions are possible for a given sparsity pattern.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "glvred/glvred.hpp"

namespace {

enum ExitCode : int {
    exit_ok = 0,
    exit_fail = 1,         // command ran, tolerances not met
    exit_usage = 2,        // bad flags/arguments, search budget exceeded
    exit_parse = 3,        // malformed input document
    exit_validation = 4,   // model invariants violated
    exit_infeasible = 5,   // requested reduction impossible for this model
    exit_convergence = 6,  // integration/fixed-point failure
    exit_io = 7,           // filesystem failure
};

int log_level() {
    static const int level = [] {
        const char* env = std::getenv("GLVREDUCE_LOG");
        if (!env) return 1;
        const std::string v(env);
        if (v == "quiet") return 0;
        if (v == "debug") return 2;
        return 1;
    }();
    return level;
}

std::mutex log_mutex;

void log_info(const std::string& msg) {
    if (log_level() >= 1) {
        std::scoped_lock lock(log_mutex);
        std::cerr << "glvreduce: " << msg << "\n";
    }
}

void log_debug(const std::string& msg) {
    if (log_level() >= 2) {
        std::scoped_lock lock(log_mutex);
        std::cerr << "glvreduce[debug]: " << msg << "\n";
    }
}

std::vector<int> parse_retained(const std::vector<int>& one_based, int S) {
    std::vector<int> out;
    for (int i : one_based) {
        if (i < 1 || i > S)
            throw glvred::ContractViolation("retained species " + std::to_string(i) +
                                            " out of range 1.." + std::to_string(S));
        out.push_back(i - 1);
    }
    return out;
}

glvred::IndexPair parse_entry(const std::string& text) {
    const auto comma = text.find(',');
    if (comma == std::string::npos)
        throw glvred::ContractViolation("expected 'row,col', got '" + text + "'");
    try {
        return {std::stoi(text.substr(0, comma)), std::stoi(text.substr(comma + 1))};
    } catch (const std::exception&) {
        throw glvred::ContractViolation("expected 'row,col', got '" + text + "'");
    }
}

/// Applies --zero modifications and returns the audit list for reports.
std::vector<glvred::IndexPair> apply_zeroed_entries(glvred::GlvModel& model,
                                                    const std::vector<std::string>& entries) {
    std::vector<glvred::IndexPair> audit;
    for (const auto& text : entries) {
        const auto pair = parse_entry(text);
        const int S = model.dimension();
        if (pair.row < 1 || pair.row > S || pair.col < 1 || pair.col > S)
            throw glvred::ContractViolation("--zero entry (" + std::to_string(pair.row) + "," +
                                            std::to_string(pair.col) + ") out of range");
        model.a(pair.row - 1, pair.col - 1) = 0.0;
        audit.push_back(pair);
        log_info("zeroed interaction entry A[" + std::to_string(pair.row) + "][" +
                 std::to_string(pair.col) + "]");
    }
    return audit;
}

glvred::GlvModel load_model_file(const std::string& path) {
    return glvred::load_model(glvred::read_file(path));
}

int classify_error(const std::exception& e) {
    if (dynamic_cast<const glvred::ValidationError*>(&e)) return exit_validation;
    if (dynamic_cast<const glvred::ParseError*>(&e)) return exit_parse;
    if (dynamic_cast<const glvred::IntegrityError*>(&e)) return exit_parse;
    if (dynamic_cast<const glvred::InfeasibleError*>(&e)) return exit_infeasible;
    if (dynamic_cast<const glvred::BudgetError*>(&e)) return exit_usage;
    if (dynamic_cast<const glvred::ConvergenceError*>(&e)) return exit_convergence;
    if (dynamic_cast<const glvred::PositivityError*>(&e)) return exit_convergence;
    if (dynamic_cast<const glvred::SingularityError*>(&e)) return exit_convergence;
    if (dynamic_cast<const glvred::IoError*>(&e)) return exit_io;
    return exit_usage;  // contract violations, range errors, anything else
}

void print_plan_violations(const glvred::EliminationPlan& plan) {
    for (const auto& v : plan.violations) {
        if (v.kind == glvred::PlanViolation::Kind::nonzero_required)
            std::cerr << "  required zero A[" << v.original.row << "][" << v.original.col
                      << "] is " << glvred::double_to_string(v.value) << "\n";
        else
            std::cerr << "  pivot A[" << v.original.row << "][" << v.original.col
                      << "] is zero\n";
    }
}

struct VerifyJob {
    std::string model_path;
    std::string report_path;
};

int run_verify_one(const VerifyJob& job, const glvred::VerifySettings& base,
                   const std::vector<std::string>& zero_entries, const std::string& method) {
    glvred::GlvModel model = load_model_file(job.model_path);
    glvred::VerifySettings settings = base;
    settings.model_path = job.model_path;
    settings.zeroed = apply_zeroed_entries(model, zero_entries);

    const auto t0 = std::chrono::steady_clock::now();
    glvred::VerificationReport report;
    if (method == "memory") {
        auto result = glvred::run_memory_verification(model, settings);
        if (!result.feasible) {
            std::cerr << "glvreduce: reduction infeasible for " << job.model_path
                      << "; closest ordering violates:\n";
            print_plan_violations(result.reducibility.plan);
            glvred::atomic_write_file(job.report_path,
                                      glvred::reducibility_report_to_json(result.reducibility).dump(2) +
                                          "\n");
            return exit_infeasible;
        }
        report = result.report;
        log_debug("max fixed-point iterations: " +
                  std::to_string(result.reduced_trajectory.max_fp_iterations));
    } else {
        if (!settings.retained.empty() && settings.retained != std::vector<int>{0})
            throw glvred::ContractViolation("the algebraic mode retains species 1");
        auto result = glvred::run_algebraic_verification(model, settings);
        report = result.report;
        glvred::atomic_write_file(job.report_path + ".residuals.json",
                                  glvred::residual_report_to_json(result.residuals).dump(2) + "\n");
    }
    glvred::atomic_write_file(job.report_path,
                              glvred::verification_report_to_json(report).dump(2) + "\n");
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log_info(job.model_path + ": " + (report.pass ? "pass" : "FAIL") + ", report " +
             job.report_path + " (" + glvred::double_to_string(seconds) + " s)");
    return report.pass ? exit_ok : exit_fail;
}

std::string format_rho(const glvred::Rational& r) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g", r.value());
    return r.str() + " ≈ " + buf;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact model reduction of generalized Lotka-Volterra systems"};
    app.require_subcommand(1);
    app.footer(
        "Exit codes:\n"
        "  0  success / verification passed\n"
        "  1  verification ran but tolerances were not met\n"
        "  2  usage error (bad arguments, dt > t_end, search budget exceeded)\n"
        "  3  input document could not be parsed or is inconsistent\n"
        "  4  model validation failed\n"
        "  5  requested reduction is infeasible for this model\n"
        "  6  integration or fixed-point convergence failure\n"
        "  7  I/O failure\n"
        "\n"
        "Species indices are 1-based everywhere. Set GLVREDUCE_LOG=quiet|info|debug\n"
        "to control diagnostics on stderr.");

    int exit_code = exit_ok;

    // --- simulate ---------------------------------------------------------
    auto* simulate = app.add_subcommand("simulate", "Integrate the detailed system, write CSV");
    {
        struct SimulateOpts {
            std::string model, out;
            double t_end = 10.0, dt = 1e-3;
            std::vector<std::string> zero;
        };
        auto opts = std::make_shared<SimulateOpts>();
        simulate->add_option("--model", opts->model, "model JSON file")->required();
        simulate->add_option("--out", opts->out, "output trajectory CSV")->required();
        simulate->add_option("--t-end", opts->t_end, "final time (default 10)");
        simulate->add_option("--dt", opts->dt, "step size (default 1e-3)");
        simulate->add_option("--zero", opts->zero, "zero out interaction entry 'row,col' (repeatable)");
        simulate->callback([opts]() {
            glvred::GlvModel model = load_model_file(opts->model);
            apply_zeroed_entries(model, opts->zero);
            auto traj = glvred::integrate_fixed(model, opts->t_end, opts->dt);
            glvred::atomic_write_file(opts->out, glvred::trajectory_to_csv(traj));
            log_info("wrote " + opts->out + " (" + std::to_string(traj.size()) + " rows)");
        });
    }

    // --- verify -----------------------------------------------------------
    auto* verify = app.add_subcommand(
        "verify", "Check a reduction against the detailed system, write a report");
    {
        struct VerifyOpts {
            std::vector<std::string> models;
            std::string lorenz;
            std::vector<int> retain;
            std::string method = "memory";
            std::string report = "report.json";
            std::string report_dir;
            double t_end = 10.0, dt = 1e-3;
            double tol_retained = 1e-4, tol_reconstructed = 1e-4, tol_residual = 1e-10;
            double lorenz_tol = 1e-9;
            std::string lorenz_x0 = "1,1,1";
            double fp_tol = 1e-12;
            int fp_max_iter = 50;
            int budget = 8;
            bool heuristic = false;
            bool solve_demo = false;
            int jobs = 1;
            std::vector<std::string> zero;
        };
        auto opts = std::make_shared<VerifyOpts>();
        verify->add_option("--model", opts->models, "model JSON file(s); more than one runs in batch");
        verify->add_option("--lorenz", opts->lorenz,
                           "check the third-order Lorenz identity for 'alpha,beta,gamma' instead of a model");
        verify->add_option("--retain", opts->retain, "retained species (1-based)");
        verify->add_option("--method", opts->method, "memory | algebraic (default memory)")
            ->check(CLI::IsMember({"memory", "algebraic"}));
        verify->add_option("--report", opts->report, "report JSON path (default report.json)");
        verify->add_option("--report-dir", opts->report_dir, "directory for batch reports");
        verify->add_option("--t-end", opts->t_end, "final time (default 10)");
        verify->add_option("--dt", opts->dt, "step size (default 1e-3)");
        verify->add_option("--tol-retained", opts->tol_retained,
                           "L-inf relative tolerance, retained species (default 1e-4)");
        verify->add_option("--tol-reconstructed", opts->tol_reconstructed,
                           "L-inf relative tolerance, reconstructed species (default 1e-4)");
        verify->add_option("--tol-residual", opts->tol_residual,
                           "relative residual tolerance, algebraic mode (default 1e-10)");
        verify->add_option("--lorenz-tol", opts->lorenz_tol,
                           "relative residual tolerance, Lorenz mode (default 1e-9)");
        verify->add_option("--lorenz-x0", opts->lorenz_x0, "Lorenz initial state 'x,y,z' (default 1,1,1)");
        verify->add_option("--fp-tol", opts->fp_tol, "fixed-point tolerance on chi (default 1e-12)");
        verify->add_option("--fp-max-iter", opts->fp_max_iter, "fixed-point iteration budget (default 50)");
        verify->add_option("--budget", opts->budget, "exhaustive search limit on eliminated count (default 8)");
        verify->add_flag("--heuristic", opts->heuristic, "allow the greedy (incomplete) ordering search");
        verify->add_flag("--algebraic-solve", opts->solve_demo,
                         "also integrate the first-order pair recovered from the second-order form");
        verify->add_option("--jobs", opts->jobs, "parallel verifications in batch mode (default 1)");
        verify->add_option("--zero", opts->zero, "zero out interaction entry 'row,col' (repeatable)");
        verify->callback([opts, &exit_code]() {
            if (!opts->lorenz.empty()) {
                glvred::LorenzVerifySettings settings;
                std::vector<double> params, x0;
                for (const auto* text : {&opts->lorenz, &opts->lorenz_x0}) {
                    auto& dst = text == &opts->lorenz ? params : x0;
                    std::string item;
                    for (char c : *text + ",")
                        if (c == ',') {
                            dst.push_back(glvred::string_to_double(item));
                            item.clear();
                        } else item += c;
                }
                if (params.size() != 3 || x0.size() != 3)
                    throw glvred::ContractViolation("--lorenz and --lorenz-x0 take three numbers");
                settings.params = {params[0], params[1], params[2]};
                settings.x0 = {x0[0], x0[1], x0[2]};
                settings.t_end = opts->t_end;
                settings.dt = opts->dt;
                settings.tolerance = opts->lorenz_tol;
                auto result = glvred::run_lorenz_verification(settings);
                glvred::atomic_write_file(
                    opts->report, glvred::verification_report_to_json(result.report).dump(2) + "\n");
                const std::string residual_path = opts->report + ".residuals.json";
                glvred::atomic_write_file(
                    residual_path, glvred::residual_report_to_json(result.residuals).dump(2) + "\n");
                log_info(std::string("lorenz: ") + (result.report.pass ? "pass" : "FAIL") +
                         ", report " + opts->report + ", residual sweep " + residual_path);
                exit_code = result.report.pass ? exit_ok : exit_fail;
                return;
            }
            if (opts->models.empty())
                throw glvred::ContractViolation("verify needs --model or --lorenz");

            glvred::VerifySettings base;
            base.t_end = opts->t_end;
            base.dt = opts->dt;
            base.fp.tolerance = opts->fp_tol;
            base.fp.max_iterations = opts->fp_max_iter;
            base.tol.retained = opts->tol_retained;
            base.tol.reconstructed = opts->tol_reconstructed;
            base.tol.residual = opts->tol_residual;
            base.search.exhaustive_limit = opts->budget;
            base.search.heuristic =
                opts->heuristic ? glvred::SearchHeuristic::greedy : glvred::SearchHeuristic::none;
            base.algebraic_solve_demo = opts->solve_demo;

            std::vector<VerifyJob> jobs;
            if (opts->models.size() == 1) {
                jobs.push_back({opts->models[0], opts->report});
            } else {
                if (opts->report_dir.empty())
                    throw glvred::ContractViolation("batch verify needs --report-dir");
                std::filesystem::create_directories(opts->report_dir);
                for (const auto& path : opts->models) {
                    const auto stem = std::filesystem::path(path).stem().string();
                    jobs.push_back(
                        {path, (std::filesystem::path(opts->report_dir) / (stem + ".report.json"))
                                   .string()});
                }
            }

            // Retained indices are validated per model (dimensions may differ).
            std::vector<int> worst(jobs.size(), exit_ok);
            std::atomic<std::size_t> next{0};
            auto worker = [&]() {
                while (true) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= jobs.size()) break;
                    try {
                        glvred::GlvModel probe = load_model_file(jobs[i].model_path);
                        glvred::VerifySettings settings = base;
                        settings.retained = opts->retain.empty()
                                                ? std::vector<int>{0}
                                                : parse_retained(opts->retain, probe.dimension());
                        worst[i] = run_verify_one(jobs[i], settings, opts->zero, opts->method);
                    } catch (const std::exception& e) {
                        if (jobs.size() == 1) throw;  // single mode: map via main()'s handler
                        std::scoped_lock lock(log_mutex);
                        std::cerr << "glvreduce: " << jobs[i].model_path << ": " << e.what() << "\n";
                        worst[i] = classify_error(e);
                    }
                }
            };
            const int n_threads = std::max(1, std::min<int>(opts->jobs, static_cast<int>(jobs.size())));
            if (n_threads == 1) {
                worker();
            } else {
                std::vector<std::thread> pool;
                for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
                for (auto& th : pool) th.join();
            }
            exit_code = *std::max_element(worst.begin(), worst.end());
        });
    }

    // --- analyze ----------------------------------------------------------
    auto* analyze = app.add_subcommand("analyze", "Reducibility analysis for a retained set");
    {
        struct AnalyzeOpts {
            std::string model, out;
            std::vector<int> retain;
            int budget = 8;
            bool heuristic = false;
            std::vector<std::string> zero;
        };
        auto opts = std::make_shared<AnalyzeOpts>();
        analyze->add_option("--model", opts->model, "model JSON file")->required();
        analyze->add_option("--retain", opts->retain, "retained species (1-based)")->required();
        analyze->add_option("--out", opts->out, "write the reducibility report JSON here");
        analyze->add_option("--budget", opts->budget, "exhaustive search limit (default 8)");
        analyze->add_flag("--heuristic", opts->heuristic, "allow the greedy (incomplete) search");
        analyze->add_option("--zero", opts->zero, "zero out interaction entry 'row,col' (repeatable)");
        analyze->callback([opts]() {
            glvred::GlvModel model = load_model_file(opts->model);
            apply_zeroed_entries(model, opts->zero);
            glvred::SearchOptions search;
            search.exhaustive_limit = opts->budget;
            search.heuristic =
                opts->heuristic ? glvred::SearchHeuristic::greedy : glvred::SearchHeuristic::none;
            auto report =
                glvred::check_reducible(model, parse_retained(opts->retain, model.dimension()), search);
            const std::string text = glvred::reducibility_report_to_json(report).dump(2) + "\n";
            if (opts->out.empty()) std::cout << text;
            else {
                glvred::atomic_write_file(opts->out, text);
                log_info("wrote " + opts->out);
            }
            std::cout << "S=" << report.S << " s=" << report.s << " k=" << report.k
                      << " rho=" << format_rho(report.rho_exact)
                      << (report.feasible ? " feasible" : " infeasible")
                      << (report.exhaustive ? "" : " (heuristic, incomplete)") << "\n";
        });
    }

    // --- rho ----------------------------------------------------------------
    auto* rho_cmd = app.add_subcommand("rho", "Zeroed-fraction arithmetic and the limit curve");
    {
        struct RhoOpts {
            int S = 0, s = 0, curve = 0;
            double limit = -1.0;
            std::string out;
        };
        auto opts = std::make_shared<RhoOpts>();
        rho_cmd->add_option("--S", opts->S, "detailed species count");
        rho_cmd->add_option("--s", opts->s, "retained species count");
        rho_cmd->add_option("--limit", opts->limit, "evaluate the large-S limit at this alpha")
            ->check(CLI::Range(0.0, 1.0));
        rho_cmd->add_option("--curve", opts->curve, "emit an n-point (alpha, rho_limit) CSV");
        rho_cmd->add_option("--out", opts->out, "output CSV for --curve");
        rho_cmd->callback([opts, rho_cmd]() {
            if (rho_cmd->count("--limit")) {
                std::cout << glvred::double_to_string(glvred::rho_limit(opts->limit)) << "\n";
            } else if (rho_cmd->count("--curve")) {
                const std::string csv = glvred::rho_curve_csv(opts->curve);
                if (opts->out.empty()) std::cout << csv;
                else {
                    glvred::atomic_write_file(opts->out, csv);
                    log_info("wrote " + opts->out);
                }
            } else if (rho_cmd->count("--S") && rho_cmd->count("--s")) {
                std::cout << format_rho(glvred::rho(opts->S, opts->s)) << "\n";
            } else {
                throw glvred::ContractViolation("rho needs --S/--s, --limit, or --curve");
            }
        });
    }

    // --- reduce -------------------------------------------------------------
    auto* reduce = app.add_subcommand("reduce", "Build a reduced system, write its JSON");
    {
        struct ReduceOpts {
            std::string model, out;
            std::vector<int> retain;
            int budget = 8;
            bool heuristic = false;
            std::vector<std::string> zero;
        };
        auto opts = std::make_shared<ReduceOpts>();
        reduce->add_option("--model", opts->model, "model JSON file")->required();
        reduce->add_option("--retain", opts->retain, "retained species (1-based)")->required();
        reduce->add_option("--out", opts->out, "output reduced-system JSON")->required();
        reduce->add_option("--budget", opts->budget, "exhaustive search limit (default 8)");
        reduce->add_flag("--heuristic", opts->heuristic, "allow the greedy (incomplete) search");
        reduce->add_option("--zero", opts->zero, "zero out interaction entry 'row,col' (repeatable)");
        reduce->callback([opts]() {
            glvred::GlvModel model = load_model_file(opts->model);
            apply_zeroed_entries(model, opts->zero);
            glvred::SearchOptions search;
            search.exhaustive_limit = opts->budget;
            search.heuristic =
                opts->heuristic ? glvred::SearchHeuristic::greedy : glvred::SearchHeuristic::none;
            auto report =
                glvred::check_reducible(model, parse_retained(opts->retain, model.dimension()), search);
            if (!report.feasible) {
                std::cerr << "glvreduce: no feasible ordering; closest violates:\n";
                print_plan_violations(report.plan);
                throw glvred::InfeasibleError("reduction infeasible",
                                              report.plan.violations.empty()
                                                  ? 0
                                                  : report.plan.violations.front().original.row,
                                              report.plan.violations.empty()
                                                  ? 0
                                                  : report.plan.violations.front().original.col);
            }
            auto rs = glvred::build_reduced_system(model, report.plan);
            glvred::atomic_write_file(opts->out, glvred::save_reduced_system(rs));
            log_info("wrote " + opts->out + " (" + std::to_string(rs.steps.size()) +
                     " elimination steps)");
        });
    }

    // --- solve-reduced --------------------------------------------------------
    auto* solve = app.add_subcommand("solve-reduced", "Solve a reduced system, write CSV");
    {
        struct SolveOpts {
            std::string reduced, out;
            double t_end = 10.0, dt = 1e-3;
            double fp_tol = 1e-12;
            int fp_max_iter = 50;
        };
        auto opts = std::make_shared<SolveOpts>();
        solve->add_option("--reduced", opts->reduced, "reduced-system JSON file")->required();
        solve->add_option("--out", opts->out, "output trajectory CSV")->required();
        solve->add_option("--t-end", opts->t_end, "final time (default 10)");
        solve->add_option("--dt", opts->dt, "step size (default 1e-3)");
        solve->add_option("--fp-tol", opts->fp_tol, "fixed-point tolerance on chi (default 1e-12)");
        solve->add_option("--fp-max-iter", opts->fp_max_iter, "fixed-point iteration budget (default 50)");
        solve->callback([opts]() {
            auto rs = glvred::load_reduced_system(glvred::read_file(opts->reduced));
            glvred::FixedPointOptions fp;
            fp.tolerance = opts->fp_tol;
            fp.max_iterations = opts->fp_max_iter;
            auto rt = glvred::solve_reduced(rs, opts->t_end, opts->dt, fp);
            glvred::atomic_write_file(opts->out, glvred::reduced_trajectory_to_csv(rs, rt));
            log_info("wrote " + opts->out + " (max fixed-point iterations " +
                     std::to_string(rt.max_fp_iterations) + ")");
        });
    }

    // --- compare ---------------------------------------------------------------
    auto* compare = app.add_subcommand("compare", "Compare reduced vs detailed trajectory CSVs");
    {
        struct CompareOpts {
            std::string detailed, reduced, report;
            double tol_retained = 1e-4, tol_reconstructed = 1e-4;
        };
        auto opts = std::make_shared<CompareOpts>();
        compare->add_option("--detailed", opts->detailed, "detailed trajectory CSV")->required();
        compare->add_option("--reduced", opts->reduced, "reduced trajectory CSV")->required();
        compare->add_option("--report", opts->report, "output report JSON")->required();
        compare->add_option("--tol-retained", opts->tol_retained, "default 1e-4");
        compare->add_option("--tol-reconstructed", opts->tol_reconstructed, "default 1e-4");
        compare->callback([opts, &exit_code]() {
            glvred::Tolerances tol;
            tol.retained = opts->tol_retained;
            tol.reconstructed = opts->tol_reconstructed;
            auto report = glvred::compare_trajectory_csv(
                glvred::parse_csv(glvred::read_file(opts->detailed)),
                glvred::parse_csv(glvred::read_file(opts->reduced)), tol);
            glvred::atomic_write_file(opts->report,
                                      glvred::verification_report_to_json(report).dump(2) + "\n");
            log_info(std::string("compare: ") + (report.pass ? "pass" : "FAIL") + ", report " +
                     opts->report);
            exit_code = report.pass ? exit_ok : exit_fail;
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "glvreduce: " << e.what() << "\n";
        return classify_error(e);
    }
    return exit_code;
}
