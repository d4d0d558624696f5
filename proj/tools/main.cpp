#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sbc/errors.hpp"
#include "sbc/flatness.hpp"
#include "sbc/pipeline.hpp"
#include "sbc/scenario.hpp"
#include "sbc/trace_io.hpp"
#include "sbc/verify.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitProperty = 1;
constexpr int kExitInput = 2;
constexpr int kExitSafety = 3;

std::string fmt(double v) { return sbc::format_double(v); }

std::string pair_label(int i, int j) {
    return "(" + std::to_string(i) + "," + std::to_string(j) + ")";
}

int run_simulate(const std::string& scenario, const std::vector<std::string>& overrides,
                 const std::optional<std::string>& out, const std::optional<double>& dt) {
    sbc::ScenarioConfig config = sbc::resolve_scenario(scenario, overrides);
    if (dt) config.dt = *dt;

    const sbc::ScenarioResult result = sbc::run_scenario(config);
    const sbc::SafetySummary& safety = result.trace.safety;
    const sbc::AuditSummary& audit = result.audit;

    std::cout << "scenario " << result.config.name << ": " << result.config.vehicle_count()
              << " vehicles, " << result.trace.steps.size() << " steps, dt "
              << fmt(result.config.dt) << "\n";
    if (result.attempts.size() > 1) {
        for (const sbc::AttemptReport& attempt : result.attempts)
            std::cout << "attempt k_s " << fmt(attempt.k_s) << ": audit "
                      << (attempt.audit_pass ? "pass" : "fail") << ", max tilt "
                      << fmt(sbc::degrees(attempt.max_tilt)) << " deg, thrust ratio "
                      << fmt(attempt.max_thrust_ratio) << "\n";
        std::cout << "reported attempt: k_s " << fmt(result.k_s_final) << "\n";
    }

    if (result.config.vehicle_count() >= 2)
        std::cout << "safety: " << (safety.pass ? "pass" : "FAIL") << " (min h "
                  << fmt(safety.min_h) << " at t " << fmt(safety.min_h_time) << " pair "
                  << pair_label(safety.min_h_i, safety.min_h_j) << ")\n";
    else
        std::cout << "safety: pass (single vehicle)\n";

    std::cout << "audit: " << (audit.pass ? "pass" : "FAIL");
    if (audit.singular_vehicle >= 0)
        std::cout << " (flatness singular on q" << audit.singular_vehicle << " at sample "
                  << audit.singular_index << ")";
    else
        std::cout << " (max tilt " << fmt(sbc::degrees(audit.max_tilt)) << " deg on q"
                  << audit.max_tilt_vehicle << " at t " << fmt(audit.max_tilt_time)
                  << ", max thrust ratio " << fmt(audit.max_thrust_ratio) << " on q"
                  << audit.max_thrust_ratio_vehicle << " at t "
                  << fmt(audit.max_thrust_ratio_time) << ")";
    std::cout << "\n";

    for (std::size_t i = 0; i < result.goal_errors.size(); ++i)
        std::cout << "goal error q" << i << ": " << fmt(result.goal_errors[i]) << " m\n";

    if (out) {
        sbc::write_archive(*out, result);
        std::cout << "wrote " << *out << "\n";
    }

    if (!safety.pass) {
        std::cerr << "safety violation at step " << safety.first_violation_step << " pair "
                  << pair_label(safety.min_h_i, safety.min_h_j) << "\n";
        return kExitSafety;
    }
    if (!audit.pass) {
        std::cerr << "actuator audit failed\n";
        return kExitProperty;
    }
    return kExitOk;
}

int run_audit(const std::string& dir, const std::optional<double>& max_tilt_deg,
              const std::optional<double>& max_thrust_ratio, bool as_json) {
    const sbc::ArchiveSummary summary = sbc::read_archive(dir);

    const double tilt_deg = sbc::degrees(summary.max_tilt);
    const double tilt_limit =
        max_tilt_deg ? *max_tilt_deg
                     : summary.audit.at("audit").at("limits").at("max_tilt_deg").get<double>();
    const double ratio_limit =
        max_thrust_ratio
            ? *max_thrust_ratio
            : summary.audit.at("audit").at("limits").at("max_thrust_ratio").get<double>();

    // Re-audit equality: extremes recomputed from the CSV tables must match
    // the values embedded at simulate time.
    const auto matches = [](double lhs, double rhs) {
        return std::abs(lhs - rhs) <= 1e-9 * std::max(1.0, std::abs(rhs));
    };
    bool consistent = matches(tilt_deg, summary.audit.at("audit").at("max_tilt_deg").get<double>()) &&
                      matches(summary.max_thrust_ratio,
                              summary.audit.at("audit").at("max_thrust_ratio").get<double>());
    const json& stored_min_h = summary.audit.at("safety").at("min_h");
    if (summary.vehicles >= 2 && !stored_min_h.is_null())
        consistent = consistent && matches(summary.min_h, stored_min_h.get<double>());

    std::string failing;
    if (tilt_deg > tilt_limit) failing = "max_tilt_deg";
    if (summary.max_thrust_ratio > ratio_limit) failing = "max_thrust_ratio";

    if (as_json) {
        json doc;
        doc["steps"] = summary.steps;
        doc["vehicles"] = summary.vehicles;
        doc["max_tilt_deg"] = tilt_deg;
        doc["max_tilt_time"] = summary.max_tilt_time;
        doc["max_tilt_vehicle"] = summary.max_tilt_vehicle;
        doc["max_thrust_ratio"] = summary.max_thrust_ratio;
        doc["max_thrust_ratio_time"] = summary.max_thrust_ratio_time;
        doc["max_thrust_ratio_vehicle"] = summary.max_thrust_ratio_vehicle;
        doc["min_h"] = summary.vehicles >= 2 ? json(summary.min_h) : json(nullptr);
        doc["min_h_time"] = summary.min_h_time;
        doc["min_h_pair"] = json::array({summary.min_h_i, summary.min_h_j});
        doc["singular_samples"] = summary.has_nan_samples;
        doc["limits"] = {{"max_tilt_deg", tilt_limit}, {"max_thrust_ratio", ratio_limit}};
        doc["consistent"] = consistent;
        doc["failing_metric"] = failing.empty() ? json(nullptr) : json(failing);
        std::cout << doc.dump(2) << "\n";
    } else {
        std::cout << "archive " << dir << ": " << summary.steps << " steps, " << summary.vehicles
                  << " vehicles\n";
        std::cout << "max tilt: " << fmt(tilt_deg) << " deg at t " << fmt(summary.max_tilt_time)
                  << " (q" << summary.max_tilt_vehicle << ")\n";
        std::cout << "max thrust ratio: " << fmt(summary.max_thrust_ratio) << " at t "
                  << fmt(summary.max_thrust_ratio_time) << " (q"
                  << summary.max_thrust_ratio_vehicle << ")\n";
        if (summary.vehicles >= 2)
            std::cout << "min pairwise h: " << fmt(summary.min_h) << " at t "
                      << fmt(summary.min_h_time) << " pair "
                      << pair_label(summary.min_h_i, summary.min_h_j) << "\n";
        if (summary.has_nan_samples) std::cout << "trace contains singular flatness samples\n";
        std::cout << "re-audit: " << (consistent ? "consistent with stored audit" : "MISMATCH")
                  << "\n";
        std::cout << "limits: tilt " << fmt(tilt_limit) << " deg, thrust ratio "
                  << fmt(ratio_limit) << " -> "
                  << (failing.empty() ? std::string("pass")
                                      : "FAIL (" + failing + " exceeds limit)")
                  << "\n";
    }

    if (summary.vehicles >= 2 && summary.min_h < -1e-9) {
        std::cerr << "stored trace violates the safety invariant\n";
        return kExitSafety;
    }
    if (!failing.empty() || !consistent || summary.has_nan_samples) return kExitProperty;
    return kExitOk;
}

int run_verify(std::uint64_t seed, int trials, bool as_json) {
    const std::vector<sbc::FuzzReport> reports = {
        sbc::feasibility_fuzz(seed, trials),
        sbc::lie_derivative_fuzz(seed, std::max(1, trials / 5)),
        sbc::qp_oracle_fuzz(seed, std::max(1, trials / 2)),
        sbc::flatness_fuzz(seed, std::max(1, trials / 10)),
        sbc::pole_placement_fuzz(seed, std::max(1, trials / 10)),
    };

    bool all_pass = true;
    if (as_json) {
        json doc = json::array();
        for (const sbc::FuzzReport& report : reports) {
            json entry;
            entry["suite"] = report.suite;
            entry["trials"] = report.trials;
            entry["passed"] = report.passed;
            entry["rejected"] = report.rejected;
            entry["failed"] = report.failed;
            if (!report.first_failure.empty())
                entry["first_failure"] = json::parse(report.first_failure);
            doc.push_back(entry);
            all_pass = all_pass && report.pass();
        }
        std::cout << doc.dump(2) << "\n";
    } else {
        for (const sbc::FuzzReport& report : reports) {
            std::cout << report.suite << ": " << report.passed << "/" << report.trials
                      << " passed, " << report.rejected << " rejected, " << report.failed
                      << " failed\n";
            if (!report.first_failure.empty())
                std::cout << "  first failing instance: " << report.first_failure << "\n";
            all_pass = all_pass && report.pass();
        }
        std::cout << (all_pass ? "verify: all suites passed" : "verify: FAILED") << "\n";
    }
    return all_pass ? kExitOk : kExitProperty;
}

int run_list() {
    for (const std::string& name : sbc::builtin_names())
        std::cout << name << " - " << sbc::builtin_summary(name) << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Safety-barrier-certified multi-quadrotor trajectory rectification"};
    app.require_subcommand(1);

    std::string scenario;
    std::vector<std::string> overrides;
    std::optional<std::string> out_dir;
    std::optional<double> dt_override;
    CLI::App* simulate = app.add_subcommand("simulate", "Run a scenario and write its trace archive");
    simulate->add_option("--scenario", scenario, "Built-in name or scenario JSON path")->required();
    simulate->add_option("--out", out_dir, "Archive output directory");
    simulate->add_option("--set", overrides, "Override scenario fields (key=value, repeatable)");
    simulate->add_option("--dt", dt_override, "Override the control period, s");

    std::string archive_dir;
    std::optional<double> audit_tilt;
    std::optional<double> audit_ratio;
    bool audit_json = false;
    CLI::App* audit = app.add_subcommand("audit", "Recompute extremes from a stored trace archive");
    audit->add_option("archive", archive_dir, "Trace archive directory")->required();
    audit->add_option("--max-tilt-deg", audit_tilt, "Tilt limit to audit against, degrees");
    audit->add_option("--max-thrust-ratio", audit_ratio, "Thrust ratio limit to audit against");
    audit->add_flag("--json", audit_json, "Machine-readable report");

    std::uint64_t seed = 2024;
    int trials = 1000;
    bool verify_json = false;
    CLI::App* verify = app.add_subcommand("verify", "Run the randomized property suites");
    verify->add_option("--seed", seed, "Root seed for all suites");
    verify->add_option("--trials", trials, "Trial budget for the feasibility suite")
        ->check(CLI::PositiveNumber);
    verify->add_flag("--json", verify_json, "Machine-readable report");

    CLI::App* list = app.add_subcommand("list-scenarios", "Print the built-in scenarios");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitInput;
    }

    try {
        if (simulate->parsed()) return run_simulate(scenario, overrides, out_dir, dt_override);
        if (audit->parsed()) return run_audit(archive_dir, audit_tilt, audit_ratio, audit_json);
        if (verify->parsed()) return run_verify(seed, trials, verify_json);
        if (list->parsed()) return run_list();
    } catch (const sbc::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const sbc::DegenerateGeometryError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSafety;
    } catch (const std::logic_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitProperty;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitOk;
}
