// fmbc: command-line front end for scheduling, simulation and analysis runs.

#include "fmbc/harness/report_io.hpp"
#include "fmbc/harness/simulation.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>

namespace
{
	using namespace fmbc;
	namespace fs = std::filesystem;

	struct Globals
	{
		std::string scenario;
		std::optional<std::uint64_t> seed;
		std::string out;
		std::string policy;
	};

	int fail(const std::string &command, const std::string &kind, const std::string &message, int code)
	{
		const nlohmann::json j = {{"status", "error"}, {"command", command}, {"kind", kind}, {"message", message}};
		std::cerr << j.dump() << "\n";
		return code;
	}

	Scenario resolve_scenario(const Globals &g)
	{
		Scenario s = g.scenario.empty() ? Scenario::desk_scale() : load_scenario(g.scenario);
		if (g.seed)
			s.seed = *g.seed;
		if (!g.policy.empty())
			s.policy = parse_policy(g.policy);
		const auto issues = validate_scenario(s);
		if (!issues.empty())
			throw Error(ErrorKind::invalid_scenario, issues.front());
		return s;
	}

	fs::path out_dir(const Globals &g, const char *fallback)
	{
		return g.out.empty() ? fs::path(fallback) : fs::path(g.out);
	}

	void print_ok(const std::string &command, nlohmann::json extra)
	{
		extra["status"] = "ok";
		extra["command"] = command;
		std::cout << extra.dump() << "\n";
	}

	int cmd_schedule(const Globals &g)
	{
		const Scenario s = resolve_scenario(g);
		const ScenarioInputs in = build_inputs(s);
		std::vector<int> deadlines;
		for (const auto &d : in.devices)
			deadlines.push_back(d.deadline);
		const FleetSpec fleet{s.clusters.front().duration_steps, s.clusters.front().power_kw};
		const Facilitator fac(build_cost_model(s, in.wind), s.grid, in.load, fleet, deadlines);
		const auto &ref = fac.reference();
		if (g.out.empty())
		{
			std::cout << "step,starts,running,load,generation,price\n";
			for (int tau = 0; tau < ref.horizon(); ++tau)
			{
				const auto k = static_cast<std::size_t>(tau);
				std::cout << fmt::format("{},{},{},{},{},{}\n", ref.first_step + tau, ref.starts[k], ref.running[k], format_double(ref.load[tau]),
										 format_double(ref.generation[tau]), format_double(ref.prices[tau]));
			}
			return 0;
		}
		write_reference(ref, fs::path(g.out) / "reference.csv");
		print_ok("schedule", {{"objective", ref.objective}, {"devices", in.devices.size()}, {"out", g.out}});
		return 0;
	}

	int cmd_simulate(const Globals &g)
	{
		const Scenario s = resolve_scenario(g);
		const RunTrace trace = run(s);
		const fs::path dir = out_dir(g, "fmbc-out");
		write_run(trace, dir);
		print_ok("simulate", {{"out", dir.string()}, {"summary", nlohmann::json::parse(summary_json(trace.summary))}});
		return 0;
	}

	int cmd_compare(const Globals &g)
	{
		const Scenario s = resolve_scenario(g);
		const PolicyComparison cmp = compare_policies(s);
		const fs::path dir = out_dir(g, "fmbc-out");
		write_comparison(cmp, dir);
		nlohmann::json gaps;
		for (std::size_t k = 0; k < cmp.traces.size(); ++k)
			gaps[std::string(to_string(cmp.policies[k]))] = cmp.traces[k].summary.cost_gap;
		print_ok("compare", {{"out", dir.string()}, {"cost_gap", gaps}});
		return 0;
	}

	int cmd_sweep(const Globals &g, const std::vector<double> &nus, int replications)
	{
		const Scenario s = resolve_scenario(g);
		const int reps = replications > 0 ? replications : s.replications;
		const SweepResult result = sweep(s, nus, reps);
		const fs::path dir = out_dir(g, "fmbc-out");
		write_sweep(result, dir);
		nlohmann::json medians = nlohmann::json::array();
		int failed = 0;
		for (std::size_t i = 0; i < nus.size(); ++i)
		{
			std::vector<double> gaps;
			for (const auto &r : result.runs)
				if (r.nu_index == static_cast<int>(i) && r.ok)
					gaps.push_back(r.summary.cost_gap);
			medians.push_back({{"nu", nus[i]}, {"runs", gaps.size()}, {"median_cost_gap", gaps.empty() ? 0.0 : median(gaps)}});
		}
		for (const auto &r : result.runs)
			failed += r.ok ? 0 : 1;
		print_ok("sweep", {{"out", dir.string()}, {"failed_runs", failed}, {"by_nu", medians}});
		return 0;
	}

	int cmd_analyze(const Globals &g, const std::string &trace_dir)
	{
		const fs::path src = trace_dir.empty() ? out_dir(g, "fmbc-out") : fs::path(trace_dir);
		Globals resolved = g;
		if (!resolved.seed)
		{
			std::ifstream in(src / "summary.jsonl");
			std::string line;
			if (in && std::getline(in, line))
				resolved.seed = nlohmann::json::parse(line).at("seed").get<std::uint64_t>();
		}
		const Scenario s = resolve_scenario(resolved);
		const ScenarioInputs inputs = build_inputs(s);
		const RunTrace trace = read_run(src);
		const TraceAnalysis analysis = analyze_trace(s, inputs, trace);
		const fs::path dir = g.out.empty() ? src : fs::path(g.out);
		write_analysis(analysis, trace, dir);
		print_ok("analyze", {{"out", dir.string()},
							 {"nash_violations", analysis.nash.violations.size()},
							 {"corollary_violations", analysis.consistency.corollary_violations},
							 {"price_bound_violations", analysis.consistency.price_violations}});
		return 0;
	}

	int cmd_validate(const Globals &g)
	{
		Scenario s = g.scenario.empty() ? Scenario::desk_scale() : load_scenario(g.scenario);
		if (g.seed)
			s.seed = *g.seed;
		if (!g.policy.empty())
			s.policy = parse_policy(g.policy);
		const auto issues = validate_scenario(s);
		if (!issues.empty())
		{
			const nlohmann::json j = {{"status", "error"}, {"command", "validate"}, {"kind", "invalid_scenario"}, {"issues", issues}};
			std::cerr << j.dump() << "\n";
			return 1;
		}
		print_ok("validate", {{"scenario", s.name}, {"devices", s.device_count()}, {"steps", s.grid.num_steps}});
		return 0;
	}
} // namespace

int main(int argc, char **argv)
{
	CLI::App app{"Forecast-mediated market-based control of deferrable loads"};
	app.require_subcommand(1);
	Globals g;
	std::uint64_t seed = 0;
	app.add_option("--scenario", g.scenario, "Scenario JSON file (default: built-in desk-scale scenario)");
	auto *seed_opt = app.add_option("--seed", seed, "Base seed (overrides the scenario)");
	app.add_option("--out", g.out, "Output directory");
	app.add_option("--policy", g.policy, "fmbc | point-forecast | naive | latest-start");

	auto *schedule = app.add_subcommand("schedule", "Solve and print the reference schedule and prices");
	auto *simulate = app.add_subcommand("simulate", "Single closed-loop run; writes trace CSVs");
	auto *compare = app.add_subcommand("compare", "Run every policy on the same inputs");
	auto *sweep_cmd = app.add_subcommand("sweep", "Forecast uncertainty sensitivity sweep");
	std::vector<double> nus{1e-5, 1e-3, 1e-2, 1e-1};
	int replications = 0;
	sweep_cmd->add_option("--nu", nus, "Day-ahead uncertainty levels")->delimiter(',');
	sweep_cmd->add_option("--replications", replications, "Runs per level (default: scenario value)");
	auto *analyze = app.add_subcommand("analyze", "Equilibrium, consistency and regret reports for a simulate output");
	std::string trace_dir;
	analyze->add_option("--trace", trace_dir, "Directory written by simulate (default: --out)");
	auto *validate = app.add_subcommand("validate", "Lint a scenario file");
	for (auto *sub : {schedule, simulate, compare, sweep_cmd, analyze, validate})
		sub->fallthrough();

	try
	{
		app.parse(argc, argv);
	}
	catch (const CLI::CallForHelp &e)
	{
		return app.exit(e);
	}
	catch (const CLI::CallForAllHelp &e)
	{
		return app.exit(e);
	}
	catch (const CLI::ParseError &e)
	{
		return fail(app.get_subcommands().empty() ? "" : app.get_subcommands().front()->get_name(), "usage", e.what(), 2);
	}
	if (*seed_opt)
		g.seed = seed;

	const std::string command = app.get_subcommands().front()->get_name();
	try
	{
		if (*schedule)
			return cmd_schedule(g);
		if (*simulate)
			return cmd_simulate(g);
		if (*compare)
			return cmd_compare(g);
		if (*sweep_cmd)
			return cmd_sweep(g, nus, replications);
		if (*analyze)
			return cmd_analyze(g, trace_dir);
		return cmd_validate(g);
	}
	catch (const fmbc::Error &e)
	{
		return fail(command, fmbc::to_string(e.kind()), e.what(), 1);
	}
	catch (const std::exception &e)
	{
		return fail(command, "internal", e.what(), 3);
	}
}
