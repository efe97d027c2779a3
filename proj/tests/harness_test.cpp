#include "fmbc/harness/report_io.hpp"
#include "fmbc/harness/seeds.hpp"
#include "fmbc/harness/simulation.hpp"
#include "support.hpp"

#include <doctest.h>

#include <filesystem>
#include <functional>
#include <fstream>
#include <numeric>
#include <sstream>

using namespace fmbc;
namespace fs = std::filesystem;

namespace
{
	fs::path scratch(const std::string &name)
	{
		const fs::path dir = fs::temp_directory_path() / "fmbc-tests" / name;
		fs::remove_all(dir);
		fs::create_directories(dir);
		return dir;
	}

	fs::path write_file(const fs::path &path, const std::string &text)
	{
		std::ofstream(path, std::ios::binary) << text;
		return path;
	}

	std::string csv(int rows, double value, int skip = -1)
	{
		std::string s = "time_index,power_kw\n";
		for (int i = 0; i < rows; ++i)
			if (i != skip)
				s += std::to_string(i) + "," + std::to_string(value) + "\n";
		return s;
	}

	std::string error_of(const std::function<void()> &f)
	{
		try
		{
			f();
		}
		catch (const Error &e)
		{
			return e.what();
		}
		return "";
	}

	std::string slurp(const fs::path &p)
	{
		std::ifstream in(p, std::ios::binary);
		std::stringstream ss;
		ss << in.rdbuf();
		return ss.str();
	}

	Scenario small_scenario(int per_cluster)
	{
		Scenario s = Scenario::desk_scale();
		for (auto &c : s.clusters)
			c.count = per_cluster;
		return s;
	}
} // namespace

TEST_SUITE("harness")
{
	TEST_CASE("profile csv ingestion")
	{
		const auto dir = scratch("csv");
		const TimeGrid grid{0, 12, 5.0};
		const auto flat = load_profile_csv(write_file(dir / "flat.csv", csv(12, 350.0)), grid);
		CHECK(flat.size() == 12);
		CHECK(flat.minCoeff() == 350.0);
		CHECK(flat.maxCoeff() == 350.0);

		CHECK(load_profile_csv(write_file(dir / "bom.csv", "\xEF\xBB\xBF" + csv(12, 1.0)), grid).sum() == doctest::Approx(12.0));

		std::string coarse = "time_index,power_kw\n";
		for (int i = 0; i < 5; ++i)
			coarse += std::to_string(i) + "," + std::to_string(30.0 * i) + "\n";
		const auto fine = load_profile_csv(write_file(dir / "coarse.csv", coarse), {0, 13, 5.0}, 15.0);
		CHECK(fine.size() == 13);
		for (int j = 0; j <= 12; ++j)
			CHECK(fine[j] == doctest::Approx(10.0 * j));

		CHECK(error_of([&] { load_profile_csv(write_file(dir / "neg.csv", "time_index,power_kw\n0,1\n1,-2\n"), grid); }).find("row 3") != std::string::npos);
		CHECK(error_of([&] { load_profile_csv(write_file(dir / "nan.csv", "time_index,power_kw\n0,1\n1,abc\n"), grid); }).find("row 3") != std::string::npos);
		CHECK(error_of([&] { load_profile_csv(write_file(dir / "gap.csv", csv(12, 1.0, 4)), grid); }).find("row 6") != std::string::npos);
		CHECK(error_of([&] { load_profile_csv(write_file(dir / "short.csv", csv(5, 1.0)), grid); }).find("missing") != std::string::npos);
		CHECK(error_of([&] { load_profile_csv(write_file(dir / "hdr.csv", "t,p\n0,1\n"), grid); }).find("header") != std::string::npos);
		CHECK_THROWS_AS(load_profile_csv(dir / "absent.csv", grid), Error);
	}

	TEST_CASE("rescaled csv profile peaks at the requested value")
	{
		const auto dir = scratch("peak");
		std::string text = "time_index,power_kw\n";
		for (int i = 0; i < 288; ++i)
			text += std::to_string(i) + "," + std::to_string(1.0 + std::sin(i / 40.0)) + "\n";
		Scenario s = small_scenario(1);
		s.load = {(dir / "load.csv").string(), 350.0, 0.5, true, 0.0};
		write_file(dir / "load.csv", text);
		CHECK(build_inputs(s).load.maxCoeff() == doctest::Approx(350.0));
	}

	TEST_CASE("synthetic profiles")
	{
		const TimeGrid grid{0, 288, 5.0};
		const auto load = synth_load(grid, 21.0, 350.0);
		CHECK(load.maxCoeff() == doctest::Approx(350.0).epsilon(1e-12));
		CHECK(load.minCoeff() > 0.0);
		const auto wind = synth_wind(grid, 500.0, 0.3, 42);
		CHECK(wind.minCoeff() >= 0.0);
		CHECK(wind.maxCoeff() <= 500.0);
		CHECK(wind == synth_wind(grid, 500.0, 0.3, 42));
		CHECK(wind != synth_wind(grid, 500.0, 0.3, 43));
	}

	TEST_CASE("deadline sampling")
	{
		Scenario s = Scenario::full_scale();
		REQUIRE(s.clusters.size() == 2);
		CHECK(s.clusters[0].count == 600);
		CHECK(s.clusters[1].count == 600);
		CHECK(s.device_count() == 1200);

		std::mt19937_64 rng(5);
		ClusterSpec fixed = s.clusters[0];
		fixed.deadline_sd_hours = 0.0;
		for (int d : sample_deadlines(fixed, s, rng))
			CHECK(d == 120);

		const auto ds = sample_deadlines(s.clusters[1], s, rng);
		CHECK(ds.size() == 600);
		const double mean = std::accumulate(ds.begin(), ds.end(), 0.0) / 600.0;
		CHECK(std::abs(mean - 240.0) <= 3.0 * 12.0 / std::sqrt(600.0));
		for (int d : ds)
		{
			CHECK(d >= s.clusters[1].duration_steps);
			CHECK(d <= s.grid.num_steps);
		}

		const auto inputs = build_inputs(s);
		const auto phi = deadline_counts(inputs.devices, s.grid);
		for (int i : {0, 120, 200, 288})
			CHECK(phi[static_cast<std::size_t>(i)] ==
				  std::count_if(inputs.devices.begin(), inputs.devices.end(), [i](const DeviceSpec &d) { return d.deadline <= i; }));
	}

	TEST_CASE("seed streams")
	{
		CHECK(derive_seed(1, "wind") == derive_seed(1, "wind"));
		CHECK(derive_seed(1, "wind") != derive_seed(2, "wind"));
		CHECK(derive_seed(1, "wind") != derive_seed(1, "load"));
		CHECK(derive_seed(1, "token", {3}) != derive_seed(1, "token", {4}));
		CHECK(sweep_seed(9, 0, 1) != sweep_seed(9, 1, 0));
	}

	TEST_CASE("scenario files")
	{
		const auto dir = scratch("scenario");
		Scenario s = Scenario::desk_scale();
		CHECK(validate_scenario(s).empty());
		s.seed = 77;
		s.policy = PolicyVariant::naive;
		save_scenario(s, dir / "s.json");
		const Scenario back = load_scenario(dir / "s.json");
		CHECK(scenario_to_json(back) == scenario_to_json(s));

		write_file(dir / "bad.json", "{ not json");
		CHECK_THROWS_AS(load_scenario(dir / "bad.json"), Error);

		Scenario broken = s;
		broken.cost.kind = "cubic";
		broken.clusters[1].power_kw = 3.0;
		broken.wind.mean_fraction = 1.5;
		CHECK(validate_scenario(broken).size() == 3);

		write_file(dir / "wind.csv", csv(288, 100.0));
		Scenario rel = s;
		rel.wind = {"wind.csv", 0.0, 0.5, false, 0.0};
		save_scenario(rel, dir / "rel.json");
		CHECK(build_inputs(load_scenario(dir / "rel.json")).wind.maxCoeff() == 100.0);
	}

	TEST_CASE("zero devices reduce to inflexible dispatch")
	{
		const Scenario s = small_scenario(0);
		const auto inputs = build_inputs(s);
		const auto trace = run(s, inputs);
		const auto model = build_cost_model(s, inputs.wind);
		double expected = 0.0;
		for (int t = 0; t < s.grid.num_steps; ++t)
		{
			expected += generation_cost(model, t, inputs.load[t], s.grid.step_minutes);
			CHECK(trace.steps[static_cast<std::size_t>(t)].clearing_price == doctest::Approx(marginal_price(model, t, inputs.load[t])));
		}
		CHECK(trace.summary.total_cost == doctest::Approx(expected).epsilon(1e-12));
		CHECK(trace.summary.cost_gap == doctest::Approx(0.0));
	}

	TEST_CASE("one device with negligible noise starts at the optimal slot")
	{
		Scenario s = small_scenario(0);
		s.clusters[0].count = 1;
		const auto inputs = build_inputs(s);
		const auto trace = run(s, inputs);
		const auto model = build_cost_model(s, inputs.wind);
		const SmallInstance inst{s.grid, inputs.load, inputs.devices};
		const auto bf = brute_force_schedule(model, inst);
		REQUIRE(trace.devices.size() == 1);
		CHECK(trace.devices[0].start == bf.device_starts[0]);
	}

	TEST_CASE("closed-loop run invariants")
	{
		// no curtailment and a spread forecast, so every price has a positive
		// tail and thresholds separate by deadline
		Scenario s = small_scenario(15);
		s.wind.peak_kw = 0.0;
		s.day_ahead_uncertainty = 0.1;
		const auto inputs = build_inputs(s);
		const auto trace = run(s, inputs);
		CHECK(trace.steps.size() == 288);
		CHECK(trace.snapshots.size() == 288);
		for (const auto &st : trace.steps)
		{
			CHECK(std::abs(st.generation + st.renewable_used - st.inflexible - st.flexible) <= 1e-9);
			if (!st.tie)
				CHECK(st.budget_imbalance == 0.0);
		}
		std::map<int, int> started;
		for (const auto &d : trace.devices)
		{
			CHECK(d.start >= 0);
			CHECK(d.start + 12 <= d.effective_deadline);
			CHECK(d.regret >= -1e-9);
			++started[d.start];
		}
		for (const auto &st : trace.steps)
			CHECK(started[st.step] == st.starts);

		// devices start in deadline order; a later deadline can only jump ahead
		// inside a tie, where the discretized forecast left both thresholds equal
		int inversions = 0;
		for (const auto &a : trace.devices)
			for (const auto &b : trace.devices)
				if (a.deadline < b.deadline && b.start < a.start)
				{
					++inversions;
					CHECK(trace.steps[static_cast<std::size_t>(b.start)].tie);
				}
		MESSAGE("deadline-order inversions, all at ties: " << inversions);

		const auto again = run(s, inputs);
		CHECK(summary_json(again.summary) == summary_json(trace.summary));
	}

	TEST_CASE("trace files round-trip and repeat byte for byte")
	{
		const Scenario s = small_scenario(10);
		const auto trace = run(s);
		const auto a = scratch("run-a"), b = scratch("run-b");
		write_run(trace, a);
		write_run(run(s), b);
		for (const char *f : {"steps.csv", "devices.csv", "snapshots.csv", "reference.csv", "summary.jsonl"})
		{
			CHECK(fs::exists(a / f));
			CHECK(slurp(a / f) == slurp(b / f));
		}
		const auto back = read_run(a);
		REQUIRE(back.steps.size() == trace.steps.size());
		REQUIRE(back.devices.size() == trace.devices.size());
		for (std::size_t i = 0; i < back.steps.size(); ++i)
			CHECK(back.steps[i].clearing_price == trace.steps[i].clearing_price);
		for (std::size_t i = 0; i < back.devices.size(); ++i)
			CHECK(back.devices[i].payment == trace.devices[i].payment);

		const auto analysis = analyze_trace(s, build_inputs(s), back);
		CHECK(analysis.consistency.rows.size() == 288);
		CHECK(analysis.regrets.size() == trace.devices.size());
	}

	TEST_CASE("sweep rows")
	{
		const Scenario s = small_scenario(5);
		const auto one = sweep(s, {1e-3}, 1);
		REQUIRE(one.runs.size() == 1);
		CHECK(one.runs[0].ok);
		CHECK(one.devices.size() == 10);
		const auto two = sweep(s, {1e-3}, 1);
		CHECK(summary_json(two.runs[0].summary) == summary_json(one.runs[0].summary));
		CHECK(sweep(s, {1e-3, 1e-2}, 2).runs.size() == 4);
	}

	TEST_CASE("policy comparison shares inputs")
	{
		const Scenario s = small_scenario(10);
		const auto cmp = compare_policies(s);
		REQUIRE(cmp.traces.size() == 4);
		for (const auto &t : cmp.traces)
		{
			CHECK(t.summary.reference_cost == cmp.traces[0].summary.reference_cost);
			CHECK(t.devices.size() == 20);
		}
		for (std::size_t k = 0; k < cmp.policies.size(); ++k)
			if (cmp.policies[k] == PolicyVariant::latest_start)
				for (const auto &d : cmp.traces[k].devices)
					CHECK(d.start == d.deadline - 12);
		CHECK(median({3.0, 1.0, 2.0}) == 2.0);
		CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
	}
}
