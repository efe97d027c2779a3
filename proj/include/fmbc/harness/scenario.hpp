#pragma once

#include "fmbc/bidding.hpp"
#include "fmbc/core.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace fmbc
{
	inline constexpr int kScenarioSchemaVersion = 1;

	/// Identical devices whose deadlines are normal around a clock time.
	struct ClusterSpec
	{
		int count = 60;
		int duration_steps = 12;
		double power_kw = 2.0;
		/// Clock time in hours, e.g. 7.0 for 07:00.
		double deadline_mean_clock = 7.0;
		double deadline_sd_hours = 1.0;
	};

	struct CostSpec
	{
		std::string kind = "affine";
		double k = 50.0;
		std::vector<double> power;
		std::vector<double> price;
	};

	/// A profile is either read from a CSV file or synthesized with a peak.
	struct ProfileSpec
	{
		std::string csv_path;
		double peak_kw = 0.0;
		/// Synthetic wind only: mean level as a fraction of the peak.
		double mean_fraction = 0.5;
		/// Scale a CSV profile so its maximum equals peak_kw.
		bool rescale_to_peak = false;
		/// CSV sampling interval in minutes; 0 means the grid step.
		double step_minutes = 0.0;
	};

	struct Scenario
	{
		int schema_version = kScenarioSchemaVersion;
		std::string name = "desk-scale";
		double start_clock = 21.0;
		TimeGrid grid{0, 288, 5.0};
		std::vector<ClusterSpec> clusters;
		CostSpec cost;
		ProfileSpec load;
		ProfileSpec wind;
		double day_ahead_uncertainty = 1e-5;
		PolicyVariant policy = PolicyVariant::mdp_optimal;
		std::uint64_t seed = 1;
		int replications = 20;
		int quantile_points = StepDistribution::kDefaultPoints;
		bool deadline_adjustment = false;

		/// 120 devices in two clusters of 60, T = 288 five-minute steps from
		/// 21:00, load peak 350 kW, wind peak 500 kW, k = 50 (one tenth of the
		/// 1200-device case, so the flexible load moves prices as much).
		static Scenario desk_scale();
		/// The 1200-device configuration (k = 500).
		static Scenario full_scale();

		int device_count() const;
		/// Steps from the grid start to a clock time (wrapping past midnight).
		double steps_until_clock(double clock_hours) const;
	};

	/// Lint: empty when the scenario is usable, otherwise one message per issue.
	std::vector<std::string> validate_scenario(const Scenario &scenario);

	Scenario load_scenario(const std::filesystem::path &path);
	void save_scenario(const Scenario &scenario, const std::filesystem::path &path);
	std::string scenario_to_json(const Scenario &scenario);
	Scenario scenario_from_json(const std::string &text);

	MarginalCostModel build_cost_model(const Scenario &scenario, Profile renewable);

} // namespace fmbc
