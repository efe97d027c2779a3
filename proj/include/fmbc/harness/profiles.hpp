#pragma once

#include "fmbc/core.hpp"
#include "fmbc/harness/scenario.hpp"

#include <filesystem>
#include <random>
#include <vector>

namespace fmbc
{
	/// Reads a `time_index,power_kw` CSV sampled every `source_step_minutes`
	/// and linearly resamples it onto the grid. Rows must be consecutive from 0.
	Profile load_profile_csv(const std::filesystem::path &path, const TimeGrid &grid, double source_step_minutes = 0.0);

	/// Two-bump diurnal load (morning ~08:00, evening ~19:00) over a base level;
	/// max equals `peak` exactly.
	Profile synth_load(const TimeGrid &grid, double start_clock, double peak);

	/// peak * clamp(mean_fraction + sum_j a_j sin(2 pi h / period_j + phase_j), 0, 1)
	/// with seeded periods and phases.
	Profile synth_wind(const TimeGrid &grid, double peak, double mean_fraction, std::uint64_t seed);

	/// Normal deadlines around the cluster mean, rounded to the nearest step
	/// and clamped into [D, T].
	std::vector<int> sample_deadlines(const ClusterSpec &cluster, const Scenario &scenario, std::mt19937_64 &rng);

	/// Everything a run needs that is derived from the scenario and its seed.
	struct ScenarioInputs
	{
		Profile load;
		Profile wind;
		std::vector<DeviceSpec> devices;
	};

	ScenarioInputs build_inputs(const Scenario &scenario);

} // namespace fmbc
