#pragma once

#include "fmbc/bidding.hpp"
#include "fmbc/core.hpp"

#include <map>
#include <random>
#include <vector>

namespace fmbc
{
	/// Identical constant-power devices as seen by the reference scheduler.
	struct FleetSpec
	{
		int duration = 12;
		double power = 2.0;
	};

	/// phi(i) for instants i = 0..T: number of devices with deadline <= i.
	std::vector<int> deadline_counts(std::span<const DeviceSpec> devices, const TimeGrid &grid);
	std::vector<int> deadline_counts(std::span<const int> deadlines, const TimeGrid &grid);

	/// Cost-optimal scheduling problem over [first_step, T) for the devices still
	/// waiting at first_step. `committed` holds consumption of devices already
	/// running; `waiting_deadlines` is phi over the waiting devices only.
	struct ReferenceProblem
	{
		TimeGrid grid;
		int first_step = 0;
		Profile inflexible;
		Profile committed;
		std::vector<int> waiting_deadlines;
		FleetSpec fleet;

		int horizon() const { return grid.num_steps - first_step; }
		int waiting() const { return waiting_deadlines.empty() ? 0 : waiting_deadlines.back(); }
		void validate() const;
	};

	struct ReferenceSolution
	{
		int first_step = 0;
		std::vector<int> starts;
		std::vector<int> running;
		Profile load;
		Profile generation;
		Profile prices;
		double objective = 0.0;

		int horizon() const { return static_cast<int>(starts.size()); }
		int starts_at(int t) const;
		double price_at(int t) const;
		double load_at(int t) const;
	};

	/// Builds the solution record (loads, generation, prices, objective) for given starts.
	ReferenceSolution evaluate_starts(const MarginalCostModel &model, const ReferenceProblem &problem, std::vector<int> starts);

	/// Independent checker: throws consistency naming the first violated constraint.
	void check_reference(const MarginalCostModel &model, const ReferenceProblem &problem, const ReferenceSolution &solution, double tolerance = 1e-9);

	/// Exact minimizer of total generation cost; ties resolve to the earliest
	/// start vector. `warm` (any earlier solution of a related problem) only
	/// seeds the search.
	ReferenceSolution reference_schedule(const MarginalCostModel &model, const ReferenceProblem &problem, const ReferenceSolution *warm = nullptr);

	struct SmallInstance
	{
		TimeGrid grid;
		Profile inflexible;
		std::vector<DeviceSpec> devices;
	};

	struct BruteForceResult
	{
		std::vector<int> device_starts;
		double objective = 0.0;
		ReferenceSolution solution;
	};

	inline constexpr double kBruteForceGuard = 1e7;

	/// Exhaustive enumeration of per-device start tuples; lexicographically
	/// earliest among equal-cost optima.
	BruteForceResult brute_force_schedule(const MarginalCostModel &model, const SmallInstance &instance);

	/// Earliest-deadline-first realization of the start counts, random among equal deadlines.
	std::map<DeviceId, int> realize_start_priority(const ReferenceSolution &reference, std::span<const DeviceSpec> waiting, std::mt19937_64 &rng);

	struct ForecastModel
	{
		double day_ahead_uncertainty = 1e-5;
		int issue_step = 0;
	};

	/// SD of the price forecast for step t issued at t'.
	double forecast_sd(double reference_price, const ForecastModel &fm, int t, const TimeGrid &grid);

	/// Log-normal forecast around the reference prices for steps [issue_step, T).
	PriceForecast generate_forecast(const ReferenceSolution &reference, const ForecastModel &fm, const TimeGrid &grid, std::mt19937_64 &rng,
									int points = StepDistribution::kDefaultPoints);

	/// Rolling-horizon reference: re-solved after every clearing with realized
	/// starts fixed as running commitments.
	class Facilitator
	{
	public:
		Facilitator(MarginalCostModel model, TimeGrid grid, Profile inflexible, FleetSpec fleet, std::span<const int> deadlines);

		const ReferenceProblem &problem() const { return problem_; }
		const ReferenceSolution &reference() const { return reference_; }
		const MarginalCostModel &model() const { return model_; }

		/// Fixes the devices (by deadline) that started at step t and re-solves on [t+1, T).
		const ReferenceSolution &roll_forward(int t, std::span<const int> started_deadlines);

	private:
		MarginalCostModel model_;
		ReferenceProblem problem_;
		std::vector<int> waiting_;
		ReferenceSolution reference_;
	};

} // namespace fmbc
