#pragma once

#include "fmbc/core.hpp"
#include "fmbc/facilitator.hpp"

#include <optional>
#include <vector>

namespace fmbc
{
	/// System cost of running the device from t on top of `others` (absolute-indexed load).
	double system_cost_of_start(const MarginalCostModel &model, const Profile &others, const DeviceSpec &spec, int t, double step_minutes);

	/// Payment at marginal-cost prices for running the device from t on top of `others`.
	double agent_payment(const MarginalCostModel &model, const Profile &others, const DeviceSpec &spec, int t, double step_minutes);

	struct DeviceEquilibrium
	{
		DeviceId id = 0;
		int start = 0;
		/// Indexed by alternative start 0..latest_start.
		std::vector<double> system_cost;
		std::vector<double> payment;
		/// Smallest delta with payment[start] <= (1 + delta) payment[t] for all t.
		double delta_needed = 0.0;
		/// Largest relative marginal-price increment caused by the device.
		double epsilon = 0.0;
	};

	struct NashViolation
	{
		DeviceId id = 0;
		int start = 0;
		int better_start = 0;
		double improvement = 0.0;
	};

	struct EquilibriumReport
	{
		std::vector<DeviceEquilibrium> devices;
		std::vector<NashViolation> violations;
		double worst_delta = 0.0;
		double epsilon = 0.0;
		/// epsilon / (1 - epsilon), +inf when epsilon >= 1.
		double delta_bound = 0.0;
		bool delta_within_bound = true;
	};

	/// Unilateral start-time deviations against the allocation's aggregate load.
	EquilibriumReport check_nash(const Schedule &allocation, const std::vector<DeviceSpec> &devices, const MarginalCostModel &model, double step_minutes,
								 double tolerance = 1e-9);

	/// Reference quantities that the per-step consistency bounds need.
	struct ReferenceSnapshot
	{
		int step = 0;
		double price = 0.0;
		int starts = 0;
		/// sum_i P_i * dm_{t+i,i} for a start at this step.
		double own_increment = 0.0;
		/// max over later starts t' of sum_i P_i * dm_{t'+i,i}.
		double later_increment = 0.0;
		/// Secant slope of the marginal cost at the reference load; 0 in curtailment.
		double slope = 0.0;
	};

	ReferenceSnapshot snapshot_reference(const MarginalCostModel &model, const ReferenceSolution &reference, const FleetSpec &fleet);

	struct StepObservation
	{
		int step = 0;
		double clearing_price = 0.0;
		int starts = 0;
	};

	struct ConsistencyRow
	{
		int step = 0;
		double price_gap = 0.0;
		double price_lower = 0.0;
		double price_upper = 0.0;
		bool price_ok = true;
		int start_gap = 0;
		bool count_applicable = false;
		int count_lower = 0;
		int count_upper = 0;
		bool count_ok = true;
		/// The affine-slope premise holds at this step (not curtailed at the reference).
		bool corollary_applicable = false;
		bool corollary_ok = true;
	};

	struct ConsistencyReport
	{
		std::vector<ConsistencyRow> rows;
		int corollary_lower = 0;
		int corollary_upper = 0;
		int price_violations = 0;
		int count_violations = 0;
		int corollary_violations = 0;
		/// Steps where the premise fails; reported, never counted as passes.
		int corollary_inapplicable = 0;
	};

	/// Per-step price and start-count deviations against their bounds; `eta`
	/// is the hard lower bound on forecast errors. `affine_slope` is c for an
	/// affine marginal cost and 0 otherwise.
	ConsistencyReport consistency_bounds(const std::vector<StepObservation> &trace, const std::vector<ReferenceSnapshot> &reference, double eta,
										 const FleetSpec &fleet, double affine_slope, double tolerance = 1e-9);

	/// Payment minus the cheapest feasible start at realized prices.
	double regret(const DeviceSpec &spec, double payment, const Profile &clearing_prices, double step_minutes);

	/// Payment for running the device from `start` at the given prices.
	double retrospective_payment(const DeviceSpec &spec, int start, const Profile &prices, double step_minutes);

} // namespace fmbc
