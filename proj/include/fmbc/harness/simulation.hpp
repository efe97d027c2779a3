#pragma once

#include "fmbc/analysis.hpp"
#include "fmbc/auction.hpp"
#include "fmbc/facilitator.hpp"
#include "fmbc/harness/profiles.hpp"
#include "fmbc/harness/scenario.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fmbc
{
	struct StepRecord
	{
		int step = 0;
		double clearing_price = 0.0;
		double reference_price = 0.0;
		double inflexible = 0.0;
		double wind = 0.0;
		double renewable_used = 0.0;
		double generation = 0.0;
		/// Flexible (device) consumption actually served.
		double flexible = 0.0;
		int starts = 0;
		int reference_starts = 0;
		double reference_load = 0.0;
		bool tie = false;
		double marginal_probability = 0.0;
		double budget_imbalance = 0.0;
		double generation_cost = 0.0;
	};

	struct DeviceRecord
	{
		DeviceId id = 0;
		int deadline = 0;
		int effective_deadline = 0;
		int start = -1;
		double payment = 0.0;
		/// Start slot and payment under the initial reference (EDF realization).
		int reference_start = -1;
		double reference_payment = 0.0;
		double regret = 0.0;
	};

	struct RunSummary
	{
		std::string scenario;
		std::string policy;
		std::uint64_t seed = 0;
		double day_ahead_uncertainty = 0.0;
		int devices = 0;
		int steps = 0;
		double total_cost = 0.0;
		double reference_cost = 0.0;
		/// (total - reference) / reference.
		double cost_gap = 0.0;
		double mean_payment_delta = 0.0;
		double sd_payment_delta = 0.0;
		double min_regret = 0.0;
		double mean_regret = 0.0;
		double max_regret = 0.0;
		double total_budget_imbalance = 0.0;
		int ties = 0;
		int max_start_gap = 0;
		int min_start_gap = 0;
	};

	struct RunTrace
	{
		std::vector<StepRecord> steps;
		std::vector<DeviceRecord> devices;
		std::vector<ReferenceSnapshot> snapshots;
		/// Initial (whole-horizon) reference.
		ReferenceSolution reference;
		RunSummary summary;
	};

	/// One closed-loop simulation of `scenario` with its own seed and policy.
	RunTrace run(const Scenario &scenario);
	RunTrace run(const Scenario &scenario, const ScenarioInputs &inputs);

	struct SweepRow
	{
		int nu_index = 0;
		double nu = 0.0;
		int replication = 0;
		std::uint64_t seed = 0;
		bool ok = false;
		std::string error;
		RunSummary summary;
	};

	struct SweepDeviceRow
	{
		int nu_index = 0;
		double nu = 0.0;
		int replication = 0;
		DeviceId id = 0;
		double payment_delta = 0.0;
		double regret = 0.0;
	};

	struct SweepResult
	{
		std::vector<SweepRow> runs;
		std::vector<SweepDeviceRow> devices;
	};

	/// Seed for replication r at uncertainty index i: derive_seed(base, "sweep", {i, r}).
	std::uint64_t sweep_seed(std::uint64_t base, int nu_index, int replication);

	SweepResult sweep(const Scenario &scenario, const std::vector<double> &nus, int replications);

	struct PolicyComparison
	{
		std::vector<PolicyVariant> policies;
		std::vector<RunTrace> traces;
	};

	/// Same inputs and seed under every policy variant.
	PolicyComparison compare_policies(const Scenario &scenario);

	/// Median of a copy of the values (mean of the two middle values for even sizes).
	double median(std::vector<double> values);

	struct TraceAnalysis
	{
		EquilibriumReport nash;
		ConsistencyReport consistency;
		double eta = 0.0;
		std::vector<double> regrets;
	};

	/// Equilibrium, consistency and regret reports for a finished run.
	TraceAnalysis analyze_trace(const Scenario &scenario, const ScenarioInputs &inputs, const RunTrace &trace);

} // namespace fmbc
