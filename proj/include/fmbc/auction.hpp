#pragma once

#include "fmbc/bidding.hpp"
#include "fmbc/core.hpp"

#include <map>
#include <optional>
#include <random>
#include <vector>

namespace fmbc
{
	/// Absolute price tolerance used to group equal thresholds into a tie.
	inline constexpr double kTiePriceTolerance = 1e-12;

	struct AggregateDemand
	{
		double inflexible = 0.0;
		std::vector<BidFunction> bids;

		/// L + sum of quantities whose threshold is at or above `price`.
		double at(double price) const;
	};

	struct MarketOutcome
	{
		int step = 0;
		double price = 0.0;
		double inflexible = 0.0;
		std::vector<DeviceId> accepted;
		/// Bids sharing the clearing price; empty unless `tie`.
		std::vector<BidFunction> tied;
		bool tie = false;
		bool resolved = false;
		std::optional<DeviceId> marginal;
		bool marginal_accepted = false;
		double marginal_probability = 0.0;
		std::optional<double> rho_cutoff;
		/// Supply offered at the clearing price (renewables + flexible).
		double supply_at_price = 0.0;
		/// Inflexible plus accepted flexible consumption.
		double accepted_demand = 0.0;
		/// Quantity the supply side is paid for.
		double cleared_supply = 0.0;
		double generation = 0.0;
		double renewable_used = 0.0;
	};

	/// Clears one step. On a tie the outcome lists the tied bids and must be
	/// passed through tie_break before settlement.
	MarketOutcome clear(const MarginalCostModel &model, int t, const AggregateDemand &demand);

	MarketOutcome tie_break(MarketOutcome outcome, const MarginalCostModel &model, int t, std::mt19937_64 &rng);

	/// clear followed by tie_break when needed.
	MarketOutcome clear_market(const MarginalCostModel &model, int t, const AggregateDemand &demand, std::mt19937_64 &rng);

	struct Settlement
	{
		std::map<DeviceId, double> device_payments;
		double load_payments = 0.0;
		double supply_revenue = 0.0;
		double budget_imbalance = 0.0;
	};

	Settlement settle(const MarketOutcome &outcome, const AggregateDemand &demand, double step_minutes);

} // namespace fmbc
