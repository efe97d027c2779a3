#include "fmbc/auction.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cassert>
#include <cmath>

namespace fmbc
{
	double AggregateDemand::at(double price) const
	{
		double total = inflexible;
		for (const auto &b : bids)
			total += b.demand_at(price);
		return total;
	}

	namespace
	{
		double price_or_inf(const MarginalCostModel &model, int t, double demand)
		{
			const double generation = flexible_generation(model, t, demand);
			if (generation > model.generator_capacity())
				return kInf;
			return model.generator_price(generation);
		}

		void finish_dispatch(MarketOutcome &out, const MarginalCostModel &model, int t)
		{
			const double wind = model.renewable_at(t);
			out.renewable_used = std::min(wind, out.accepted_demand);
			out.generation = out.accepted_demand - out.renewable_used;
		}
	} // namespace

	MarketOutcome clear(const MarginalCostModel &model, int t, const AggregateDemand &demand)
	{
		if (!(demand.inflexible >= 0.0))
			throw Error(ErrorKind::domain, fmt::format("negative inflexible load {} at step {}", demand.inflexible, t));

		MarketOutcome out;
		out.step = t;
		out.inflexible = demand.inflexible;

		double base = demand.inflexible;
		std::vector<BidFunction> finite;
		for (const auto &b : demand.bids)
		{
			if (b.quantity <= 0.0 || b.threshold == -kInf)
				continue;
			if (b.threshold == kInf)
			{
				base += b.quantity;
				out.accepted.push_back(b.device);
			}
			else
				finite.push_back(b);
		}
		if (price_or_inf(model, t, base) == kInf)
			throw Error(ErrorKind::clearing_failure,
						fmt::format("step {}: price-insensitive demand {} kW exceeds supply capacity", t, base));

		std::stable_sort(finite.begin(), finite.end(), [](const BidFunction &a, const BidFunction &b) {
			return a.threshold != b.threshold ? a.threshold > b.threshold : a.device < b.device;
		});

		double accepted = base;
		std::size_t j = 0;
		while (j < finite.size())
		{
			const double level = finite[j].threshold;
			std::size_t end = j;
			double group = 0.0;
			while (end < finite.size() && level - finite[end].threshold <= kTiePriceTolerance)
				group += finite[end++].quantity;

			if (price_or_inf(model, t, accepted + group) <= level)
			{
				for (std::size_t i = j; i < end; ++i)
					out.accepted.push_back(finite[i].device);
				accepted += group;
				j = end;
				continue;
			}
			if (price_or_inf(model, t, accepted) <= level)
			{
				// supply crosses the horizontal part of this demand step
				out.tie = true;
				out.price = level;
				out.tied.assign(finite.begin() + static_cast<std::ptrdiff_t>(j), finite.begin() + static_cast<std::ptrdiff_t>(end));
				out.supply_at_price = supply_quantity(model, t, level);
				out.accepted_demand = accepted;
				return out;
			}
			break;
		}

		out.price = price_or_inf(model, t, accepted);
		out.accepted_demand = accepted;
		out.supply_at_price = supply_quantity(model, t, out.price);
		out.cleared_supply = accepted;
		out.resolved = true;
		finish_dispatch(out, model, t);
		return out;
	}

	MarketOutcome tie_break(MarketOutcome out, const MarginalCostModel &model, int t, std::mt19937_64 &rng)
	{
		if (!out.tie || out.resolved)
			return out;

		std::vector<BidFunction> tied = out.tied;
		std::stable_sort(tied.begin(), tied.end(), [](const BidFunction &a, const BidFunction &b) {
			return a.tie_token != b.tie_token ? a.tie_token < b.tie_token : a.device < b.device;
		});

		const double supply = out.supply_at_price;
		double demand = out.accepted_demand;
		for (const auto &b : tied)
		{
			if (demand + b.quantity <= supply)
			{
				demand += b.quantity;
				out.accepted.push_back(b.device);
				out.rho_cutoff = b.tie_token;
				continue;
			}
			const double gamma = std::max(0.0, supply - demand);
			assert(gamma < b.quantity);
			out.marginal = b.device;
			out.marginal_probability = gamma / b.quantity;
			out.marginal_accepted = draw_tie_token(rng) < out.marginal_probability;
			if (out.marginal_accepted)
			{
				demand += b.quantity;
				out.accepted.push_back(b.device);
				out.rho_cutoff = b.tie_token;
			}
			break;
		}

		out.accepted_demand = demand;
		out.cleared_supply = supply;
		out.resolved = true;
		finish_dispatch(out, model, t);
		return out;
	}

	MarketOutcome clear_market(const MarginalCostModel &model, int t, const AggregateDemand &demand, std::mt19937_64 &rng)
	{
		MarketOutcome out = clear(model, t, demand);
		if (out.tie)
			out = tie_break(std::move(out), model, t, rng);
		return out;
	}

	Settlement settle(const MarketOutcome &outcome, const AggregateDemand &demand, double step_minutes)
	{
		if (!outcome.resolved)
			throw Error(ErrorKind::domain, fmt::format("step {}: cannot settle an unresolved tie", outcome.step));
		Settlement s;
		const double x = outcome.price;
		std::map<DeviceId, double> quantity;
		for (const auto &b : demand.bids)
			quantity[b.device] = b.quantity;

		double flexible = 0.0;
		for (DeviceId id : outcome.accepted)
		{
			const double q = quantity.at(id);
			flexible += q;
			s.device_payments[id] = x * q * step_minutes;
		}
		s.load_payments = x * step_minutes * (outcome.inflexible + flexible);
		s.supply_revenue = x * step_minutes * outcome.cleared_supply;
		s.budget_imbalance = x * step_minutes * (outcome.accepted_demand - outcome.cleared_supply);
		return s;
	}

} // namespace fmbc
