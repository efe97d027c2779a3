#include "fmbc/analysis.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace fmbc
{
	namespace
	{
		void require_cycle(const Profile &others, const DeviceSpec &spec, int t)
		{
			if (t < 0 || t + spec.duration() > others.size())
				throw Error(ErrorKind::horizon, fmt::format("device {}: cycle from step {} overruns the {}-step horizon", spec.id, t, others.size()));
		}
	} // namespace

	double system_cost_of_start(const MarginalCostModel &model, const Profile &others, const DeviceSpec &spec, int t, double step_minutes)
	{
		require_cycle(others, spec, t);
		double cost = 0.0;
		for (int i = 0; i < spec.duration(); ++i)
		{
			const double base = others[t + i];
			cost += generation_cost(model, t + i, base + spec.pattern[static_cast<std::size_t>(i)], step_minutes) -
					generation_cost(model, t + i, base, step_minutes);
		}
		return cost;
	}

	double agent_payment(const MarginalCostModel &model, const Profile &others, const DeviceSpec &spec, int t, double step_minutes)
	{
		require_cycle(others, spec, t);
		double paid = 0.0;
		for (int i = 0; i < spec.duration(); ++i)
		{
			const double p = spec.pattern[static_cast<std::size_t>(i)];
			paid += marginal_price(model, t + i, others[t + i] + p) * p;
		}
		return step_minutes * paid;
	}

	EquilibriumReport check_nash(const Schedule &allocation, const std::vector<DeviceSpec> &devices, const MarginalCostModel &model, double step_minutes,
								 double tolerance)
	{
		EquilibriumReport report;
		for (const auto &spec : devices)
		{
			const auto it = allocation.starts.find(spec.id);
			if (it == allocation.starts.end())
				throw Error(ErrorKind::consistency, fmt::format("device {} missing from the allocation", spec.id));

			DeviceEquilibrium eq;
			eq.id = spec.id;
			eq.start = it->second;
			Profile others = allocation.aggregate_load;
			require_cycle(others, spec, eq.start);
			for (int i = 0; i < spec.duration(); ++i)
				others[eq.start + i] -= spec.pattern[static_cast<std::size_t>(i)];

			const int latest = std::min(spec.latest_start(), static_cast<int>(others.size()) - spec.duration());
			for (int t = 0; t <= latest; ++t)
			{
				eq.system_cost.push_back(system_cost_of_start(model, others, spec, t, step_minutes));
				eq.payment.push_back(agent_payment(model, others, spec, t, step_minutes));
			}

			const double own = eq.payment[static_cast<std::size_t>(eq.start)];
			const double slack = tolerance * std::max(1.0, std::abs(own));
			int best_t = eq.start;
			for (int t = 0; t <= latest; ++t)
			{
				const double alt = eq.payment[static_cast<std::size_t>(t)];
				if (alt < eq.payment[static_cast<std::size_t>(best_t)])
					best_t = t;
				if (own > alt + slack)
					eq.delta_needed = std::max(eq.delta_needed, alt > 0.0 ? own / alt - 1.0 : kInf);
			}
			if (own > eq.payment[static_cast<std::size_t>(best_t)] + slack)
				report.violations.push_back({spec.id, eq.start, best_t, own - eq.payment[static_cast<std::size_t>(best_t)]});

			for (int t = 0; t < static_cast<int>(others.size()); ++t)
				for (double p : spec.pattern)
				{
					if (p == 0.0)
						continue;
					const double with = marginal_price(model, t, others[t] + p);
					if (with > 0.0)
						eq.epsilon = std::max(eq.epsilon, (with - marginal_price(model, t, std::max(0.0, others[t]))) / with);
				}

			report.worst_delta = std::max(report.worst_delta, eq.delta_needed);
			report.epsilon = std::max(report.epsilon, eq.epsilon);
			report.devices.push_back(std::move(eq));
		}
		report.delta_bound = report.epsilon < 1.0 ? report.epsilon / (1.0 - report.epsilon) : kInf;
		report.delta_within_bound = report.worst_delta <= report.delta_bound + tolerance;
		return report;
	}

	ReferenceSnapshot snapshot_reference(const MarginalCostModel &model, const ReferenceSolution &reference, const FleetSpec &fleet)
	{
		const int first = reference.first_step;
		const int end = first + reference.horizon();
		const int D = fleet.duration;
		const double P = fleet.power;

		std::vector<double> dm(static_cast<std::size_t>(reference.horizon()));
		for (int s = first; s < end; ++s)
		{
			const double load = reference.load_at(s);
			dm[static_cast<std::size_t>(s - first)] = delta_m(model, s, load, std::min(P, load));
		}
		auto increment = [&](int start) {
			double sum = 0.0;
			for (int i = 0; i < D && start + i < end; ++i)
				sum += P * dm[static_cast<std::size_t>(start + i - first)];
			return sum;
		};

		ReferenceSnapshot snap;
		snap.step = first;
		snap.price = reference.price_at(first);
		snap.starts = reference.starts_at(first);
		snap.own_increment = increment(first);
		for (int t = first + 1; t + D <= end; ++t)
			snap.later_increment = std::max(snap.later_increment, increment(t));
		snap.slope = P > 0.0 ? dm.front() / P : 0.0;
		return snap;
	}

	ConsistencyReport consistency_bounds(const std::vector<StepObservation> &trace, const std::vector<ReferenceSnapshot> &reference, double eta,
										 const FleetSpec &fleet, double affine_slope, double tolerance)
	{
		if (trace.size() != reference.size())
			throw Error(ErrorKind::consistency, fmt::format("{} observed steps but {} reference snapshots", trace.size(), reference.size()));
		if (!(eta >= 0.0))
			throw Error(ErrorKind::domain, fmt::format("forecast error bound eta must be non-negative, got {}", eta));
		if (!(fleet.power > 0.0))
			throw Error(ErrorKind::domain, "consistency bounds need rapid-starting devices (P_0 > 0)");

		const double P = fleet.power;
		const int D = fleet.duration;
		ConsistencyReport report;
		report.corollary_lower = -D - 1;
		report.corollary_upper = D;
		for (std::size_t k = 0; k < trace.size(); ++k)
		{
			const auto &obs = trace[k];
			const auto &ref = reference[k];
			if (obs.step != ref.step)
				throw Error(ErrorKind::consistency, fmt::format("observation for step {} paired with reference for step {}", obs.step, ref.step));

			ConsistencyRow row;
			row.step = obs.step;
			row.price_gap = obs.clearing_price - ref.price;
			row.price_lower = -(ref.own_increment + eta * D * P) / P;
			row.price_upper = ref.later_increment / P;
			row.price_ok = row.price_gap >= row.price_lower - tolerance && row.price_gap <= row.price_upper + tolerance;

			row.start_gap = obs.starts - ref.starts;
			row.count_applicable = affine_slope > 0.0 && ref.slope > 0.0;
			if (row.count_applicable)
			{
				const double unit = ref.slope * P * P;
				row.count_lower = -static_cast<int>(std::ceil((ref.own_increment + eta * D * P) / unit - tolerance));
				row.count_upper = static_cast<int>(std::ceil(ref.later_increment / unit - tolerance));
				row.count_ok = row.start_gap >= row.count_lower && row.start_gap <= row.count_upper;
			}
			row.corollary_applicable = affine_slope > 0.0 && std::abs(ref.slope - affine_slope) <= 1e-9 * affine_slope;
			row.corollary_ok = !row.corollary_applicable || (row.start_gap >= report.corollary_lower && row.start_gap <= report.corollary_upper);
			report.corollary_inapplicable += row.corollary_applicable ? 0 : 1;

			report.price_violations += row.price_ok ? 0 : 1;
			report.count_violations += row.count_ok ? 0 : 1;
			report.corollary_violations += row.corollary_ok ? 0 : 1;
			report.rows.push_back(row);
		}
		return report;
	}

	double retrospective_payment(const DeviceSpec &spec, int start, const Profile &prices, double step_minutes)
	{
		require_cycle(prices, spec, start);
		double paid = 0.0;
		for (int i = 0; i < spec.duration(); ++i)
			paid += prices[start + i] * spec.pattern[static_cast<std::size_t>(i)];
		return paid * step_minutes;
	}

	double regret(const DeviceSpec &spec, double payment, const Profile &clearing_prices, double step_minutes)
	{
		const int latest = std::min(spec.latest_start(), static_cast<int>(clearing_prices.size()) - spec.duration());
		double best = kInf;
		for (int s = 0; s <= latest; ++s)
			best = std::min(best, retrospective_payment(spec, s, clearing_prices, step_minutes));
		return payment - best;
	}

} // namespace fmbc
