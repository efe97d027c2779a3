#include "fmbc/core.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace fmbc
{
	const char *to_string(ErrorKind kind)
	{
		switch (kind)
		{
		case ErrorKind::capacity_exceeded: return "capacity_exceeded";
		case ErrorKind::domain: return "domain";
		case ErrorKind::horizon: return "horizon";
		case ErrorKind::infeasible_device: return "infeasible_device";
		case ErrorKind::infeasible_schedule: return "infeasible_schedule";
		case ErrorKind::clearing_failure: return "clearing_failure";
		case ErrorKind::consistency: return "consistency";
		case ErrorKind::parse: return "parse";
		case ErrorKind::guard_exceeded: return "guard_exceeded";
		case ErrorKind::invalid_scenario: return "invalid_scenario";
		}
		return "unknown";
	}

	void TimeGrid::validate() const
	{
		if (num_steps < 1)
			throw Error(ErrorKind::invalid_scenario, fmt::format("time grid needs at least one step, got {}", num_steps));
		if (!(step_minutes > 0.0))
			throw Error(ErrorKind::invalid_scenario, fmt::format("time step must be positive, got {} min", step_minutes));
	}

	void DeviceSpec::validate(const TimeGrid &grid, int first_schedulable) const
	{
		if (pattern.empty())
			throw Error(ErrorKind::invalid_scenario, fmt::format("device {}: empty consumption pattern", id));
		for (double p : pattern)
			if (!(p >= 0.0) || !std::isfinite(p))
				throw Error(ErrorKind::invalid_scenario, fmt::format("device {}: negative or non-finite power {}", id, p));
		if (latest_start() < first_schedulable)
			throw Error(ErrorKind::infeasible_device,
						fmt::format("device {}: deadline {} leaves no start at or after step {} (duration {})", id, deadline, first_schedulable, duration()));
		if (deadline > grid.num_steps)
			throw Error(ErrorKind::horizon, fmt::format("device {}: deadline {} beyond horizon {}", id, deadline, grid.num_steps));
	}

	void DeviceState::advance(const DeviceSpec &spec, int t, bool consumed)
	{
		if (finished(spec))
			return;
		if (waiting())
		{
			if (consumed)
			{
				status = 1;
				start_time = t;
			}
			else if (t >= effective_deadline - spec.duration())
				throw Error(ErrorKind::infeasible_device, fmt::format("device {} missed its latest start {} at step {}", spec.id, effective_deadline - spec.duration(), t));
			return;
		}
		if (!consumed)
			throw Error(ErrorKind::consistency, fmt::format("device {} interrupted at cycle position {} (step {})", spec.id, status, t));
		++status;
	}

	void TabulatedCurve::validate() const
	{
		if (power.size() < 2 || power.size() != price.size())
			throw Error(ErrorKind::invalid_scenario, "tabulated curve needs at least two matching breakpoints");
		if (power.front() != 0.0)
			throw Error(ErrorKind::invalid_scenario, "tabulated curve must start at zero generation");
		for (std::size_t i = 1; i < power.size(); ++i)
		{
			if (!(power[i] > power[i - 1]))
				throw Error(ErrorKind::invalid_scenario, "tabulated curve power breakpoints must be increasing");
			if (price[i] < price[i - 1])
				throw Error(ErrorKind::invalid_scenario, "tabulated curve prices must be non-decreasing");
		}
		if (price.front() < 0.0)
			throw Error(ErrorKind::invalid_scenario, "tabulated curve prices must be non-negative");
	}

	MarginalCostModel MarginalCostModel::affine(double k, Profile renewable)
	{
		if (!(k > 0.0))
			throw Error(ErrorKind::invalid_scenario, fmt::format("affine cost parameter k must be positive, got {}", k));
		MarginalCostModel model;
		model.curve = AffineCurve{k};
		model.renewable = std::move(renewable);
		return model;
	}

	MarginalCostModel MarginalCostModel::tabulated(TabulatedCurve curve, Profile renewable)
	{
		curve.validate();
		MarginalCostModel model;
		model.curve = std::move(curve);
		model.renewable = std::move(renewable);
		return model;
	}

	double MarginalCostModel::renewable_at(int t) const
	{
		if (renewable.size() == 0)
			return 0.0;
		if (t < 0 || t >= renewable.size())
			throw Error(ErrorKind::horizon, fmt::format("renewable profile has no step {}", t));
		return renewable[t];
	}

	namespace
	{
		std::size_t segment_of(const TabulatedCurve &c, double generation)
		{
			if (generation > c.capacity())
				throw Error(ErrorKind::capacity_exceeded, fmt::format("generation {} kW exceeds tabulated capacity {} kW", generation, c.capacity()));
			auto it = std::upper_bound(c.power.begin(), c.power.end(), generation);
			std::size_t hi = static_cast<std::size_t>(it - c.power.begin());
			return std::clamp<std::size_t>(hi, 1, c.power.size() - 1) - 1;
		}

		double interpolate(const TabulatedCurve &c, std::size_t seg, double generation)
		{
			const double w = (generation - c.power[seg]) / (c.power[seg + 1] - c.power[seg]);
			return c.price[seg] + w * (c.price[seg + 1] - c.price[seg]);
		}
	} // namespace

	double MarginalCostModel::generator_price(double generation) const
	{
		if (const auto *a = std::get_if<AffineCurve>(&curve))
			return generation / a->k;
		const auto &c = std::get<TabulatedCurve>(curve);
		return interpolate(c, segment_of(c, generation), generation);
	}

	double MarginalCostModel::generator_energy_cost(double generation) const
	{
		if (const auto *a = std::get_if<AffineCurve>(&curve))
			return generation * generation / (2.0 * a->k);
		const auto &c = std::get<TabulatedCurve>(curve);
		const std::size_t last = segment_of(c, generation);
		double area = 0.0;
		for (std::size_t s = 0; s < last; ++s)
			area += 0.5 * (c.price[s] + c.price[s + 1]) * (c.power[s + 1] - c.power[s]);
		const double top = interpolate(c, last, generation);
		area += 0.5 * (c.price[last] + top) * (generation - c.power[last]);
		return area;
	}

	double MarginalCostModel::generator_quantity_at(double price) const
	{
		if (const auto *a = std::get_if<AffineCurve>(&curve))
			return std::max(0.0, price * a->k);
		const auto &c = std::get<TabulatedCurve>(curve);
		if (price < c.price.front())
			return 0.0;
		if (price >= c.price.back())
			return c.capacity();
		// last breakpoint whose price is <= target, then move along the rising segment
		auto it = std::upper_bound(c.price.begin(), c.price.end(), price);
		const std::size_t seg = static_cast<std::size_t>(it - c.price.begin()) - 1;
		const double rise = c.price[seg + 1] - c.price[seg];
		const double w = (price - c.price[seg]) / rise;
		return c.power[seg] + w * (c.power[seg + 1] - c.power[seg]);
	}

	double MarginalCostModel::generator_capacity() const
	{
		if (std::holds_alternative<AffineCurve>(curve))
			return kInf;
		return std::get<TabulatedCurve>(curve).capacity();
	}

	double marginal_price(const MarginalCostModel &model, int t, double total_demand)
	{
		if (total_demand < 0.0)
			throw Error(ErrorKind::domain, fmt::format("negative demand {} kW at step {}", total_demand, t));
		return model.generator_price(flexible_generation(model, t, total_demand));
	}

	double generation_cost(const MarginalCostModel &model, int t, double total_demand, double step_minutes)
	{
		if (total_demand < 0.0)
			throw Error(ErrorKind::domain, fmt::format("negative demand {} kW at step {}", total_demand, t));
		return step_minutes * model.generator_energy_cost(flexible_generation(model, t, total_demand));
	}

	double delta_m(const MarginalCostModel &model, int t, double reference_load, double device_power)
	{
		if (device_power < 0.0 || device_power > reference_load)
			throw Error(ErrorKind::domain, fmt::format("delta_m needs 0 <= P_i <= P*, got P_i={} P*={}", device_power, reference_load));
		return marginal_price(model, t, reference_load) - marginal_price(model, t, reference_load - device_power);
	}

	double supply_quantity(const MarginalCostModel &model, int t, double price)
	{
		return model.renewable_at(t) + model.generator_quantity_at(price);
	}

	Profile implied_load(const Profile &inflexible, const std::vector<DeviceSpec> &devices, const std::map<DeviceId, int> &starts)
	{
		Profile load = inflexible;
		for (const auto &d : devices)
		{
			auto it = starts.find(d.id);
			if (it == starts.end())
				throw Error(ErrorKind::consistency, fmt::format("device {} has no start time", d.id));
			for (int i = 0; i < d.duration(); ++i)
			{
				const int t = it->second + i;
				if (t < 0 || t >= load.size())
					throw Error(ErrorKind::horizon, fmt::format("device {} runs outside the horizon at step {}", d.id, t));
				load[t] += d.pattern[static_cast<std::size_t>(i)];
			}
		}
		return load;
	}

	void check_schedule(const Schedule &schedule, const Profile &inflexible, const std::vector<DeviceSpec> &devices, double tolerance)
	{
		for (const auto &d : devices)
		{
			auto it = schedule.starts.find(d.id);
			if (it != schedule.starts.end() && it->second > d.latest_start())
				throw Error(ErrorKind::consistency, fmt::format("device {} starts at {} after its latest start {}", d.id, it->second, d.latest_start()));
		}
		const Profile load = implied_load(inflexible, devices, schedule.starts);
		if (load.size() != schedule.aggregate_load.size() || (load - schedule.aggregate_load).cwiseAbs().maxCoeff() > tolerance)
			throw Error(ErrorKind::consistency, "aggregate load disagrees with device starts");
	}

} // namespace fmbc
