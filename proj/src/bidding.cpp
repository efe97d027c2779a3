#include "fmbc/bidding.hpp"

#include <boost/math/distributions/normal.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fmbc
{
	StepDistribution::StepDistribution(DistributionFamily family, double mean, double sd, std::vector<double> support, std::vector<double> prob)
		: family_(family), mean_(mean), sd_(sd), support_(std::move(support)), prob_(std::move(prob))
	{
		cum_prob_.resize(support_.size());
		cum_weighted_.resize(support_.size());
		double p = 0.0, w = 0.0;
		for (std::size_t i = 0; i < support_.size(); ++i)
		{
			p += prob_[i];
			w += prob_[i] * support_[i];
			cum_prob_[i] = p;
			cum_weighted_[i] = w;
		}
	}

	StepDistribution StepDistribution::point_mass(double value)
	{
		if (!(value >= 0.0) || !std::isfinite(value))
			throw Error(ErrorKind::domain, fmt::format("price point mass must be finite and non-negative, got {}", value));
		return StepDistribution(DistributionFamily::point_mass, value, 0.0, {value}, {1.0});
	}

	namespace
	{
		const std::vector<double> &standard_normal_quantiles(int points)
		{
			static thread_local std::vector<double> cached;
			if (static_cast<int>(cached.size()) != points)
			{
				const boost::math::normal_distribution<double> unit;
				cached.resize(static_cast<std::size_t>(points));
				for (int i = 0; i < points; ++i)
					cached[static_cast<std::size_t>(i)] = boost::math::quantile(unit, (i + 0.5) / points);
			}
			return cached;
		}
	} // namespace

	StepDistribution StepDistribution::log_normal(double mean, double sd, int points)
	{
		if (!(mean >= 0.0) || !std::isfinite(mean) || !(sd >= 0.0))
			throw Error(ErrorKind::domain, fmt::format("log-normal needs finite mean >= 0 and sd >= 0, got mean={} sd={}", mean, sd));
		if (mean == 0.0 || sd == 0.0)
			return point_mass(mean);
		if (points < 1)
			throw Error(ErrorKind::domain, "log-normal discretization needs at least one point");

		const double sigma2 = std::log1p((sd * sd) / (mean * mean));
		const double sigma = std::sqrt(sigma2);
		const double mu = std::log(mean) - 0.5 * sigma2;
		const auto &z = standard_normal_quantiles(points);

		std::vector<double> support(static_cast<std::size_t>(points));
		for (std::size_t i = 0; i < support.size(); ++i)
			support[i] = std::exp(mu + sigma * z[i]);
		const double raw_mean = std::accumulate(support.begin(), support.end(), 0.0) / points;
		for (double &x : support)
			x *= mean / raw_mean;

		std::vector<double> prob(support.size(), 1.0 / points);
		return StepDistribution(DistributionFamily::log_normal, mean, sd, std::move(support), std::move(prob));
	}

	StepDistribution StepDistribution::empirical(std::vector<double> values, std::vector<double> probabilities)
	{
		if (values.empty() || values.size() != probabilities.size())
			throw Error(ErrorKind::domain, "empirical distribution needs matching non-empty values and probabilities");
		std::vector<std::size_t> order(values.size());
		std::iota(order.begin(), order.end(), 0);
		std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

		std::vector<double> support, prob;
		double total = 0.0, mean = 0.0, second = 0.0;
		for (std::size_t i : order)
		{
			if (!(values[i] >= 0.0) || !std::isfinite(values[i]) || !(probabilities[i] >= 0.0))
				throw Error(ErrorKind::domain, "empirical distribution needs finite non-negative support and probabilities");
			support.push_back(values[i]);
			prob.push_back(probabilities[i]);
			total += probabilities[i];
			mean += probabilities[i] * values[i];
			second += probabilities[i] * values[i] * values[i];
		}
		if (std::abs(total - 1.0) > 1e-12)
			throw Error(ErrorKind::domain, fmt::format("empirical probabilities sum to {}, not 1", total));
		const double sd = std::sqrt(std::max(0.0, second - mean * mean));
		return StepDistribution(DistributionFamily::empirical, mean, sd, std::move(support), std::move(prob));
	}

	std::size_t StepDistribution::count_at_or_below(double x) const
	{
		return static_cast<std::size_t>(std::upper_bound(support_.begin(), support_.end(), x) - support_.begin());
	}

	double StepDistribution::mass_at_or_below(double x) const
	{
		const std::size_t n = count_at_or_below(x);
		if (n == support_.size())
			return 1.0;
		return n == 0 ? 0.0 : cum_prob_[n - 1];
	}

	double StepDistribution::partial_mean_at_or_below(double x) const
	{
		const std::size_t n = count_at_or_below(x);
		return n == 0 ? 0.0 : cum_weighted_[n - 1];
	}

	const StepDistribution &PriceForecast::at(int t) const
	{
		if (!covers(t))
			throw Error(ErrorKind::horizon, fmt::format("forecast covers steps [{}, {}), step {} requested", first_step, end_step(), t));
		return steps[static_cast<std::size_t>(t - first_step)];
	}

	PriceForecast PriceForecast::point_forecast() const
	{
		PriceForecast out{first_step, {}};
		out.steps.reserve(steps.size());
		for (const auto &s : steps)
			out.steps.push_back(StepDistribution::point_mass(s.mean()));
		return out;
	}

	std::string_view to_string(PolicyVariant policy)
	{
		switch (policy)
		{
		case PolicyVariant::mdp_optimal: return "fmbc";
		case PolicyVariant::point_forecast: return "point-forecast";
		case PolicyVariant::naive: return "naive";
		case PolicyVariant::latest_start: return "latest-start";
		}
		return "unknown";
	}

	PolicyVariant parse_policy(std::string_view name)
	{
		if (name == "fmbc" || name == "mdp-optimal" || name == "mdp")
			return PolicyVariant::mdp_optimal;
		if (name == "point-forecast")
			return PolicyVariant::point_forecast;
		if (name == "naive")
			return PolicyVariant::naive;
		if (name == "latest-start")
			return PolicyVariant::latest_start;
		throw Error(ErrorKind::invalid_scenario, fmt::format("unknown policy '{}'", name));
	}

	double ValueFunction::cost(int t) const
	{
		if (t < first_step || t > latest_start)
			throw Error(ErrorKind::horizon, fmt::format("value function defined on [{}, {}], step {} requested", first_step, latest_start, t));
		return optimal_cost[static_cast<std::size_t>(t - first_step)];
	}

	double ValueFunction::threshold_at(int t) const
	{
		if (t < first_step || t > latest_start)
			throw Error(ErrorKind::horizon, fmt::format("value function defined on [{}, {}], step {} requested", first_step, latest_start, t));
		return threshold[static_cast<std::size_t>(t - first_step)];
	}

	namespace
	{
		double tail_cost(const DeviceSpec &spec, int t, const PriceForecast &forecast, double dt)
		{
			double tail = 0.0;
			for (int i = 1; i < spec.duration(); ++i)
				tail += forecast.mean(t + i) * spec.pattern[static_cast<std::size_t>(i)] * dt;
			return tail;
		}

		void require_window(const DeviceSpec &spec, int t, const PriceForecast &forecast)
		{
			if (!forecast.covers(t) || !forecast.covers(t + spec.duration() - 1))
				throw Error(ErrorKind::horizon, fmt::format("device {}: forecast [{}, {}) does not cover cycle starting at {}", spec.id,
															forecast.first_step, forecast.end_step(), t));
		}
	} // namespace

	double expected_start_cost(const DeviceSpec &spec, int t, double price, const PriceForecast &forecast, double step_minutes)
	{
		require_window(spec, t, forecast);
		return price * spec.pattern.front() * step_minutes + tail_cost(spec, t, forecast, step_minutes);
	}

	ValueFunction compute_value_function(const DeviceSpec &spec, const DeviceState &state, int t_now, const PriceForecast &forecast, double step_minutes)
	{
		if (!state.waiting())
			throw Error(ErrorKind::domain, fmt::format("device {}: value function only defined while waiting", spec.id));
		const int latest = state.effective_deadline - spec.duration();
		if (t_now > latest)
			throw Error(ErrorKind::infeasible_device, fmt::format("device {}: step {} is past its latest start {}", spec.id, t_now, latest));
		require_window(spec, t_now, forecast);
		require_window(spec, latest, forecast);

		ValueFunction vf;
		vf.first_step = t_now;
		vf.latest_start = latest;
		const std::size_t n = static_cast<std::size_t>(latest - t_now + 1);
		vf.optimal_cost.assign(n, 0.0);
		vf.threshold.assign(n, kInf);

		const double p0dt = spec.pattern.front() * step_minutes;
		vf.optimal_cost[n - 1] = forecast.mean(latest) * p0dt + tail_cost(spec, latest, forecast, step_minutes);

		for (std::size_t k = n - 1; k-- > 0;)
		{
			const int t = t_now + static_cast<int>(k);
			const double wait = vf.optimal_cost[k + 1];
			const double tail = tail_cost(spec, t, forecast, step_minutes);
			const auto &x = forecast.at(t);
			if (p0dt > 0.0)
			{
				const double z = (wait - tail) / p0dt;
				const double below = x.mass_at_or_below(z);
				vf.threshold[k] = z;
				vf.optimal_cost[k] = below * tail + p0dt * x.partial_mean_at_or_below(z) + (1.0 - below) * wait;
			}
			else
			{
				// start cost does not depend on the price
				vf.threshold[k] = tail <= wait ? kInf : -kInf;
				vf.optimal_cost[k] = std::min(tail, wait);
			}
		}
		return vf;
	}

	double draw_tie_token(std::mt19937_64 &rng)
	{
		return static_cast<double>(rng() >> 11) * 0x1.0p-53;
	}

	namespace
	{
		BidFunction non_waiting_bid(const DeviceSpec &spec, const DeviceState &state)
		{
			if (state.finished(spec))
				return {spec.id, -kInf, 0.0, 0.0};
			return {spec.id, kInf, spec.pattern[static_cast<std::size_t>(state.status)], 0.0};
		}
	} // namespace

	BidFunction threshold_bid(const DeviceSpec &spec, const DeviceState &state, int t, const ValueFunction &value, const PriceForecast &forecast,
							  double step_minutes, std::mt19937_64 &rng)
	{
		BidFunction bid;
		if (!state.waiting())
			bid = non_waiting_bid(spec, state);
		else if (t >= state.effective_deadline - spec.duration())
			bid = {spec.id, kInf, spec.pattern.front(), 0.0};
		else
		{
			const double p0dt = spec.pattern.front() * step_minutes;
			const double wait = value.cost(t + 1);
			const double tail = tail_cost(spec, t, forecast, step_minutes);
			const double z = p0dt > 0.0 ? (wait - tail) / p0dt : (tail <= wait ? kInf : -kInf);
			bid = {spec.id, z, spec.pattern.front(), 0.0};
		}
		bid.tie_token = draw_tie_token(rng);
		return bid;
	}

	DeviceState apply_deadline_adjustment(const DeviceSpec &spec, const DeviceState &state, int t, const PriceForecast &forecast, double threshold)
	{
		DeviceState out = state;
		if (!state.waiting() || t >= state.effective_deadline - spec.duration())
			return out;
		if (forecast.at(t).prob_above(threshold) == 0.0)
			out.effective_deadline = t + spec.duration();
		return out;
	}

	double waiting_threshold(PolicyVariant policy, const DeviceSpec &spec, const DeviceState &state, int t, const PriceForecast &forecast, double step_minutes)
	{
		const int latest = state.effective_deadline - spec.duration();
		if (t > latest)
			throw Error(ErrorKind::infeasible_device, fmt::format("device {}: step {} is past its latest start {}", spec.id, t, latest));
		if (t == latest)
			return kInf;

		switch (policy)
		{
		case PolicyVariant::latest_start:
			return -kInf;
		case PolicyVariant::naive:
		{
			// expected prices strictly before the latest start
			double lo = kInf, hi = -kInf;
			for (int s = t; s < latest; ++s)
			{
				lo = std::min(lo, forecast.mean(s));
				hi = std::max(hi, forecast.mean(s));
			}
			const int span = latest - 1;
			if (span <= 0)
				return hi;
			return lo + t * (hi - lo) / span;
		}
		case PolicyVariant::point_forecast:
		{
			const PriceForecast point = forecast.point_forecast();
			const ValueFunction vf = compute_value_function(spec, state, t, point, step_minutes);
			return vf.threshold_at(t);
		}
		case PolicyVariant::mdp_optimal:
		{
			const ValueFunction vf = compute_value_function(spec, state, t, forecast, step_minutes);
			return vf.threshold_at(t);
		}
		}
		return kInf;
	}

	BidFunction baseline_bid(PolicyVariant policy, const DeviceSpec &spec, const DeviceState &state, int t, const PriceForecast &forecast,
							 double step_minutes, std::mt19937_64 &rng)
	{
		if (policy == PolicyVariant::mdp_optimal)
			throw Error(ErrorKind::domain, "baseline_bid does not handle the optimal policy");
		return policy_bid(policy, spec, state, t, forecast, step_minutes, rng);
	}

	BidFunction policy_bid(PolicyVariant policy, const DeviceSpec &spec, const DeviceState &state, int t, const PriceForecast &forecast,
						   double step_minutes, std::mt19937_64 &rng)
	{
		BidFunction bid;
		if (!state.waiting())
			bid = non_waiting_bid(spec, state);
		else
		{
			const double threshold = waiting_threshold(policy, spec, state, t, forecast, step_minutes);
			bid = {spec.id, threshold, threshold == -kInf ? 0.0 : spec.pattern.front(), 0.0};
		}
		bid.tie_token = draw_tie_token(rng);
		return bid;
	}

} // namespace fmbc
