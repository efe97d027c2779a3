#pragma once

#include "fmbc/core.hpp"

#include <random>
#include <span>
#include <string_view>

namespace fmbc
{
	enum class DistributionFamily
	{
		log_normal,
		point_mass,
		empirical,
	};

	/// Discretized price distribution for a single step. Support is sorted
	/// ascending; prefix sums make threshold expectations O(log N).
	class StepDistribution
	{
	public:
		static constexpr int kDefaultPoints = 101;

		static StepDistribution point_mass(double value);
		/// Arithmetic mean / SD parameterization; collapses to a point mass when
		/// either is zero. The support is rescaled so its mean equals `mean`.
		static StepDistribution log_normal(double mean, double sd, int points = kDefaultPoints);
		static StepDistribution empirical(std::vector<double> values, std::vector<double> probabilities);

		DistributionFamily family() const { return family_; }
		double mean() const { return mean_; }
		double sd() const { return sd_; }
		std::span<const double> support() const { return support_; }
		std::span<const double> probabilities() const { return prob_; }

		/// Pr(X <= x) and E[X; X <= x].
		double mass_at_or_below(double x) const;
		double partial_mean_at_or_below(double x) const;
		double prob_above(double x) const { return 1.0 - mass_at_or_below(x); }
		double max_support() const { return support_.back(); }

	private:
		StepDistribution(DistributionFamily family, double mean, double sd, std::vector<double> support, std::vector<double> prob);
		std::size_t count_at_or_below(double x) const;

		DistributionFamily family_ = DistributionFamily::point_mass;
		double mean_ = 0.0;
		double sd_ = 0.0;
		std::vector<double> support_;
		std::vector<double> prob_;
		std::vector<double> cum_prob_;
		std::vector<double> cum_weighted_;
	};

	/// Independent per-step price distributions covering [first_step, first_step + size).
	struct PriceForecast
	{
		int first_step = 0;
		std::vector<StepDistribution> steps;

		int end_step() const { return first_step + static_cast<int>(steps.size()); }
		bool covers(int t) const { return t >= first_step && t < end_step(); }
		const StepDistribution &at(int t) const;
		double mean(int t) const { return at(t).mean(); }

		/// Same expected prices, every step collapsed to a point mass.
		PriceForecast point_forecast() const;
	};

	/// b(x) = quantity if x <= threshold else 0, with tie token rho in [0,1).
	struct BidFunction
	{
		DeviceId device = 0;
		double threshold = -kInf;
		double quantity = 0.0;
		double tie_token = 0.0;

		double demand_at(double price) const { return price <= threshold ? quantity : 0.0; }
	};

	enum class PolicyVariant
	{
		mdp_optimal,
		point_forecast,
		naive,
		latest_start,
	};

	std::string_view to_string(PolicyVariant policy);
	PolicyVariant parse_policy(std::string_view name);

	/// Optimal expected cost C*_t for t in [first_step, latest_start] and the
	/// waiting thresholds z_t (z at latest_start is +inf).
	struct ValueFunction
	{
		int first_step = 0;
		int latest_start = 0;
		std::vector<double> optimal_cost;
		std::vector<double> threshold;

		double cost(int t) const;
		double threshold_at(int t) const;
	};

	/// Expected running cost of starting at t with clearing price x_t.
	double expected_start_cost(const DeviceSpec &spec, int t, double price, const PriceForecast &forecast, double step_minutes);

	ValueFunction compute_value_function(const DeviceSpec &spec, const DeviceState &state, int t_now, const PriceForecast &forecast, double step_minutes);

	/// Uniform [0,1) token from the top 53 bits of the generator output.
	double draw_tie_token(std::mt19937_64 &rng);

	BidFunction threshold_bid(const DeviceSpec &spec, const DeviceState &state, int t, const ValueFunction &value, const PriceForecast &forecast,
							  double step_minutes, std::mt19937_64 &rng);

	/// Moves the effective deadline to t + D when the current step's price can
	/// never exceed the threshold.
	DeviceState apply_deadline_adjustment(const DeviceSpec &spec, const DeviceState &state, int t, const PriceForecast &forecast, double threshold);

	/// Threshold a waiting device submits under `policy` (+inf once forced).
	double waiting_threshold(PolicyVariant policy, const DeviceSpec &spec, const DeviceState &state, int t, const PriceForecast &forecast, double step_minutes);

	BidFunction baseline_bid(PolicyVariant policy, const DeviceSpec &spec, const DeviceState &state, int t, const PriceForecast &forecast,
							 double step_minutes, std::mt19937_64 &rng);

	/// Bid for any device state and policy; mdp_optimal goes through the value function.
	BidFunction policy_bid(PolicyVariant policy, const DeviceSpec &spec, const DeviceState &state, int t, const PriceForecast &forecast,
						   double step_minutes, std::mt19937_64 &rng);

} // namespace fmbc
