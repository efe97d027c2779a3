#include "fmbc/bidding.hpp"
#include "support.hpp"

#include <doctest.h>

#include <numeric>
#include <random>

using namespace fmbc;
using fmbc::test::device;

namespace
{
	PriceForecast point_masses(int first, std::vector<double> prices)
	{
		PriceForecast f;
		f.first_step = first;
		for (double p : prices)
			f.steps.push_back(StepDistribution::point_mass(p));
		return f;
	}

	StepDistribution uniform3()
	{
		return StepDistribution::empirical({1.0, 2.0, 3.0}, {1.0 / 3, 1.0 / 3, 1.0 / 3});
	}

	PriceForecast random_log_normal(std::mt19937_64 &rng, int steps, double sd_scale)
	{
		std::uniform_real_distribution<double> mean(0.05, 0.5);
		std::uniform_real_distribution<double> rel(0.05, sd_scale);
		PriceForecast f;
		for (int t = 0; t < steps; ++t)
		{
			const double m = mean(rng);
			f.steps.push_back(StepDistribution::log_normal(m, m * rel(rng)));
		}
		return f;
	}
} // namespace

TEST_SUITE("bidding")
{
	TEST_CASE("expected start cost")
	{
		const DeviceSpec two{1, 5, {2.0, 2.0}};
		const auto f = point_masses(0, {0.0, 4.0, 0.0});
		CHECK(expected_start_cost(two, 0, 3.0, f, 1.0) == doctest::Approx(14.0));
		const DeviceSpec one{1, 5, {2.0}};
		CHECK(expected_start_cost(one, 1, 3.0, f, 1.0) == doctest::Approx(6.0));
		CHECK_THROWS_AS(expected_start_cost(two, 2, 3.0, f, 1.0), Error);
	}

	TEST_CASE("expected start cost, twelve-step cycle against plain summation")
	{
		std::vector<double> prices;
		for (int t = 0; t < 20; ++t)
			prices.push_back(0.2 + 0.01 * t + (t % 3 == 0 ? 0.05 : 0.0));
		const auto f = point_masses(0, prices);
		const auto spec = device(1, 20, 12, 2.0);
		double sum = 0.31 * 2.0 * 5.0;
		for (int i = 1; i < 12; ++i)
			sum += prices[static_cast<std::size_t>(4 + i)] * 2.0 * 5.0;
		CHECK(expected_start_cost(spec, 4, 0.31, f, 5.0) == doctest::Approx(sum).epsilon(1e-12));
	}

	TEST_CASE("log-normal discretization")
	{
		const auto d = StepDistribution::log_normal(0.3, 0.06);
		CHECK(d.support().size() == 101);
		double total = 0.0, mean = 0.0, second = 0.0;
		for (std::size_t i = 0; i < d.support().size(); ++i)
		{
			total += d.probabilities()[i];
			mean += d.probabilities()[i] * d.support()[i];
			second += d.probabilities()[i] * d.support()[i] * d.support()[i];
			if (i > 0)
				CHECK(d.support()[i] >= d.support()[i - 1]);
			CHECK(d.support()[i] >= 0.0);
		}
		CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
		CHECK(mean == doctest::Approx(0.3).epsilon(1e-12));
		CHECK(std::sqrt(second - mean * mean) == doctest::Approx(0.06).epsilon(0.05));
		CHECK(d.mass_at_or_below(d.max_support()) == doctest::Approx(1.0));
		CHECK(d.partial_mean_at_or_below(d.max_support()) == doctest::Approx(0.3));
		CHECK(StepDistribution::log_normal(0.3, 0.0).family() == DistributionFamily::point_mass);
		CHECK(StepDistribution::log_normal(0.0, 0.1).family() == DistributionFamily::point_mass);
		CHECK_THROWS_AS(StepDistribution::log_normal(-1.0, 0.1), Error);
		CHECK_THROWS_AS(StepDistribution::empirical({1.0, 2.0}, {0.5, 0.4}), Error);
	}

	TEST_CASE("value function base case and point masses")
	{
		const DeviceSpec spec{1, 4, {1.0, 2.0}};
		const auto f = point_masses(0, {3.0, 1.0, 4.0, 2.0});
		const auto base = compute_value_function(spec, DeviceState::initial(spec), 2, f, 1.0);
		CHECK(base.optimal_cost.size() == 1);
		CHECK(base.cost(2) == doctest::Approx(4.0 * 1.0 + 2.0 * 2.0));
		CHECK(base.threshold_at(2) == kInf);

		const auto vf = compute_value_function(spec, DeviceState::initial(spec), 0, f, 1.0);
		for (int t = 0; t < 2; ++t)
		{
			const double start = expected_start_cost(spec, t, f.mean(t), f, 1.0);
			CHECK(vf.cost(t) == doctest::Approx(std::min(start, vf.cost(t + 1))));
		}
		CHECK_THROWS_AS(compute_value_function(spec, DeviceState::initial(spec), 3, f, 1.0), Error);
	}

	TEST_CASE("three-point uniform example gives 5/3")
	{
		PriceForecast f;
		f.steps = {uniform3(), uniform3()};
		const DeviceSpec spec{1, 2, {1.0}};
		const auto vf = compute_value_function(spec, DeviceState::initial(spec), 0, f, 1.0);
		CHECK(vf.cost(1) == doctest::Approx(2.0));
		CHECK(vf.threshold_at(0) == doctest::Approx(2.0));
		// enumerate: start if x <= 2, otherwise wait and pay E[X] = 2
		const double enumerated = (1.0 + 2.0 + 2.0) / 3.0;
		CHECK(vf.cost(0) == doctest::Approx(enumerated));
		CHECK(vf.cost(0) == doctest::Approx(5.0 / 3.0));
	}

	TEST_CASE("threshold bids by state")
	{
		const DeviceSpec spec{7, 3, {1.0}};
		const auto f = point_masses(0, {5.0, 5.0, 5.0});
		std::mt19937_64 rng(1);
		const auto vf = compute_value_function(spec, DeviceState::initial(spec), 0, f, 1.0);

		const auto waiting = threshold_bid(spec, DeviceState::initial(spec), 0, vf, f, 1.0, rng);
		CHECK(waiting.threshold == doctest::Approx(5.0));
		CHECK(waiting.quantity == 1.0);
		CHECK(waiting.tie_token >= 0.0);
		CHECK(waiting.tie_token < 1.0);

		const auto forced = threshold_bid(spec, DeviceState::initial(spec), 2, vf, f, 1.0, rng);
		CHECK(forced.threshold == kInf);

		const DeviceState done{1, 3, 0};
		const auto finished = threshold_bid(spec, done, 1, vf, f, 1.0, rng);
		CHECK(finished.threshold == -kInf);
		CHECK(finished.quantity == 0.0);

		const DeviceSpec cyc{8, 6, {1.0, 3.0, 2.0}};
		const DeviceState running{1, 6, 0};
		const auto run = threshold_bid(cyc, running, 1, vf, f, 1.0, rng);
		CHECK(run.threshold == kInf);
		CHECK(run.quantity == 3.0);
	}

	TEST_CASE("deadline adjustment")
	{
		const auto spec = device(1, 10, 2, 1.0);
		const auto state = DeviceState::initial(spec);
		const auto below = point_masses(0, std::vector<double>(10, 0.2));
		CHECK(apply_deadline_adjustment(spec, state, 3, below, 0.25).effective_deadline == 5);

		PriceForecast tail;
		tail.steps.assign(10, StepDistribution::log_normal(0.2, 0.05));
		CHECK(apply_deadline_adjustment(spec, state, 3, tail, 0.25).effective_deadline == 10);

		// quantile grid truncated at the threshold
		const auto full = StepDistribution::log_normal(0.2, 0.05);
		std::vector<double> values, probs;
		for (std::size_t i = 0; i < full.support().size(); ++i)
			if (full.support()[i] <= 0.22)
			{
				values.push_back(full.support()[i]);
				probs.push_back(full.probabilities()[i]);
			}
		const double kept = std::accumulate(probs.begin(), probs.end(), 0.0);
		for (double &p : probs)
			p /= kept;
		PriceForecast truncated = tail;
		truncated.steps[3] = StepDistribution::empirical(values, probs);
		CHECK(apply_deadline_adjustment(spec, state, 3, truncated, 0.22).effective_deadline == 5);
	}

	TEST_CASE("baseline policies")
	{
		const auto spec = device(1, 8, 2, 1.0);
		const auto state = DeviceState::initial(spec);
		const auto f = point_masses(0, {0.4, 0.1, 0.3, 0.5, 0.2, 0.9, 0.6, 0.7});
		std::mt19937_64 rng(3);

		const auto late = baseline_bid(PolicyVariant::latest_start, spec, state, 0, f, 1.0, rng);
		CHECK(late.quantity == 0.0);
		CHECK(baseline_bid(PolicyVariant::latest_start, spec, state, 6, f, 1.0, rng).threshold == kInf);

		// prices before the latest start (6): min 0.1, max 0.9
		const auto naive0 = baseline_bid(PolicyVariant::naive, spec, state, 0, f, 1.0, rng);
		CHECK(naive0.threshold == doctest::Approx(0.1));
		CHECK(baseline_bid(PolicyVariant::naive, spec, state, 2, f, 1.0, rng).threshold == doctest::Approx(0.2 + 2 * (0.9 - 0.2) / 5.0));

		const auto point = baseline_bid(PolicyVariant::point_forecast, spec, state, 1, f, 1.0, rng);
		const auto vf = compute_value_function(spec, state, 1, f, 1.0);
		const auto mdp = threshold_bid(spec, state, 1, vf, f, 1.0, rng);
		CHECK(point.threshold == mdp.threshold);
		CHECK_THROWS_AS(baseline_bid(PolicyVariant::mdp_optimal, spec, state, 0, f, 1.0, rng), Error);

		CHECK(parse_policy("fmbc") == PolicyVariant::mdp_optimal);
		CHECK(parse_policy(to_string(PolicyVariant::naive)) == PolicyVariant::naive);
		CHECK_THROWS_AS(parse_policy("greedy"), Error);
	}

	TEST_CASE("thresholds decrease with deadline and satisfy indifference")
	{
		std::mt19937_64 rng(11);
		std::uniform_int_distribution<int> dur(1, 4);
		for (int trial = 0; trial < 100; ++trial)
		{
			const int D = dur(rng);
			const int T = 16;
			const auto f = random_log_normal(rng, T, 0.6);
			std::vector<double> prev;
			for (int d = D + 2; d <= T; ++d)
			{
				const auto spec = device(d, d, D, 2.0);
				const auto vf = compute_value_function(spec, DeviceState::initial(spec), 0, f, 5.0);
				std::vector<double> z;
				for (int t = 0; t < d - D; ++t)
				{
					z.push_back(vf.threshold_at(t));
					const double indiff = expected_start_cost(spec, t, z.back(), f, 5.0) - vf.cost(t + 1);
					CHECK(std::abs(indiff) <= 1e-9 * std::max(1.0, vf.cost(t + 1)));
				}
				// strict once the earlier-deadline device reaches its forced
				// start with positive probability and the extra step helps
				const int forced = static_cast<int>(prev.size());
				for (int t = 0; t < forced; ++t)
				{
					bool reaches = f.at(forced).prob_above(z[static_cast<std::size_t>(forced)]) > 0.0;
					for (int s = t + 1; s < forced; ++s)
						reaches = reaches && f.at(s).prob_above(prev[static_cast<std::size_t>(s)]) > 0.0;
					if (reaches)
						CHECK(z[static_cast<std::size_t>(t)] < prev[static_cast<std::size_t>(t)]);
					else
						CHECK(z[static_cast<std::size_t>(t)] <= prev[static_cast<std::size_t>(t)] + 1e-12 * std::max(1.0, std::abs(prev[static_cast<std::size_t>(t)])));
				}
				const auto twin = device(d + 1000, d, D, 2.0);
				const auto vf_twin = compute_value_function(twin, DeviceState::initial(twin), 0, f, 5.0);
				CHECK(vf_twin.threshold == vf.threshold);
				prev = z;
			}
		}
	}

	TEST_CASE("policy rollout matches the value function")
	{
		std::mt19937_64 rng(5);
		const auto f = random_log_normal(rng, 10, 0.5);
		const auto spec = device(1, 10, 3, 2.0);
		const auto vf = compute_value_function(spec, DeviceState::initial(spec), 0, f, 5.0);

		const int n = 20000;
		double sum = 0.0, sq = 0.0;
		for (int r = 0; r < n; ++r)
		{
			std::vector<double> x(10);
			for (int t = 0; t < 10; ++t)
			{
				const auto &d = f.at(t);
				std::discrete_distribution<std::size_t> pick(d.probabilities().begin(), d.probabilities().end());
				x[static_cast<std::size_t>(t)] = d.support()[pick(rng)];
			}
			int start = 7;
			for (int t = 0; t < 7; ++t)
				if (x[static_cast<std::size_t>(t)] <= vf.threshold_at(t))
				{
					start = t;
					break;
				}
			double cost = 0.0;
			for (int i = 0; i < 3; ++i)
				cost += x[static_cast<std::size_t>(start + i)] * 2.0 * 5.0;
			sum += cost;
			sq += cost * cost;
		}
		const double mean = sum / n;
		const double se = std::sqrt((sq / n - mean * mean) / n);
		CHECK(std::abs(mean - vf.cost(0)) <= 4.0 * se);
		CHECK(vf.cost(0) <= expected_start_cost(spec, 0, f.mean(0), f, 5.0) + 1e-12);
	}
}
