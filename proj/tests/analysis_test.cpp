#include "fmbc/analysis.hpp"
#include "support.hpp"

#include <doctest.h>

#include <random>

using namespace fmbc;
using fmbc::test::device;
using fmbc::test::flat;
using fmbc::test::series;

namespace
{
	ReferenceSnapshot snap(int step, double price, int starts, double slope, double own, double later)
	{
		return {step, price, starts, own, later, slope};
	}
} // namespace

TEST_SUITE("analysis")
{
	TEST_CASE("system cost and payment on a flat background")
	{
		const auto m = MarginalCostModel::affine(500.0, flat(4, 0.0));
		const Profile others = flat(4, 100.0);
		const DeviceSpec spec{1, 4, {2.0, 2.0}};
		CHECK(system_cost_of_start(m, others, spec, 0, 1.0) == doctest::Approx(0.808));
		CHECK(system_cost_of_start(m, others, DeviceSpec{2, 4, {0.0, 0.0}}, 0, 1.0) == 0.0);
		CHECK(agent_payment(m, others, DeviceSpec{2, 4, {0.0, 0.0}}, 0, 1.0) == 0.0);
		CHECK(agent_payment(m, others, spec, 1, 1.0) == doctest::Approx(2.0 * 2.0 * 102.0 / 500.0));
		CHECK_THROWS_AS(system_cost_of_start(m, others, spec, 3, 1.0), Error);

		const auto windy = MarginalCostModel::affine(500.0, flat(4, 200.0));
		CHECK(agent_payment(windy, others, spec, 0, 1.0) == 0.0);
	}

	TEST_CASE("affine identity K = Pi - (c dt / 2) sum P^2")
	{
		std::mt19937_64 rng(13);
		std::uniform_real_distribution<double> u(0.0, 300.0), p(0.0, 5.0);
		for (int trial = 0; trial < 200; ++trial)
		{
			const double k = 50.0 + u(rng);
			const auto m = MarginalCostModel::affine(k, flat(6, 0.0));
			Profile others(6);
			for (int t = 0; t < 6; ++t)
				others[t] = u(rng);
			const DeviceSpec spec{1, 6, {p(rng), p(rng), p(rng)}};
			double sq = 0.0;
			for (double x : spec.pattern)
				sq += x * x;
			const double dt = 5.0;
			const double K = system_cost_of_start(m, others, spec, 2, dt);
			const double Pi = agent_payment(m, others, spec, 2, dt);
			CHECK(std::abs(K - (Pi - dt / (2.0 * k) * sq)) <= 1e-9 * std::max(1.0, Pi));
		}
	}

	TEST_CASE("nash check")
	{
		const auto m = MarginalCostModel::affine(500.0, flat(5, 0.0));
		const std::vector<DeviceSpec> one{device(1, 5, 1, 2.0)};
		const Profile l = series({5.0, 3.0, 1.0, 4.0, 6.0});
		const Schedule good{implied_load(l, one, {{1, 2}}), {{1, 2}}};
		CHECK(check_nash(good, one, m, 5.0).violations.empty());
		const Schedule bad{implied_load(l, one, {{1, 0}}), {{1, 0}}};
		const auto report = check_nash(bad, one, m, 5.0);
		REQUIRE(report.violations.size() == 1);
		CHECK(report.violations.front().better_start == 2);

		const SmallInstance inst{{0, 6, 5.0}, series({8.0, 2.0, 3.0, 1.0, 7.0, 4.0}), {device(1, 4, 2, 2.0), device(2, 6, 2, 2.0), device(3, 6, 1, 2.0)}};
		const auto m6 = MarginalCostModel::affine(50.0, flat(6, 0.0));
		const auto bf = brute_force_schedule(m6, inst);
		std::map<DeviceId, int> starts;
		for (std::size_t a = 0; a < inst.devices.size(); ++a)
			starts[inst.devices[a].id] = bf.device_starts[a];
		const Schedule opt{implied_load(inst.inflexible, inst.devices, starts), starts};
		CHECK(check_nash(opt, inst.devices, m6, 5.0).violations.empty());
	}

	TEST_CASE("tabulated curve: delta within epsilon bound and K sandwiched")
	{
		TabulatedCurve c{{0.0, 20.0, 60.0}, {0.5, 0.6, 1.4}};
		const auto m = MarginalCostModel::tabulated(c, flat(6, 0.0));
		const SmallInstance inst{{0, 6, 5.0}, series({18.0, 12.0, 25.0, 9.0, 30.0, 14.0}), {device(1, 6, 2, 2.0), device(2, 5, 2, 2.0)}};
		const auto bf = brute_force_schedule(m, inst);
		const std::map<DeviceId, int> starts{{1, bf.device_starts[0]}, {2, bf.device_starts[1]}};
		const Schedule s{implied_load(inst.inflexible, inst.devices, starts), starts};
		const auto report = check_nash(s, inst.devices, m, 5.0);
		CHECK(report.epsilon > 0.0);
		CHECK(report.epsilon < 1.0);
		CHECK(report.worst_delta <= report.delta_bound + 1e-12);
		CHECK(report.delta_within_bound);
		for (const auto &dev : report.devices)
			for (std::size_t t = 0; t < dev.payment.size(); ++t)
			{
				CHECK(dev.system_cost[t] <= dev.payment[t] + 1e-12);
				CHECK(dev.system_cost[t] >= (1.0 - report.epsilon) * dev.payment[t] - 1e-12);
			}
	}

	TEST_CASE("consistency bounds")
	{
		const FleetSpec fleet{12, 2.0};
		const double c = 1.0 / 50.0;
		std::vector<ReferenceSnapshot> ref;
		std::vector<StepObservation> obs;
		for (int t = 0; t < 4; ++t)
		{
			ref.push_back(snap(t, 0.3, 2, c, 12 * 2.0 * 2.0 * c, 12 * 2.0 * 2.0 * c));
			obs.push_back({t, 0.3, 2});
		}
		const auto exact = consistency_bounds(obs, ref, 0.0, fleet, c);
		CHECK(exact.price_violations == 0);
		CHECK(exact.count_violations == 0);
		CHECK(exact.corollary_violations == 0);
		CHECK(exact.corollary_lower == -13);
		CHECK(exact.corollary_upper == 12);
		CHECK(exact.rows[0].count_upper == 12);
		CHECK(exact.rows[0].count_lower == -12);

		// at the edges of the interval, then one past each edge
		obs[0].starts = 2 + 12;
		obs[1].starts = 2 - 13;
		obs[2].starts = 2 + 13;
		obs[3].starts = 2 - 14;
		const auto edges = consistency_bounds(obs, ref, 0.0, fleet, c);
		CHECK(edges.rows[0].corollary_ok);
		CHECK(edges.rows[1].corollary_ok);
		CHECK_FALSE(edges.rows[2].corollary_ok);
		CHECK_FALSE(edges.rows[3].corollary_ok);
		CHECK(edges.corollary_violations == 2);

		// a curtailed reference step does not meet the premise
		ref[2].slope = 0.0;
		const auto curtailed = consistency_bounds(obs, ref, 0.0, fleet, c);
		CHECK_FALSE(curtailed.rows[2].corollary_applicable);
		CHECK(curtailed.corollary_inapplicable == 1);
		CHECK(curtailed.corollary_violations == 1);

		// price gap landing exactly on the lower bound
		std::vector<StepObservation> low = {{0, 0.3 - ref[0].own_increment / fleet.power, 2}};
		CHECK(consistency_bounds(low, {ref[0]}, 0.0, fleet, c).price_violations == 0);
		low[0].clearing_price -= 1e-6;
		CHECK(consistency_bounds(low, {ref[0]}, 0.0, fleet, c).price_violations == 1);
		CHECK(consistency_bounds(low, {ref[0]}, 0.01, fleet, c).price_violations == 0);

		CHECK_THROWS_AS(consistency_bounds(obs, {ref[0]}, 0.0, fleet, c), Error);
		CHECK_THROWS_AS(consistency_bounds(obs, ref, -1.0, fleet, c), Error);
	}

	TEST_CASE("regret")
	{
		const Profile prices = series({1.0, 3.0});
		const DeviceSpec spec{1, 2, {1.0}};
		CHECK(regret(spec, retrospective_payment(spec, 1, prices, 1.0), prices, 1.0) == doctest::Approx(2.0));
		CHECK(regret(spec, retrospective_payment(spec, 0, prices, 1.0), prices, 1.0) == 0.0);
		const DeviceSpec forced{2, 1, {1.0}};
		CHECK(regret(forced, retrospective_payment(forced, 0, prices, 1.0), prices, 1.0) == 0.0);
	}
}
