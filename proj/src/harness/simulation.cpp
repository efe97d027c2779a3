#include "fmbc/harness/simulation.hpp"
#include "fmbc/harness/seeds.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace fmbc
{
	namespace
	{
		FleetSpec fleet_of(const Scenario &scenario)
		{
			const auto &c = scenario.clusters.front();
			return {c.duration_steps, c.power_kw};
		}

		/// Waiting thresholds for identical devices depend only on the
		/// effective deadline, so one value function per distinct deadline.
		class ThresholdCache
		{
		public:
			ThresholdCache(PolicyVariant policy, const PriceForecast &forecast, double dt)
				: policy_(policy), forecast_(forecast), dt_(dt)
			{
				if (policy_ == PolicyVariant::point_forecast)
					point_ = forecast.point_forecast();
			}

			double get(const DeviceSpec &spec, const DeviceState &state, int t)
			{
				const auto it = cache_.find(state.effective_deadline);
				if (it != cache_.end())
					return it->second;
				double z;
				if (policy_ == PolicyVariant::point_forecast)
					z = waiting_threshold(PolicyVariant::mdp_optimal, spec, state, t, point_, dt_);
				else
					z = waiting_threshold(policy_, spec, state, t, forecast_, dt_);
				cache_.emplace(state.effective_deadline, z);
				return z;
			}

		private:
			PolicyVariant policy_;
			const PriceForecast &forecast_;
			PriceForecast point_;
			double dt_;
			std::unordered_map<int, double> cache_;
		};

		void summarize(RunTrace &trace, const Scenario &scenario)
		{
			RunSummary &s = trace.summary;
			s.scenario = scenario.name;
			s.policy = std::string(to_string(scenario.policy));
			s.seed = scenario.seed;
			s.day_ahead_uncertainty = scenario.day_ahead_uncertainty;
			s.devices = static_cast<int>(trace.devices.size());
			s.steps = static_cast<int>(trace.steps.size());
			for (const auto &r : trace.steps)
			{
				s.total_cost += r.generation_cost;
				s.total_budget_imbalance += r.budget_imbalance;
				s.ties += r.tie ? 1 : 0;
				s.max_start_gap = std::max(s.max_start_gap, r.starts - r.reference_starts);
				s.min_start_gap = std::min(s.min_start_gap, r.starts - r.reference_starts);
			}
			s.reference_cost = trace.reference.objective;
			s.cost_gap = s.reference_cost > 0.0 ? (s.total_cost - s.reference_cost) / s.reference_cost : 0.0;
			if (!trace.devices.empty())
			{
				const double n = static_cast<double>(trace.devices.size());
				double sum = 0.0, sq = 0.0, rsum = 0.0;
				s.min_regret = kInf;
				s.max_regret = -kInf;
				for (const auto &d : trace.devices)
				{
					const double delta = d.payment - d.reference_payment;
					sum += delta;
					sq += delta * delta;
					rsum += d.regret;
					s.min_regret = std::min(s.min_regret, d.regret);
					s.max_regret = std::max(s.max_regret, d.regret);
				}
				s.mean_payment_delta = sum / n;
				s.sd_payment_delta = n > 1 ? std::sqrt(std::max(0.0, (sq - n * s.mean_payment_delta * s.mean_payment_delta) / (n - 1))) : 0.0;
				s.mean_regret = rsum / n;
			}
		}
	} // namespace

	RunTrace run(const Scenario &scenario)
	{
		return run(scenario, build_inputs(scenario));
	}

	RunTrace run(const Scenario &scenario, const ScenarioInputs &inputs)
	{
		const TimeGrid &grid = scenario.grid;
		const int T = grid.num_steps;
		const double dt = grid.step_minutes;
		const FleetSpec fleet = fleet_of(scenario);
		const MarginalCostModel model = build_cost_model(scenario, inputs.wind);
		const auto &devices = inputs.devices;

		std::vector<int> deadlines;
		for (const auto &d : devices)
			deadlines.push_back(d.deadline);

		RunTrace trace;
		Facilitator facilitator(model, grid, inputs.load, fleet, deadlines);
		trace.reference = facilitator.reference();

		std::vector<DeviceState> states;
		std::vector<std::mt19937_64> tokens;
		for (const auto &d : devices)
		{
			states.push_back(DeviceState::initial(d));
			tokens.push_back(stream(scenario.seed, "token", {static_cast<std::uint64_t>(d.id)}));
		}
		std::vector<double> payments(devices.size(), 0.0);
		std::unordered_map<DeviceId, std::size_t> index;
		for (std::size_t i = 0; i < devices.size(); ++i)
			index.emplace(devices[i].id, i);
		auto tiebreak = stream(scenario.seed, "tiebreak");

		for (int t = 0; t < T; ++t)
		{
			try
			{
				const ReferenceSolution &ref = facilitator.reference();
				trace.snapshots.push_back(snapshot_reference(model, ref, fleet));

				auto frng = stream(scenario.seed, "forecast", {static_cast<std::uint64_t>(t)});
				const PriceForecast forecast = generate_forecast(ref, {scenario.day_ahead_uncertainty, t}, grid, frng, scenario.quantile_points);
				ThresholdCache thresholds(scenario.policy, forecast, dt);

				AggregateDemand demand;
				demand.inflexible = inputs.load[t];
				demand.bids.reserve(devices.size());
				for (std::size_t i = 0; i < devices.size(); ++i)
				{
					const DeviceSpec &spec = devices[i];
					DeviceState &state = states[i];
					BidFunction bid{spec.id, -kInf, 0.0, 0.0};
					if (state.finished(spec))
						bid = {spec.id, -kInf, 0.0, 0.0};
					else if (!state.waiting())
						bid = {spec.id, kInf, spec.pattern[static_cast<std::size_t>(state.status)], 0.0};
					else
					{
						double z = thresholds.get(spec, state, t);
						if (scenario.deadline_adjustment && z != kInf)
						{
							state = apply_deadline_adjustment(spec, state, t, forecast, z);
							if (t >= state.effective_deadline - spec.duration())
								z = kInf;
						}
						bid = {spec.id, z, z == -kInf ? 0.0 : spec.pattern.front(), 0.0};
					}
					bid.tie_token = draw_tie_token(tokens[i]);
					demand.bids.push_back(bid);
				}

				const MarketOutcome outcome = clear_market(model, t, demand, tiebreak);
				const Settlement settlement = settle(outcome, demand, dt);

				StepRecord rec;
				rec.step = t;
				rec.clearing_price = outcome.price;
				rec.reference_price = ref.price_at(t);
				rec.reference_starts = ref.starts_at(t);
				rec.reference_load = ref.load_at(t);
				rec.inflexible = inputs.load[t];
				rec.wind = model.renewable_at(t);
				rec.renewable_used = outcome.renewable_used;
				rec.generation = outcome.generation;
				rec.flexible = outcome.accepted_demand - outcome.inflexible;
				rec.tie = outcome.tie;
				rec.marginal_probability = outcome.marginal_probability;
				rec.budget_imbalance = settlement.budget_imbalance;
				rec.generation_cost = generation_cost(model, t, outcome.accepted_demand, dt);

				const double balance = outcome.generation + outcome.renewable_used - outcome.accepted_demand;
				if (std::abs(balance) > 1e-9 * std::max(1.0, outcome.accepted_demand))
					throw Error(ErrorKind::consistency, fmt::format("energy imbalance of {} kW", balance));

				std::vector<bool> accepted(devices.size(), false);
				for (DeviceId id : outcome.accepted)
					accepted[index.at(id)] = true;
				for (const auto &[id, paid] : settlement.device_payments)
					payments[index.at(id)] += paid;

				std::vector<int> started;
				for (std::size_t i = 0; i < devices.size(); ++i)
				{
					const bool was_waiting = states[i].waiting();
					if (states[i].finished(devices[i]))
						continue;
					states[i].advance(devices[i], t, accepted[i]);
					if (was_waiting && !states[i].waiting())
					{
						started.push_back(devices[i].deadline);
						++rec.starts;
					}
				}
				trace.steps.push_back(rec);
				facilitator.roll_forward(t, started);
			}
			catch (const Error &e)
			{
				throw Error(e.kind(), fmt::format("step {}: {}", t, e.what()));
			}
		}

		for (std::size_t i = 0; i < devices.size(); ++i)
			if (!states[i].finished(devices[i]))
				throw Error(ErrorKind::infeasible_device, fmt::format("device {} did not finish by the end of the horizon", devices[i].id));

		Profile prices(T);
		for (int t = 0; t < T; ++t)
			prices[t] = trace.steps[static_cast<std::size_t>(t)].clearing_price;

		auto priority = stream(scenario.seed, "priority");
		const auto ref_starts = realize_start_priority(trace.reference, devices, priority);
		for (std::size_t i = 0; i < devices.size(); ++i)
		{
			const DeviceSpec &spec = devices[i];
			DeviceRecord d;
			d.id = spec.id;
			d.deadline = spec.deadline;
			d.effective_deadline = states[i].effective_deadline;
			d.start = states[i].start_time;
			d.payment = payments[i];
			d.reference_start = ref_starts.at(spec.id);
			d.reference_payment = retrospective_payment(spec, d.reference_start, trace.reference.prices, dt);
			d.regret = regret(spec, d.payment, prices, dt);
			trace.devices.push_back(d);
		}
		summarize(trace, scenario);
		return trace;
	}

	std::uint64_t sweep_seed(std::uint64_t base, int nu_index, int replication)
	{
		return derive_seed(base, "sweep", {static_cast<std::uint64_t>(nu_index), static_cast<std::uint64_t>(replication)});
	}

	SweepResult sweep(const Scenario &scenario, const std::vector<double> &nus, int replications)
	{
		SweepResult out;
		for (std::size_t i = 0; i < nus.size(); ++i)
			for (int r = 0; r < replications; ++r)
			{
				SweepRow row;
				row.nu_index = static_cast<int>(i);
				row.nu = nus[i];
				row.replication = r;
				row.seed = sweep_seed(scenario.seed, row.nu_index, r);
				Scenario sc = scenario;
				sc.day_ahead_uncertainty = nus[i];
				sc.seed = row.seed;
				try
				{
					const RunTrace trace = run(sc);
					row.ok = true;
					row.summary = trace.summary;
					for (const auto &d : trace.devices)
						out.devices.push_back({row.nu_index, row.nu, r, d.id, d.payment - d.reference_payment, d.regret});
				}
				catch (const Error &e)
				{
					row.error = fmt::format("{}: {}", to_string(e.kind()), e.what());
				}
				out.runs.push_back(std::move(row));
			}
		return out;
	}

	PolicyComparison compare_policies(const Scenario &scenario)
	{
		PolicyComparison out;
		const ScenarioInputs inputs = build_inputs(scenario);
		for (PolicyVariant p : {PolicyVariant::mdp_optimal, PolicyVariant::point_forecast, PolicyVariant::naive, PolicyVariant::latest_start})
		{
			Scenario sc = scenario;
			sc.policy = p;
			out.policies.push_back(p);
			out.traces.push_back(run(sc, inputs));
		}
		return out;
	}

	double median(std::vector<double> values)
	{
		if (values.empty())
			throw Error(ErrorKind::domain, "median of an empty set");
		std::sort(values.begin(), values.end());
		const std::size_t n = values.size();
		return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
	}

	TraceAnalysis analyze_trace(const Scenario &scenario, const ScenarioInputs &inputs, const RunTrace &trace)
	{
		const double dt = scenario.grid.step_minutes;
		const MarginalCostModel model = build_cost_model(scenario, inputs.wind);
		TraceAnalysis out;

		Schedule allocation;
		for (const auto &d : trace.devices)
			allocation.starts[d.id] = d.start;
		allocation.aggregate_load = implied_load(inputs.load, inputs.devices, allocation.starts);
		out.nash = check_nash(allocation, inputs.devices, model, dt);

		std::vector<StepObservation> observed;
		for (const auto &r : trace.steps)
			observed.push_back({r.step, r.clearing_price, r.starts});
		if (scenario.day_ahead_uncertainty > 0.0)
			for (const auto &s : trace.snapshots)
				out.eta = std::max(out.eta, s.price);
		const double slope = model.is_affine() ? 1.0 / std::get<AffineCurve>(model.curve).k : 0.0;
		out.consistency = consistency_bounds(observed, trace.snapshots, out.eta, fleet_of(scenario), slope);

		for (const auto &d : trace.devices)
			out.regrets.push_back(d.regret);
		return out;
	}

} // namespace fmbc
