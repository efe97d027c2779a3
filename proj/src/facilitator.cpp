#include "fmbc/facilitator.hpp"
#include "fmbc/mincut.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fmbc
{
	std::vector<int> deadline_counts(std::span<const int> deadlines, const TimeGrid &grid)
	{
		std::vector<int> phi(static_cast<std::size_t>(grid.num_steps) + 1, 0);
		for (int d : deadlines)
		{
			if (d < 0 || d > grid.num_steps)
				throw Error(ErrorKind::horizon, fmt::format("deadline {} outside [0, {}]", d, grid.num_steps));
			++phi[static_cast<std::size_t>(d)];
		}
		std::partial_sum(phi.begin(), phi.end(), phi.begin());
		return phi;
	}

	std::vector<int> deadline_counts(std::span<const DeviceSpec> devices, const TimeGrid &grid)
	{
		std::vector<int> deadlines;
		deadlines.reserve(devices.size());
		for (const auto &d : devices)
			deadlines.push_back(d.deadline);
		return deadline_counts(deadlines, grid);
	}

	void ReferenceProblem::validate() const
	{
		grid.validate();
		const int T = grid.num_steps;
		if (first_step < 0 || first_step >= T)
			throw Error(ErrorKind::horizon, fmt::format("reference problem starts at {} outside [0, {})", first_step, T));
		if (inflexible.size() != T || committed.size() != T)
			throw Error(ErrorKind::invalid_scenario, "inflexible and committed profiles must cover the grid");
		if (static_cast<int>(waiting_deadlines.size()) != T + 1)
			throw Error(ErrorKind::invalid_scenario, "deadline counts must have T+1 entries");
		if (fleet.duration < 1 || !(fleet.power >= 0.0))
			throw Error(ErrorKind::invalid_scenario, "fleet needs duration >= 1 and power >= 0");
		const int latest_instant = std::min(T, first_step + fleet.duration - 1);
		if (waiting_deadlines[static_cast<std::size_t>(latest_instant)] > 0)
			throw Error(ErrorKind::infeasible_schedule,
						fmt::format("{} waiting device(s) have deadlines at or before instant {}, so they cannot finish when starting at step {} (window [{}, {}])",
									waiting_deadlines[static_cast<std::size_t>(latest_instant)], latest_instant, first_step, first_step,
									first_step + fleet.duration));
	}

	int ReferenceSolution::starts_at(int t) const
	{
		if (t < first_step || t >= first_step + horizon())
			return 0;
		return starts[static_cast<std::size_t>(t - first_step)];
	}

	double ReferenceSolution::price_at(int t) const
	{
		if (t < first_step || t >= first_step + horizon())
			throw Error(ErrorKind::horizon, fmt::format("reference covers [{}, {}), step {} requested", first_step, first_step + horizon(), t));
		return prices[t - first_step];
	}

	double ReferenceSolution::load_at(int t) const
	{
		if (t < first_step || t >= first_step + horizon())
			throw Error(ErrorKind::horizon, fmt::format("reference covers [{}, {}), step {} requested", first_step, first_step + horizon(), t));
		return load[t - first_step];
	}

	ReferenceSolution evaluate_starts(const MarginalCostModel &model, const ReferenceProblem &problem, std::vector<int> starts)
	{
		const int H = problem.horizon();
		const int D = problem.fleet.duration;
		ReferenceSolution out;
		out.first_step = problem.first_step;
		out.starts = std::move(starts);
		out.running.assign(static_cast<std::size_t>(H), 0);
		out.load.resize(H);
		out.generation.resize(H);
		out.prices.resize(H);
		int running = 0;
		for (int tau = 0; tau < H; ++tau)
		{
			running += out.starts[static_cast<std::size_t>(tau)];
			if (tau >= D)
				running -= out.starts[static_cast<std::size_t>(tau - D)];
			out.running[static_cast<std::size_t>(tau)] = running;
			const int t = problem.first_step + tau;
			const double demand = problem.inflexible[t] + problem.committed[t] + running * problem.fleet.power;
			out.load[tau] = demand;
			out.generation[tau] = flexible_generation(model, t, demand);
			out.prices[tau] = marginal_price(model, t, demand);
			out.objective += generation_cost(model, t, demand, problem.grid.step_minutes);
		}
		return out;
	}

	void check_reference(const MarginalCostModel &model, const ReferenceProblem &problem, const ReferenceSolution &solution, double tolerance)
	{
		const int H = problem.horizon();
		const int D = problem.fleet.duration;
		const int T = problem.grid.num_steps;
		const int N = problem.waiting();
		auto fail = [](const std::string &what) { throw Error(ErrorKind::consistency, what); };

		if (solution.first_step != problem.first_step || solution.horizon() != H)
			fail("solution horizon does not match the problem");
		int cumulative = 0;
		for (int tau = 0; tau < H; ++tau)
		{
			const int t = problem.first_step + tau;
			const int sigma = solution.starts[static_cast<std::size_t>(tau)];
			if (sigma < 0)
				fail(fmt::format("negative start count at step {}", t));
			cumulative += sigma;

			if (t <= T - D)
			{
				const int required = problem.waiting_deadlines[static_cast<std::size_t>(t + D)];
				if (cumulative < required)
					fail(fmt::format("step {}: {} starts so far but {} devices have deadlines by {}", t, cumulative, required, t + D));
			}
			else if (cumulative != N)
				fail(fmt::format("step {}: {} starts so far but all {} devices must have started", t, cumulative, N));

			int running = 0;
			for (int back = 0; back < D && tau - back >= 0; ++back)
				running += solution.starts[static_cast<std::size_t>(tau - back)];
			if (running != solution.running[static_cast<std::size_t>(tau)])
				fail(fmt::format("step {}: running count {} disagrees with starts ({})", t, solution.running[static_cast<std::size_t>(tau)], running));

			const double demand = problem.inflexible[t] + problem.committed[t] + running * problem.fleet.power;
			const double generation = solution.generation[tau];
			if (generation < -tolerance)
				fail(fmt::format("step {}: negative generation", t));
			if (generation + model.renewable_at(t) < demand - tolerance)
				fail(fmt::format("step {}: supply {} below demand {}", t, generation + model.renewable_at(t), demand));
			if (std::abs(solution.prices[tau] - marginal_price(model, t, demand)) > tolerance)
				fail(fmt::format("step {}: reference price is not the marginal cost of the scheduled demand", t));
		}
		if (cumulative != N)
			fail(fmt::format("{} starts scheduled for {} waiting devices", cumulative, N));
	}

	namespace
	{
		/// Convex objective over cumulative starts S (S[tau] = starts in [t0, t0+tau]).
		class CumulativeStartObjective
		{
		public:
			CumulativeStartObjective(const MarginalCostModel &model, const ReferenceProblem &problem)
				: model_(model), problem_(problem), H_(problem.horizon()), D_(problem.fleet.duration), N_(problem.waiting())
			{
				lower_.resize(static_cast<std::size_t>(H_));
				const int T = problem.grid.num_steps;
				for (int tau = 0; tau < H_; ++tau)
				{
					const int instant = std::min(T, problem.first_step + tau + D_);
					lower_[static_cast<std::size_t>(tau)] = std::min(N_, problem.waiting_deadlines[static_cast<std::size_t>(instant)]);
				}
				lower_.back() = N_;
			}

			int horizon() const { return H_; }
			int lower(int tau) const { return lower_[static_cast<std::size_t>(tau)]; }
			int upper() const { return N_; }

			double step_cost(int tau, int running) const
			{
				if (running < 0 || running > N_)
					return kInf;
				const int t = problem_.first_step + tau;
				const double demand = problem_.inflexible[t] + problem_.committed[t] + running * problem_.fleet.power;
				const double generation = flexible_generation(model_, t, demand);
				if (generation > model_.generator_capacity())
					return kInf;
				return problem_.grid.step_minutes * model_.generator_energy_cost(generation);
			}

			int at(const std::vector<int> &S, int tau) const { return tau < 0 ? 0 : S[static_cast<std::size_t>(tau)]; }

			double value(const std::vector<int> &S) const
			{
				double total = 0.0;
				for (int tau = 0; tau < H_; ++tau)
				{
					if (S[static_cast<std::size_t>(tau)] < lower(tau) || S[static_cast<std::size_t>(tau)] > N_ || at(S, tau) < at(S, tau - 1))
						return kInf;
					total += step_cost(tau, at(S, tau) - at(S, tau - D_));
				}
				return total;
			}

			/// Best move S + dir * 1_X over subsets X; returns the moved point.
			std::vector<int> best_move(const std::vector<int> &S, int dir) const
			{
				detail::BinaryEnergy energy(H_);
				auto feasible_diff = [](int diff) { return diff >= 0 ? 0.0 : kInf; };
				for (int tau = 0; tau < H_; ++tau)
				{
					const int s = S[static_cast<std::size_t>(tau)];
					const int moved = s + dir;
					energy.add_unary(tau, 0.0, (moved < lower(tau) || moved > N_) ? kInf : 0.0);

					const int running = s - at(S, tau - D_);
					if (tau < D_)
						energy.add_unary(tau, step_cost(tau, running), step_cost(tau, running + dir));
					else
						energy.add_pairwise(tau, tau - D_, step_cost(tau, running), step_cost(tau, running - dir), step_cost(tau, running + dir),
											step_cost(tau, running));

					if (tau >= 1)
					{
						const int diff = s - S[static_cast<std::size_t>(tau - 1)];
						energy.add_pairwise(tau, tau - 1, 0.0, feasible_diff(diff - dir), feasible_diff(diff + dir), 0.0);
					}
				}
				const auto result = energy.minimize();
				std::vector<int> out = S;
				for (int tau = 0; tau < H_; ++tau)
					if (result.labels[static_cast<std::size_t>(tau)])
						out[static_cast<std::size_t>(tau)] += dir;
				return out;
			}

			/// Clamps an arbitrary cumulative vector into the feasible region.
			std::vector<int> repair(std::vector<int> S) const
			{
				int prev = 0;
				for (int tau = 0; tau < H_; ++tau)
				{
					int &s = S[static_cast<std::size_t>(tau)];
					s = std::clamp(s, lower(tau), N_);
					s = std::max(s, prev);
					prev = s;
				}
				return S;
			}

		private:
			const MarginalCostModel &model_;
			const ReferenceProblem &problem_;
			int H_, D_, N_;
			std::vector<int> lower_;
		};

		std::vector<int> to_starts(const std::vector<int> &S)
		{
			std::vector<int> sigma(S.size());
			int prev = 0;
			for (std::size_t i = 0; i < S.size(); ++i)
			{
				sigma[i] = S[i] - prev;
				prev = S[i];
			}
			return sigma;
		}
	} // namespace

	ReferenceSolution reference_schedule(const MarginalCostModel &model, const ReferenceProblem &problem, const ReferenceSolution *warm)
	{
		problem.validate();
		const CumulativeStartObjective g(model, problem);
		const int H = g.horizon();

		std::vector<int> S(static_cast<std::size_t>(H));
		if (warm)
		{
			// starts the warm solution places at or after first_step
			int acc = 0;
			for (int tau = 0; tau < H; ++tau)
			{
				acc += warm->starts_at(problem.first_step + tau);
				S[static_cast<std::size_t>(tau)] = acc;
			}
		}
		else
			for (int tau = 0; tau < H; ++tau)
				S[static_cast<std::size_t>(tau)] = g.lower(tau);
		S = g.repair(std::move(S));

		double best = g.value(S);
		if (!std::isfinite(best))
			throw Error(ErrorKind::infeasible_schedule,
						fmt::format("no schedule within supply capacity from step {} (latest-start schedule already exceeds it)", problem.first_step));

		auto tolerance = [](double v) { return 1e-12 * std::max(1.0, std::abs(v)); };

		// steepest descent over +/- unit moves on subsets; a fixed point is the global minimum
		for (;;)
		{
			std::vector<int> up = g.best_move(S, +1), down = g.best_move(S, -1);
			const double v_up = g.value(up), v_down = g.value(down);
			const bool take_up = v_up <= v_down;
			const double v = take_up ? v_up : v_down;
			if (!(v < best - tolerance(best)))
				break;
			S = take_up ? std::move(up) : std::move(down);
			best = v;
		}

		// among optima, move starts as early as possible
		for (;;)
		{
			std::vector<int> up = g.best_move(S, +1);
			if (up == S)
				break;
			const double v = g.value(up);
			if (!(v <= best + tolerance(best)))
				break;
			S = std::move(up);
			best = std::min(best, v);
		}

		return evaluate_starts(model, problem, to_starts(S));
	}

	BruteForceResult brute_force_schedule(const MarginalCostModel &model, const SmallInstance &instance)
	{
		instance.grid.validate();
		const int T = instance.grid.num_steps;
		if (instance.inflexible.size() != T)
			throw Error(ErrorKind::invalid_scenario, "inflexible profile must cover the grid");

		double combos = 1.0;
		for (const auto &d : instance.devices)
		{
			d.validate(instance.grid);
			combos *= d.latest_start() + 1;
		}
		if (combos > kBruteForceGuard)
			throw Error(ErrorKind::guard_exceeded, fmt::format("{} start tuples exceed the enumeration guard of {}", combos, kBruteForceGuard));

		const std::size_t n = instance.devices.size();
		std::vector<int> current(n, 0), best_starts;
		double best = kInf;
		const double dt = instance.grid.step_minutes;

		Profile load(T);
		for (;;)
		{
			load = instance.inflexible;
			for (std::size_t a = 0; a < n; ++a)
			{
				const auto &d = instance.devices[a];
				for (int i = 0; i < d.duration(); ++i)
					load[current[a] + i] += d.pattern[static_cast<std::size_t>(i)];
			}
			double cost = 0.0;
			for (int t = 0; t < T && cost < kInf; ++t)
			{
				const double generation = flexible_generation(model, t, load[t]);
				cost = generation > model.generator_capacity() ? kInf : cost + generation_cost(model, t, load[t], dt);
			}
			if (best_starts.empty() || cost < best - 1e-12 * std::max(1.0, std::abs(best)))
			{
				best = cost;
				best_starts = current;
			}

			// odometer over per-device start windows, last device fastest (lexicographic order)
			std::size_t a = n;
			while (a > 0 && current[a - 1] == instance.devices[a - 1].latest_start())
				current[--a] = 0;
			if (a == 0)
				break;
			++current[a - 1];
		}

		if (!std::isfinite(best))
			throw Error(ErrorKind::infeasible_schedule, "every start tuple exceeds supply capacity");

		BruteForceResult out;
		out.device_starts = best_starts;
		out.objective = best;

		std::vector<int> sigma(static_cast<std::size_t>(T), 0);
		for (int s : best_starts)
			++sigma[static_cast<std::size_t>(s)];
		out.solution.first_step = 0;
		out.solution.starts = sigma;
		out.solution.running.assign(static_cast<std::size_t>(T), 0);
		out.solution.load = instance.inflexible;
		for (std::size_t a = 0; a < n; ++a)
		{
			const auto &d = instance.devices[a];
			for (int i = 0; i < d.duration(); ++i)
			{
				out.solution.load[best_starts[a] + i] += d.pattern[static_cast<std::size_t>(i)];
				++out.solution.running[static_cast<std::size_t>(best_starts[a] + i)];
			}
		}
		out.solution.generation.resize(T);
		out.solution.prices.resize(T);
		for (int t = 0; t < T; ++t)
		{
			out.solution.generation[t] = flexible_generation(model, t, out.solution.load[t]);
			out.solution.prices[t] = marginal_price(model, t, out.solution.load[t]);
		}
		out.solution.objective = best;
		return out;
	}

	std::map<DeviceId, int> realize_start_priority(const ReferenceSolution &reference, std::span<const DeviceSpec> waiting, std::mt19937_64 &rng)
	{
		std::vector<const DeviceSpec *> queue;
		for (const auto &d : waiting)
			queue.push_back(&d);
		std::stable_sort(queue.begin(), queue.end(), [](const DeviceSpec *a, const DeviceSpec *b) { return a->deadline < b->deadline; });
		// shuffle within equal-deadline groups
		for (std::size_t i = 0; i < queue.size();)
		{
			std::size_t j = i;
			while (j < queue.size() && queue[j]->deadline == queue[i]->deadline)
				++j;
			std::shuffle(queue.begin() + static_cast<std::ptrdiff_t>(i), queue.begin() + static_cast<std::ptrdiff_t>(j), rng);
			i = j;
		}

		const int total = std::accumulate(reference.starts.begin(), reference.starts.end(), 0);
		if (total != static_cast<int>(queue.size()))
			throw Error(ErrorKind::consistency, fmt::format("reference schedules {} starts for {} waiting devices", total, queue.size()));

		std::map<DeviceId, int> assignment;
		std::size_t next = 0;
		for (int tau = 0; tau < reference.horizon(); ++tau)
		{
			const int t = reference.first_step + tau;
			for (int k = 0; k < reference.starts[static_cast<std::size_t>(tau)]; ++k)
			{
				const DeviceSpec *d = queue[next++];
				if (t > d->latest_start())
					throw Error(ErrorKind::consistency, fmt::format("start slot {} assigned to device {} misses its latest start {}", t, d->id, d->latest_start()));
				assignment[d->id] = t;
			}
		}
		return assignment;
	}

	double forecast_sd(double reference_price, const ForecastModel &fm, int t, const TimeGrid &grid)
	{
		const double lead_hours = grid.hours(t - fm.issue_step);
		return std::max(0.0, reference_price * fm.day_ahead_uncertainty * lead_hours / 24.0);
	}

	PriceForecast generate_forecast(const ReferenceSolution &reference, const ForecastModel &fm, const TimeGrid &grid, std::mt19937_64 &rng, int points)
	{
		PriceForecast out;
		out.first_step = fm.issue_step;
		const int end = reference.first_step + reference.horizon();
		if (fm.issue_step < reference.first_step || fm.issue_step >= end)
			throw Error(ErrorKind::horizon, fmt::format("forecast issued at {} outside reference window [{}, {})", fm.issue_step, reference.first_step, end));
		out.steps.reserve(static_cast<std::size_t>(end - fm.issue_step));
		for (int t = fm.issue_step; t < end; ++t)
		{
			const double x_ref = reference.price_at(t);
			if (x_ref < 0.0)
				throw Error(ErrorKind::domain, fmt::format("negative reference price at step {}", t));
			const double sd = forecast_sd(x_ref, fm, t, grid);
			if (x_ref == 0.0 || sd == 0.0)
			{
				out.steps.push_back(StepDistribution::point_mass(x_ref));
				continue;
			}
			const double sigma2 = std::log1p((sd * sd) / (x_ref * x_ref));
			std::lognormal_distribution<double> draw(std::log(x_ref) - 0.5 * sigma2, std::sqrt(sigma2));
			const double expected = draw(rng);
			out.steps.push_back(StepDistribution::log_normal(expected, sd, points));
		}
		return out;
	}

	Facilitator::Facilitator(MarginalCostModel model, TimeGrid grid, Profile inflexible, FleetSpec fleet, std::span<const int> deadlines)
		: model_(std::move(model)), waiting_(deadlines.begin(), deadlines.end())
	{
		problem_.grid = grid;
		problem_.first_step = 0;
		problem_.inflexible = std::move(inflexible);
		problem_.committed = Profile::Zero(grid.num_steps);
		problem_.waiting_deadlines = deadline_counts(waiting_, grid);
		problem_.fleet = fleet;
		reference_ = reference_schedule(model_, problem_);
	}

	const ReferenceSolution &Facilitator::roll_forward(int t, std::span<const int> started_deadlines)
	{
		if (t != problem_.first_step)
			throw Error(ErrorKind::consistency, fmt::format("roll_forward for step {} but reference starts at {}", t, problem_.first_step));
		const int T = problem_.grid.num_steps;
		for (int d : started_deadlines)
		{
			auto it = std::find(waiting_.begin(), waiting_.end(), d);
			if (it == waiting_.end())
				throw Error(ErrorKind::consistency, fmt::format("started device with deadline {} was not waiting", d));
			waiting_.erase(it);
			for (int i = 0; i < problem_.fleet.duration && t + i < T; ++i)
				problem_.committed[t + i] += problem_.fleet.power;
		}
		if (t + 1 >= T)
		{
			if (!waiting_.empty())
				throw Error(ErrorKind::infeasible_schedule, fmt::format("{} devices never started", waiting_.size()));
			return reference_;
		}
		problem_.first_step = t + 1;
		problem_.waiting_deadlines = deadline_counts(waiting_, problem_.grid);
		reference_ = reference_schedule(model_, problem_, &reference_);
		return reference_;
	}

} // namespace fmbc
