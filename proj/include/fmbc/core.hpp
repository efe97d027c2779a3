#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace fmbc
{
	/// Per-step series on a TimeGrid (kW, prices, counts as reals).
	using Profile = Eigen::VectorXd;

	inline constexpr double kInf = std::numeric_limits<double>::infinity();

	enum class ErrorKind
	{
		capacity_exceeded,
		domain,
		horizon,
		infeasible_device,
		infeasible_schedule,
		clearing_failure,
		consistency,
		parse,
		guard_exceeded,
		invalid_scenario,
	};

	const char *to_string(ErrorKind kind);

	class Error : public std::runtime_error
	{
	public:
		Error(ErrorKind kind, const std::string &what)
			: std::runtime_error(what), kind_(kind) {}

		ErrorKind kind() const noexcept { return kind_; }

	private:
		ErrorKind kind_;
	};

	struct TimeGrid
	{
		int start_index = 0;
		int num_steps = 1;
		double step_minutes = 5.0;

		/// Throws invalid_scenario unless T >= 1 and dt > 0.
		void validate() const;
		double hours(int steps) const { return steps * step_minutes / 60.0; }
	};

	using DeviceId = std::int64_t;

	/// A deferrable load: runs `pattern.size()` contiguous steps and must have
	/// finished by the instant `deadline` (so its latest start is deadline - D).
	struct DeviceSpec
	{
		DeviceId id = 0;
		int deadline = 0;
		std::vector<double> pattern;

		int duration() const { return static_cast<int>(pattern.size()); }
		int latest_start() const { return deadline - duration(); }
		bool rapid_starting() const { return !pattern.empty() && pattern.front() > 0.0; }

		void validate(const TimeGrid &grid, int first_schedulable = 0) const;
	};

	struct DeviceState
	{
		/// 0 waiting, 1..D-1 running (next cycle position), D finished.
		int status = 0;
		int effective_deadline = 0;
		int start_time = -1;

		static DeviceState initial(const DeviceSpec &spec) { return {0, spec.deadline, -1}; }

		bool waiting() const { return status == 0; }
		bool finished(const DeviceSpec &spec) const { return status >= spec.duration(); }
		bool running(const DeviceSpec &spec) const { return status > 0 && !finished(spec); }

		/// Advances one cleared step. `consumed` is whether the device's bid was
		/// accepted; a running device that is not accepted breaks uninterruptibility.
		void advance(const DeviceSpec &spec, int t, bool consumed);
	};

	/// Non-decreasing piecewise-linear marginal cost through (0, m0).
	struct TabulatedCurve
	{
		std::vector<double> power;
		std::vector<double> price;

		void validate() const;
		double capacity() const { return power.back(); }
	};

	struct AffineCurve
	{
		/// m(P) = P / k, k in kW^2 min.
		double k = 500.0;
	};

	/// Flexible-generation marginal cost plus zero-cost curtailable renewables.
	struct MarginalCostModel
	{
		std::variant<AffineCurve, TabulatedCurve> curve = AffineCurve{};
		Profile renewable;

		static MarginalCostModel affine(double k, Profile renewable);
		static MarginalCostModel tabulated(TabulatedCurve curve, Profile renewable);

		bool is_affine() const { return std::holds_alternative<AffineCurve>(curve); }
		double renewable_at(int t) const;

		/// m(P^g) for flexible generation P^g >= 0.
		double generator_price(double generation) const;
		/// Integral of m over [0, P^g].
		double generator_energy_cost(double generation) const;
		/// sup { P^g : m(P^g) <= price }; +inf for unbounded affine curves.
		double generator_quantity_at(double price) const;
		double generator_capacity() const;
	};

	double marginal_price(const MarginalCostModel &model, int t, double total_demand);

	double generation_cost(const MarginalCostModel &model, int t, double total_demand, double step_minutes);

	/// m_t(P*) - m_t(P* - P_i).
	double delta_m(const MarginalCostModel &model, int t, double reference_load, double device_power);

	/// Supply quantity (renewables plus flexible generation) offered at `price`.
	double supply_quantity(const MarginalCostModel &model, int t, double price);

	/// Generation set-point needed to serve `total_demand` after renewables.
	inline double flexible_generation(const MarginalCostModel &model, int t, double total_demand)
	{
		return std::max(0.0, total_demand - model.renewable_at(t));
	}

	/// Aggregate load per step and per-device start times.
	struct Schedule
	{
		Profile aggregate_load;
		std::map<DeviceId, int> starts;
	};

	/// Aggregate load implied by inflexible load plus devices started at `starts`.
	Profile implied_load(const Profile &inflexible, const std::vector<DeviceSpec> &devices, const std::map<DeviceId, int> &starts);

	/// Throws if a start misses a deadline or the aggregate disagrees with the implied load.
	void check_schedule(const Schedule &schedule, const Profile &inflexible, const std::vector<DeviceSpec> &devices, double tolerance = 1e-9);

} // namespace fmbc
