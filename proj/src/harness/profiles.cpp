#include "fmbc/harness/profiles.hpp"
#include "fmbc/harness/seeds.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>

namespace fmbc
{
	namespace
	{
		std::string trim(std::string s)
		{
			const auto issp = [](unsigned char c) { return std::isspace(c) != 0; };
			s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), issp));
			s.erase(std::find_if_not(s.rbegin(), s.rend(), issp).base(), s.end());
			return s;
		}

		double parse_number(const std::string &field, const std::filesystem::path &path, int row)
		{
			const std::string f = trim(field);
			char *end = nullptr;
			const double v = std::strtod(f.c_str(), &end);
			if (f.empty() || end != f.c_str() + f.size() || !std::isfinite(v))
				throw Error(ErrorKind::parse, fmt::format("{}: row {}: '{}' is not a number", path.string(), row, f));
			return v;
		}

		/// Circular distance in hours on a 24 h clock.
		double clock_gap(double a, double b)
		{
			const double d = std::fmod(std::abs(a - b), 24.0);
			return std::min(d, 24.0 - d);
		}
	} // namespace

	Profile load_profile_csv(const std::filesystem::path &path, const TimeGrid &grid, double source_step_minutes)
	{
		grid.validate();
		const double src_dt = source_step_minutes > 0.0 ? source_step_minutes : grid.step_minutes;
		std::ifstream in(path);
		if (!in)
			throw Error(ErrorKind::parse, fmt::format("cannot open profile '{}'", path.string()));

		std::string line;
		if (!std::getline(in, line))
			throw Error(ErrorKind::parse, fmt::format("{}: empty file", path.string()));
		if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0)
			line.erase(0, 3);
		if (trim(line) != "time_index,power_kw")
			throw Error(ErrorKind::parse, fmt::format("{}: row 1: expected header 'time_index,power_kw', got '{}'", path.string(), trim(line)));

		std::vector<double> values;
		int row = 1;
		while (std::getline(in, line))
		{
			++row;
			if (trim(line).empty())
				continue;
			const auto comma = line.find(',');
			if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
				throw Error(ErrorKind::parse, fmt::format("{}: row {}: expected 2 fields", path.string(), row));
			const double index = parse_number(line.substr(0, comma), path, row);
			const double power = parse_number(line.substr(comma + 1), path, row);
			if (index != static_cast<double>(values.size()))
				throw Error(ErrorKind::parse, fmt::format("{}: row {}: time_index {} out of sequence (expected {})", path.string(), row, index, values.size()));
			if (power < 0.0)
				throw Error(ErrorKind::parse, fmt::format("{}: row {}: negative power {}", path.string(), row, power));
			values.push_back(power);
		}
		if (values.empty())
			throw Error(ErrorKind::parse, fmt::format("{}: no data rows", path.string()));

		const double span = (grid.num_steps - 1) * grid.step_minutes;
		const double covered = (static_cast<double>(values.size()) - 1) * src_dt;
		if (covered + 1e-9 < span)
			throw Error(ErrorKind::parse,
						fmt::format("{}: {} rows at {} min cover {} min but the grid needs {} (missing rows)", path.string(), values.size(), src_dt, covered, span));

		Profile out(grid.num_steps);
		for (int t = 0; t < grid.num_steps; ++t)
		{
			const double pos = t * grid.step_minutes / src_dt;
			const auto lo = static_cast<std::size_t>(std::floor(pos + 1e-12));
			const double frac = pos - static_cast<double>(lo);
			if (lo + 1 >= values.size() || frac <= 1e-12)
				out[t] = values[std::min(lo, values.size() - 1)];
			else
				out[t] = values[lo] + frac * (values[lo + 1] - values[lo]);
		}
		return out;
	}

	Profile synth_load(const TimeGrid &grid, double start_clock, double peak)
	{
		grid.validate();
		Profile out(grid.num_steps);
		for (int t = 0; t < grid.num_steps; ++t)
		{
			const double h = start_clock + grid.hours(t);
			const double morning = clock_gap(h, 8.0) / 1.5;
			const double evening = clock_gap(h, 19.0) / 2.0;
			out[t] = 0.45 + 0.3 * std::exp(-0.5 * morning * morning) + 0.55 * std::exp(-0.5 * evening * evening);
		}
		const double mx = out.maxCoeff();
		return mx > 0.0 ? Profile(out * (peak / mx)) : out;
	}

	Profile synth_wind(const TimeGrid &grid, double peak, double mean_fraction, std::uint64_t seed)
	{
		grid.validate();
		auto rng = stream(seed, "wind");
		std::uniform_real_distribution<double> period(3.0, 24.0), phase(0.0, 2.0 * std::numbers::pi);
		const double amplitude[3] = {0.25, 0.15, 0.1};
		double periods[3], phases[3];
		for (int j = 0; j < 3; ++j)
		{
			periods[j] = period(rng);
			phases[j] = phase(rng);
		}
		Profile out(grid.num_steps);
		for (int t = 0; t < grid.num_steps; ++t)
		{
			const double h = grid.hours(t);
			double level = mean_fraction;
			for (int j = 0; j < 3; ++j)
				level += amplitude[j] * std::sin(2.0 * std::numbers::pi * h / periods[j] + phases[j]);
			out[t] = peak * std::clamp(level, 0.0, 1.0);
		}
		return out;
	}

	std::vector<int> sample_deadlines(const ClusterSpec &cluster, const Scenario &scenario, std::mt19937_64 &rng)
	{
		const double mean = scenario.steps_until_clock(cluster.deadline_mean_clock);
		const double sd = cluster.deadline_sd_hours * 60.0 / scenario.grid.step_minutes;
		std::normal_distribution<double> noise(0.0, 1.0);
		std::vector<int> out;
		out.reserve(static_cast<std::size_t>(std::max(0, cluster.count)));
		for (int i = 0; i < cluster.count; ++i)
		{
			const double x = sd > 0.0 ? mean + sd * noise(rng) : mean;
			const long d = std::lround(x);
			out.push_back(static_cast<int>(std::clamp<long>(d, cluster.duration_steps, scenario.grid.num_steps)));
		}
		return out;
	}

	namespace
	{
		Profile build_profile(const ProfileSpec &spec, const Scenario &scenario, bool wind, std::uint64_t seed)
		{
			if (!spec.csv_path.empty())
			{
				Profile p = load_profile_csv(spec.csv_path, scenario.grid, spec.step_minutes);
				if (spec.rescale_to_peak)
				{
					const double mx = p.maxCoeff();
					if (mx > 0.0)
						p *= spec.peak_kw / mx;
				}
				return p;
			}
			return wind ? synth_wind(scenario.grid, spec.peak_kw, spec.mean_fraction, seed) : synth_load(scenario.grid, scenario.start_clock, spec.peak_kw);
		}
	} // namespace

	ScenarioInputs build_inputs(const Scenario &scenario)
	{
		const auto issues = validate_scenario(scenario);
		if (!issues.empty())
			throw Error(ErrorKind::invalid_scenario, issues.front());

		ScenarioInputs in;
		in.load = build_profile(scenario.load, scenario, false, scenario.seed);
		in.wind = build_profile(scenario.wind, scenario, true, scenario.seed);

		DeviceId id = 0;
		for (std::size_t c = 0; c < scenario.clusters.size(); ++c)
		{
			const auto &cluster = scenario.clusters[c];
			auto rng = stream(scenario.seed, "deadlines", {c});
			for (int d : sample_deadlines(cluster, scenario, rng))
			{
				DeviceSpec spec{id++, d, std::vector<double>(static_cast<std::size_t>(cluster.duration_steps), cluster.power_kw)};
				spec.validate(scenario.grid);
				in.devices.push_back(std::move(spec));
			}
		}
		return in;
	}

} // namespace fmbc
