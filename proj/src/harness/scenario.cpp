#include "fmbc/harness/scenario.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace fmbc
{
	using nlohmann::json;

	Scenario Scenario::desk_scale()
	{
		Scenario s;
		s.name = "desk-scale";
		s.clusters = {ClusterSpec{60, 12, 2.0, 7.0, 1.0}, ClusterSpec{60, 12, 2.0, 17.0, 1.0}};
		s.cost = {"affine", 50.0, {}, {}};
		s.load = {"", 350.0, 0.5, false, 0.0};
		s.wind = {"", 500.0, 0.3, false, 0.0};
		return s;
	}

	Scenario Scenario::full_scale()
	{
		Scenario s = desk_scale();
		s.name = "full-scale";
		s.clusters = {ClusterSpec{600, 12, 2.0, 7.0, 1.0}, ClusterSpec{600, 12, 2.0, 17.0, 1.0}};
		s.cost.k = 500.0;
		return s;
	}

	int Scenario::device_count() const
	{
		int n = 0;
		for (const auto &c : clusters)
			n += c.count;
		return n;
	}

	double Scenario::steps_until_clock(double clock_hours) const
	{
		double hours = std::fmod(clock_hours - start_clock, 24.0);
		if (hours < 0.0)
			hours += 24.0;
		return hours * 60.0 / grid.step_minutes;
	}

	std::vector<std::string> validate_scenario(const Scenario &s)
	{
		std::vector<std::string> issues;
		if (s.schema_version != kScenarioSchemaVersion)
			issues.push_back(fmt::format("schema_version {} is not supported (expected {})", s.schema_version, kScenarioSchemaVersion));
		if (s.grid.num_steps < 1)
			issues.push_back("grid.num_steps must be >= 1");
		if (!(s.grid.step_minutes > 0.0))
			issues.push_back("grid.step_minutes must be positive");
		if (s.clusters.empty())
			issues.push_back("at least one device cluster is required");
		for (std::size_t i = 0; i < s.clusters.size(); ++i)
		{
			const auto &c = s.clusters[i];
			if (c.count < 0)
				issues.push_back(fmt::format("clusters[{}].count must be >= 0", i));
			if (c.duration_steps < 1)
				issues.push_back(fmt::format("clusters[{}].duration_steps must be >= 1", i));
			if (!(c.power_kw > 0.0))
				issues.push_back(fmt::format("clusters[{}].power_kw must be positive", i));
			if (!(c.deadline_sd_hours >= 0.0))
				issues.push_back(fmt::format("clusters[{}].deadline_sd_hours must be >= 0", i));
			if (c.duration_steps > s.grid.num_steps)
				issues.push_back(fmt::format("clusters[{}] duration exceeds the horizon", i));
			else if (s.grid.step_minutes > 0.0 && s.steps_until_clock(c.deadline_mean_clock) < c.duration_steps)
				issues.push_back(fmt::format("clusters[{}] mean deadline falls before the earliest possible completion", i));
			if (i > 0 && (c.duration_steps != s.clusters[0].duration_steps || c.power_kw != s.clusters[0].power_kw))
				issues.push_back("all clusters must share duration and power (the reference scheduler handles identical devices)");
		}
		if (s.cost.kind == "affine")
		{
			if (!(s.cost.k > 0.0))
				issues.push_back("cost.k must be positive");
		}
		else if (s.cost.kind == "tabulated")
		{
			try
			{
				TabulatedCurve{s.cost.power, s.cost.price}.validate();
			}
			catch (const Error &e)
			{
				issues.push_back(fmt::format("cost: {}", e.what()));
			}
		}
		else
			issues.push_back(fmt::format("cost.kind '{}' is not one of affine, tabulated", s.cost.kind));

		for (const auto *p : {&s.load, &s.wind})
		{
			const char *which = p == &s.load ? "load" : "wind";
			if (p->csv_path.empty() && !(p->peak_kw >= 0.0))
				issues.push_back(fmt::format("{}.peak_kw must be >= 0", which));
			if (!p->csv_path.empty() && !std::filesystem::exists(p->csv_path))
				issues.push_back(fmt::format("{}.csv_path '{}' does not exist", which, p->csv_path));
			if (p->step_minutes < 0.0)
				issues.push_back(fmt::format("{}.step_minutes must be >= 0", which));
			if (p->mean_fraction < 0.0 || p->mean_fraction > 1.0)
				issues.push_back(fmt::format("{}.mean_fraction must lie in [0, 1]", which));
		}
		if (!(s.day_ahead_uncertainty >= 0.0))
			issues.push_back("day_ahead_uncertainty must be >= 0");
		if (s.replications < 1)
			issues.push_back("replications must be >= 1");
		if (s.quantile_points < 1)
			issues.push_back("quantile_points must be >= 1");
		return issues;
	}

	namespace
	{
		json profile_json(const ProfileSpec &p)
		{
			json j = {{"peak_kw", p.peak_kw}, {"mean_fraction", p.mean_fraction}};
			if (!p.csv_path.empty())
			{
				j["csv_path"] = p.csv_path;
				j["rescale_to_peak"] = p.rescale_to_peak;
				j["step_minutes"] = p.step_minutes;
			}
			return j;
		}

		ProfileSpec profile_from(const json &j)
		{
			ProfileSpec p;
			p.csv_path = j.value("csv_path", std::string{});
			p.peak_kw = j.value("peak_kw", 0.0);
			p.mean_fraction = j.value("mean_fraction", 0.5);
			p.rescale_to_peak = j.value("rescale_to_peak", false);
			p.step_minutes = j.value("step_minutes", 0.0);
			return p;
		}
	} // namespace

	std::string scenario_to_json(const Scenario &s)
	{
		json clusters = json::array();
		for (const auto &c : s.clusters)
			clusters.push_back({{"count", c.count},
								{"duration_steps", c.duration_steps},
								{"power_kw", c.power_kw},
								{"deadline_mean_clock", c.deadline_mean_clock},
								{"deadline_sd_hours", c.deadline_sd_hours}});
		json cost = {{"kind", s.cost.kind}};
		if (s.cost.kind == "affine")
			cost["k"] = s.cost.k;
		else
		{
			cost["power"] = s.cost.power;
			cost["price"] = s.cost.price;
		}
		const json j = {
			{"schema_version", s.schema_version},
			{"name", s.name},
			{"start_clock", s.start_clock},
			{"grid", {{"start_index", s.grid.start_index}, {"num_steps", s.grid.num_steps}, {"step_minutes", s.grid.step_minutes}}},
			{"clusters", clusters},
			{"cost", cost},
			{"load", profile_json(s.load)},
			{"wind", profile_json(s.wind)},
			{"day_ahead_uncertainty", s.day_ahead_uncertainty},
			{"policy", std::string(to_string(s.policy))},
			{"seed", s.seed},
			{"replications", s.replications},
			{"quantile_points", s.quantile_points},
			{"deadline_adjustment", s.deadline_adjustment},
		};
		return j.dump(2) + "\n";
	}

	Scenario scenario_from_json(const std::string &text)
	{
		json j;
		try
		{
			j = json::parse(text);
		}
		catch (const json::parse_error &e)
		{
			throw Error(ErrorKind::parse, fmt::format("scenario is not valid JSON: {}", e.what()));
		}
		try
		{
			Scenario s;
			s.schema_version = j.at("schema_version").get<int>();
			if (s.schema_version != kScenarioSchemaVersion)
				throw Error(ErrorKind::invalid_scenario, fmt::format("unsupported schema_version {}", s.schema_version));
			s.name = j.value("name", s.name);
			s.start_clock = j.value("start_clock", s.start_clock);
			if (j.contains("grid"))
			{
				const auto &g = j["grid"];
				s.grid.start_index = g.value("start_index", 0);
				s.grid.num_steps = g.at("num_steps").get<int>();
				s.grid.step_minutes = g.at("step_minutes").get<double>();
			}
			for (const auto &c : j.at("clusters"))
				s.clusters.push_back({c.at("count").get<int>(), c.at("duration_steps").get<int>(), c.at("power_kw").get<double>(),
									  c.at("deadline_mean_clock").get<double>(), c.value("deadline_sd_hours", 0.0)});
			const auto &cost = j.at("cost");
			s.cost.kind = cost.at("kind").get<std::string>();
			s.cost.k = cost.value("k", 0.0);
			s.cost.power = cost.value("power", std::vector<double>{});
			s.cost.price = cost.value("price", std::vector<double>{});
			s.load = profile_from(j.at("load"));
			s.wind = profile_from(j.at("wind"));
			s.day_ahead_uncertainty = j.value("day_ahead_uncertainty", s.day_ahead_uncertainty);
			s.policy = parse_policy(j.value("policy", std::string("fmbc")));
			s.seed = j.value("seed", s.seed);
			s.replications = j.value("replications", s.replications);
			s.quantile_points = j.value("quantile_points", s.quantile_points);
			s.deadline_adjustment = j.value("deadline_adjustment", false);
			return s;
		}
		catch (const json::exception &e)
		{
			throw Error(ErrorKind::parse, fmt::format("scenario field error: {}", e.what()));
		}
	}

	Scenario load_scenario(const std::filesystem::path &path)
	{
		std::ifstream in(path);
		if (!in)
			throw Error(ErrorKind::parse, fmt::format("cannot open scenario '{}'", path.string()));
		std::stringstream buf;
		buf << in.rdbuf();
		Scenario s = scenario_from_json(buf.str());
		for (auto *p : {&s.load, &s.wind})
			if (!p->csv_path.empty() && std::filesystem::path(p->csv_path).is_relative())
				p->csv_path = (path.parent_path() / p->csv_path).lexically_normal().string();
		return s;
	}

	void save_scenario(const Scenario &scenario, const std::filesystem::path &path)
	{
		std::ofstream out(path);
		if (!out)
			throw Error(ErrorKind::parse, fmt::format("cannot write scenario '{}'", path.string()));
		out << scenario_to_json(scenario);
	}

	MarginalCostModel build_cost_model(const Scenario &scenario, Profile renewable)
	{
		if (scenario.cost.kind == "affine")
			return MarginalCostModel::affine(scenario.cost.k, std::move(renewable));
		if (scenario.cost.kind == "tabulated")
			return MarginalCostModel::tabulated(TabulatedCurve{scenario.cost.power, scenario.cost.price}, std::move(renewable));
		throw Error(ErrorKind::invalid_scenario, fmt::format("unknown cost kind '{}'", scenario.cost.kind));
	}

} // namespace fmbc
