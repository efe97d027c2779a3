#include "fmbc/harness/report_io.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace fmbc
{
	namespace fs = std::filesystem;

	std::string format_double(double v)
	{
		return fmt::format("{}", v);
	}

	namespace
	{
		std::ofstream open_out(const fs::path &file)
		{
			if (file.has_parent_path())
				fs::create_directories(file.parent_path());
			std::ofstream out(file, std::ios::binary);
			if (!out)
				throw Error(ErrorKind::parse, fmt::format("cannot write '{}'", file.string()));
			return out;
		}

		/// Header-addressed CSV table.
		struct Table
		{
			fs::path file;
			std::map<std::string, std::size_t> columns;
			std::vector<std::vector<std::string>> rows;

			const std::string &cell(std::size_t row, const std::string &name) const
			{
				const auto it = columns.find(name);
				if (it == columns.end())
					throw Error(ErrorKind::parse, fmt::format("{}: missing column '{}'", file.string(), name));
				return rows[row].at(it->second);
			}

			double num(std::size_t row, const std::string &name) const
			{
				const std::string &s = cell(row, name);
				char *end = nullptr;
				const double v = std::strtod(s.c_str(), &end);
				if (s.empty() || end != s.c_str() + s.size())
					throw Error(ErrorKind::parse, fmt::format("{}: row {}: column '{}' value '{}' is not a number", file.string(), row + 2, name, s));
				return v;
			}

			int integer(std::size_t row, const std::string &name) const { return static_cast<int>(num(row, name)); }
		};

		std::vector<std::string> split(const std::string &line)
		{
			std::vector<std::string> out;
			std::stringstream ss(line);
			std::string field;
			while (std::getline(ss, field, ','))
				out.push_back(field);
			if (!line.empty() && line.back() == ',')
				out.emplace_back();
			return out;
		}

		Table read_table(const fs::path &file)
		{
			std::ifstream in(file);
			if (!in)
				throw Error(ErrorKind::parse, fmt::format("cannot open '{}'", file.string()));
			Table t;
			t.file = file;
			std::string line;
			if (!std::getline(in, line))
				throw Error(ErrorKind::parse, fmt::format("{}: empty file", file.string()));
			const auto header = split(line);
			for (std::size_t i = 0; i < header.size(); ++i)
				t.columns[header[i]] = i;
			std::size_t row = 1;
			while (std::getline(in, line))
			{
				++row;
				if (line.empty())
					continue;
				auto fields = split(line);
				if (fields.size() != header.size())
					throw Error(ErrorKind::parse, fmt::format("{}: row {}: {} fields, expected {}", file.string(), row, fields.size(), header.size()));
				t.rows.push_back(std::move(fields));
			}
			return t;
		}

		const char *flag(bool b) { return b ? "1" : "0"; }
	} // namespace

	std::string summary_json(const RunSummary &s)
	{
		const nlohmann::json j = {
			{"scenario", s.scenario},
			{"policy", s.policy},
			{"seed", s.seed},
			{"day_ahead_uncertainty", s.day_ahead_uncertainty},
			{"devices", s.devices},
			{"steps", s.steps},
			{"total_cost", s.total_cost},
			{"reference_cost", s.reference_cost},
			{"cost_gap", s.cost_gap},
			{"mean_payment_delta", s.mean_payment_delta},
			{"sd_payment_delta", s.sd_payment_delta},
			{"min_regret", s.min_regret},
			{"mean_regret", s.mean_regret},
			{"max_regret", s.max_regret},
			{"total_budget_imbalance", s.total_budget_imbalance},
			{"ties", s.ties},
			{"min_start_gap", s.min_start_gap},
			{"max_start_gap", s.max_start_gap},
		};
		return j.dump();
	}

	void write_reference(const ReferenceSolution &reference, const fs::path &file)
	{
		auto out = open_out(file);
		out << "step,starts,running,load,generation,price\n";
		for (int tau = 0; tau < reference.horizon(); ++tau)
		{
			const auto k = static_cast<std::size_t>(tau);
			out << fmt::format("{},{},{},{},{},{}\n", reference.first_step + tau, reference.starts[k], reference.running[k], format_double(reference.load[tau]),
							   format_double(reference.generation[tau]), format_double(reference.prices[tau]));
		}
	}

	void write_run(const RunTrace &trace, const fs::path &dir)
	{
		fs::create_directories(dir);
		{
			auto out = open_out(dir / "steps.csv");
			out << "step,clearing_price,reference_price,inflexible,wind,renewable_used,generation,flexible,starts,reference_starts,reference_load,tie,"
				   "marginal_probability,budget_imbalance,generation_cost\n";
			for (const auto &r : trace.steps)
				out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.step, format_double(r.clearing_price), format_double(r.reference_price),
								   format_double(r.inflexible), format_double(r.wind), format_double(r.renewable_used), format_double(r.generation),
								   format_double(r.flexible), r.starts, r.reference_starts, format_double(r.reference_load), flag(r.tie),
								   format_double(r.marginal_probability), format_double(r.budget_imbalance), format_double(r.generation_cost));
		}
		{
			auto out = open_out(dir / "devices.csv");
			out << "id,deadline,effective_deadline,start,payment,reference_start,reference_payment,payment_delta,regret\n";
			for (const auto &d : trace.devices)
				out << fmt::format("{},{},{},{},{},{},{},{},{}\n", d.id, d.deadline, d.effective_deadline, d.start, format_double(d.payment), d.reference_start,
								   format_double(d.reference_payment), format_double(d.payment - d.reference_payment), format_double(d.regret));
		}
		{
			auto out = open_out(dir / "snapshots.csv");
			out << "step,price,starts,own_increment,later_increment,slope\n";
			for (const auto &s : trace.snapshots)
				out << fmt::format("{},{},{},{},{},{}\n", s.step, format_double(s.price), s.starts, format_double(s.own_increment),
								   format_double(s.later_increment), format_double(s.slope));
		}
		write_reference(trace.reference, dir / "reference.csv");
		auto out = open_out(dir / "summary.jsonl");
		out << summary_json(trace.summary) << "\n";
	}

	RunTrace read_run(const fs::path &dir)
	{
		RunTrace trace;
		const Table steps = read_table(dir / "steps.csv");
		for (std::size_t i = 0; i < steps.rows.size(); ++i)
		{
			StepRecord r;
			r.step = steps.integer(i, "step");
			r.clearing_price = steps.num(i, "clearing_price");
			r.reference_price = steps.num(i, "reference_price");
			r.inflexible = steps.num(i, "inflexible");
			r.wind = steps.num(i, "wind");
			r.renewable_used = steps.num(i, "renewable_used");
			r.generation = steps.num(i, "generation");
			r.flexible = steps.num(i, "flexible");
			r.starts = steps.integer(i, "starts");
			r.reference_starts = steps.integer(i, "reference_starts");
			r.reference_load = steps.num(i, "reference_load");
			r.tie = steps.integer(i, "tie") != 0;
			r.marginal_probability = steps.num(i, "marginal_probability");
			r.budget_imbalance = steps.num(i, "budget_imbalance");
			r.generation_cost = steps.num(i, "generation_cost");
			trace.steps.push_back(r);
		}
		const Table devices = read_table(dir / "devices.csv");
		for (std::size_t i = 0; i < devices.rows.size(); ++i)
		{
			DeviceRecord d;
			d.id = devices.integer(i, "id");
			d.deadline = devices.integer(i, "deadline");
			d.effective_deadline = devices.integer(i, "effective_deadline");
			d.start = devices.integer(i, "start");
			d.payment = devices.num(i, "payment");
			d.reference_start = devices.integer(i, "reference_start");
			d.reference_payment = devices.num(i, "reference_payment");
			d.regret = devices.num(i, "regret");
			trace.devices.push_back(d);
		}
		const Table snaps = read_table(dir / "snapshots.csv");
		for (std::size_t i = 0; i < snaps.rows.size(); ++i)
		{
			ReferenceSnapshot s;
			s.step = snaps.integer(i, "step");
			s.price = snaps.num(i, "price");
			s.starts = snaps.integer(i, "starts");
			s.own_increment = snaps.num(i, "own_increment");
			s.later_increment = snaps.num(i, "later_increment");
			s.slope = snaps.num(i, "slope");
			trace.snapshots.push_back(s);
		}
		if (trace.steps.size() != trace.snapshots.size())
			throw Error(ErrorKind::parse, fmt::format("{}: {} steps but {} snapshots", dir.string(), trace.steps.size(), trace.snapshots.size()));
		return trace;
	}

	void write_sweep(const SweepResult &result, const fs::path &dir)
	{
		fs::create_directories(dir);
		{
			auto out = open_out(dir / "sweep.csv");
			out << "nu_index,nu,replication,seed,status,cost_gap,total_cost,reference_cost,mean_payment_delta,sd_payment_delta,min_regret,mean_regret,"
				   "max_regret,min_start_gap,max_start_gap,error\n";
			for (const auto &r : result.runs)
			{
				const auto &s = r.summary;
				std::string err = r.error;
				std::replace(err.begin(), err.end(), ',', ';');
				std::replace(err.begin(), err.end(), '\n', ' ');
				out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.nu_index, format_double(r.nu), r.replication, r.seed, r.ok ? "ok" : "failed",
								   format_double(s.cost_gap), format_double(s.total_cost), format_double(s.reference_cost), format_double(s.mean_payment_delta),
								   format_double(s.sd_payment_delta), format_double(s.min_regret), format_double(s.mean_regret), format_double(s.max_regret),
								   s.min_start_gap, s.max_start_gap, err);
			}
		}
		auto out = open_out(dir / "sweep_devices.csv");
		out << "nu_index,nu,replication,id,payment_delta,regret\n";
		for (const auto &d : result.devices)
			out << fmt::format("{},{},{},{},{},{}\n", d.nu_index, format_double(d.nu), d.replication, d.id, format_double(d.payment_delta), format_double(d.regret));
	}

	void write_comparison(const PolicyComparison &comparison, const fs::path &dir)
	{
		fs::create_directories(dir);
		auto totals = open_out(dir / "compare.csv");
		auto steps = open_out(dir / "compare_steps.csv");
		auto devices = open_out(dir / "compare_devices.csv");
		totals << "policy,total_cost,reference_cost,cost_gap,mean_payment_delta,mean_regret,max_regret\n";
		steps << "policy,step,net_load,clearing_price,reference_price,starts\n";
		devices << "policy,id,deadline,start,payment,regret\n";
		for (std::size_t k = 0; k < comparison.traces.size(); ++k)
		{
			const auto name = to_string(comparison.policies[k]);
			const auto &tr = comparison.traces[k];
			const auto &s = tr.summary;
			totals << fmt::format("{},{},{},{},{},{},{}\n", name, format_double(s.total_cost), format_double(s.reference_cost), format_double(s.cost_gap),
								  format_double(s.mean_payment_delta), format_double(s.mean_regret), format_double(s.max_regret));
			for (const auto &r : tr.steps)
				steps << fmt::format("{},{},{},{},{},{}\n", name, r.step, format_double(r.inflexible + r.flexible - r.wind), format_double(r.clearing_price),
									 format_double(r.reference_price), r.starts);
			for (const auto &d : tr.devices)
				devices << fmt::format("{},{},{},{},{},{}\n", name, d.id, d.deadline, d.start, format_double(d.payment), format_double(d.regret));
		}
	}

	void write_analysis(const TraceAnalysis &analysis, const RunTrace &trace, const fs::path &dir)
	{
		fs::create_directories(dir);
		{
			auto out = open_out(dir / "nash.csv");
			out << "id,start,best_start,own_payment,best_payment,delta_needed,epsilon\n";
			for (const auto &d : analysis.nash.devices)
			{
				std::size_t best = 0;
				for (std::size_t t = 1; t < d.payment.size(); ++t)
					if (d.payment[t] < d.payment[best])
						best = t;
				out << fmt::format("{},{},{},{},{},{},{}\n", d.id, d.start, best, format_double(d.payment[static_cast<std::size_t>(d.start)]),
								   format_double(d.payment[best]), format_double(d.delta_needed), format_double(d.epsilon));
			}
		}
		{
			auto out = open_out(dir / "consistency.csv");
			out << "step,price_gap,price_lower,price_upper,price_ok,start_gap,count_applicable,count_lower,count_upper,count_ok,corollary_applicable,corollary_ok\n";
			for (const auto &r : analysis.consistency.rows)
				out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", r.step, format_double(r.price_gap), format_double(r.price_lower),
								   format_double(r.price_upper), flag(r.price_ok), r.start_gap, flag(r.count_applicable), r.count_lower, r.count_upper,
								   flag(r.count_ok), flag(r.corollary_applicable), flag(r.corollary_ok));
		}
		{
			auto out = open_out(dir / "regret.csv");
			out << "id,start,payment,regret\n";
			for (const auto &d : trace.devices)
				out << fmt::format("{},{},{},{}\n", d.id, d.start, format_double(d.payment), format_double(d.regret));
		}
		double min_regret = kInf;
		for (double r : analysis.regrets)
			min_regret = std::min(min_regret, r);
		const nlohmann::json j = {
			{"nash_violations", analysis.nash.violations.size()},
			{"worst_delta", analysis.nash.worst_delta},
			{"epsilon", analysis.nash.epsilon},
			{"delta_bound", analysis.nash.delta_bound},
			{"delta_within_bound", analysis.nash.delta_within_bound},
			{"eta", analysis.eta},
			{"price_bound_violations", analysis.consistency.price_violations},
			{"count_bound_violations", analysis.consistency.count_violations},
			{"corollary_violations", analysis.consistency.corollary_violations},
			{"corollary_inapplicable_steps", analysis.consistency.corollary_inapplicable},
			{"min_regret", analysis.regrets.empty() ? 0.0 : min_regret},
		};
		auto out = open_out(dir / "analysis_summary.jsonl");
		out << j.dump() << "\n";
	}

} // namespace fmbc
