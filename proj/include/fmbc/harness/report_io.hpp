#pragma once

#include "fmbc/harness/simulation.hpp"

#include <filesystem>
#include <string>

namespace fmbc
{
	/// Output files of `simulate`: steps.csv, devices.csv, reference.csv,
	/// snapshots.csv and summary.jsonl.
	void write_run(const RunTrace &trace, const std::filesystem::path &dir);

	/// Reads back steps, devices and snapshots (the reference keeps only its prices).
	RunTrace read_run(const std::filesystem::path &dir);

	void write_reference(const ReferenceSolution &reference, const std::filesystem::path &file);

	/// sweep.csv (one row per run) and sweep_devices.csv.
	void write_sweep(const SweepResult &result, const std::filesystem::path &dir);

	/// compare.csv (totals), compare_steps.csv (net load and price per step)
	/// and compare_devices.csv (start and payment per device).
	void write_comparison(const PolicyComparison &comparison, const std::filesystem::path &dir);

	/// nash.csv, consistency.csv, regret.csv and analysis_summary.jsonl.
	void write_analysis(const TraceAnalysis &analysis, const RunTrace &trace, const std::filesystem::path &dir);

	std::string summary_json(const RunSummary &summary);

	/// Shortest round-trip text for a double.
	std::string format_double(double v);

} // namespace fmbc
