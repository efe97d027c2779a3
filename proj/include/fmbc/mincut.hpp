#pragma once

#include <vector>

namespace fmbc::detail
{
	/// Minimizer of a quadratic pseudo-boolean function with submodular pairwise
	/// terms, via s-t min cut. Capacities may be +inf for hard constraints.
	class BinaryEnergy
	{
	public:
		explicit BinaryEnergy(int num_vars);

		/// Adds E_i(0) = e0, E_i(1) = e1.
		void add_unary(int i, double e0, double e1);
		/// Adds E_ij(x_i, x_j) with table (e00, e01, e10, e11); requires e00 + e11 <= e01 + e10.
		void add_pairwise(int i, int j, double e00, double e01, double e10, double e11);

		struct Result
		{
			double energy = 0.0;
			std::vector<bool> labels;
		};

		/// Minimum energy; among minimizers returns the one with the most ones.
		Result minimize() const;

	private:
		struct Edge
		{
			int to;
			double cap;
		};

		void add_edge(int from, int to, double cap);

		int n_;
		double constant_ = 0.0;
		std::vector<double> source_cap_;
		std::vector<double> sink_cap_;
		std::vector<std::vector<Edge>> arcs_;
	};

} // namespace fmbc::detail
