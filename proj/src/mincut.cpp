#include "fmbc/mincut.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

namespace fmbc::detail
{
	namespace
	{
		constexpr double kInfCap = std::numeric_limits<double>::infinity();

		struct Arc
		{
			int to;
			int rev;
			double cap;
		};

		class Dinic
		{
		public:
			Dinic(int n, double eps) : graph_(static_cast<std::size_t>(n)), level_(static_cast<std::size_t>(n)), iter_(static_cast<std::size_t>(n)), eps_(eps) {}

			void add(int u, int v, double cap)
			{
				auto &gu = graph_[static_cast<std::size_t>(u)];
				auto &gv = graph_[static_cast<std::size_t>(v)];
				gu.push_back({v, static_cast<int>(gv.size()), cap});
				gv.push_back({u, static_cast<int>(gu.size()) - 1, 0.0});
			}

			double run(int s, int t)
			{
				double flow = 0.0;
				while (bfs(s, t))
				{
					std::fill(iter_.begin(), iter_.end(), 0);
					for (double f; (f = dfs(s, t, kInfCap)) > eps_;)
					{
						if (!std::isfinite(f))
							throw std::logic_error("min cut: unbounded flow (every labelling has infinite energy)");
						flow += f;
					}
				}
				return flow;
			}

			std::vector<bool> reachable(int s) const
			{
				std::vector<bool> seen(graph_.size(), false);
				std::queue<int> q;
				q.push(s);
				seen[static_cast<std::size_t>(s)] = true;
				while (!q.empty())
				{
					const int u = q.front();
					q.pop();
					for (const auto &a : graph_[static_cast<std::size_t>(u)])
						if (a.cap > eps_ && !seen[static_cast<std::size_t>(a.to)])
						{
							seen[static_cast<std::size_t>(a.to)] = true;
							q.push(a.to);
						}
				}
				return seen;
			}

		private:
			bool bfs(int s, int t)
			{
				std::fill(level_.begin(), level_.end(), -1);
				std::queue<int> q;
				level_[static_cast<std::size_t>(s)] = 0;
				q.push(s);
				while (!q.empty())
				{
					const int u = q.front();
					q.pop();
					for (const auto &a : graph_[static_cast<std::size_t>(u)])
						if (a.cap > eps_ && level_[static_cast<std::size_t>(a.to)] < 0)
						{
							level_[static_cast<std::size_t>(a.to)] = level_[static_cast<std::size_t>(u)] + 1;
							q.push(a.to);
						}
				}
				return level_[static_cast<std::size_t>(t)] >= 0;
			}

			double dfs(int u, int t, double pushed)
			{
				if (u == t)
					return pushed;
				auto &arcs = graph_[static_cast<std::size_t>(u)];
				for (int &i = iter_[static_cast<std::size_t>(u)]; i < static_cast<int>(arcs.size()); ++i)
				{
					Arc &a = arcs[static_cast<std::size_t>(i)];
					if (a.cap <= eps_ || level_[static_cast<std::size_t>(a.to)] != level_[static_cast<std::size_t>(u)] + 1)
						continue;
					const double f = dfs(a.to, t, std::min(pushed, a.cap));
					if (f > eps_)
					{
						a.cap -= f;
						graph_[static_cast<std::size_t>(a.to)][static_cast<std::size_t>(a.rev)].cap += f;
						return f;
					}
				}
				return 0.0;
			}

			std::vector<std::vector<Arc>> graph_;
			std::vector<int> level_;
			std::vector<int> iter_;
			double eps_;
		};
	} // namespace

	BinaryEnergy::BinaryEnergy(int num_vars)
		: n_(num_vars), source_cap_(static_cast<std::size_t>(num_vars), 0.0), sink_cap_(static_cast<std::size_t>(num_vars), 0.0),
		  arcs_(static_cast<std::size_t>(num_vars))
	{
	}

	void BinaryEnergy::add_unary(int i, double e0, double e1)
	{
		if (e1 >= e0)
		{
			constant_ += e0;
			source_cap_[static_cast<std::size_t>(i)] += e1 - e0;
		}
		else
		{
			constant_ += e1;
			sink_cap_[static_cast<std::size_t>(i)] += e0 - e1;
		}
	}

	void BinaryEnergy::add_edge(int from, int to, double cap)
	{
		if (cap > 0.0)
			arcs_[static_cast<std::size_t>(from)].push_back({to, cap});
	}

	void BinaryEnergy::add_pairwise(int i, int j, double e00, double e01, double e10, double e11)
	{
		const bool inf01 = std::isinf(e01), inf10 = std::isinf(e10);
		if (inf01 && inf10)
		{
			add_unary(i, e00, e11);
			add_edge(i, j, kInfCap);
			add_edge(j, i, kInfCap);
		}
		else if (!inf10)
		{
			add_unary(i, 0.0, e10 - e00);
			add_unary(j, 0.0, e11 - e10);
			constant_ += e00;
			add_edge(i, j, e01 + e10 - e00 - e11);
		}
		else
		{
			add_unary(j, 0.0, e01 - e00);
			add_unary(i, 0.0, e11 - e01);
			constant_ += e00;
			add_edge(j, i, e01 + e10 - e00 - e11);
		}
	}

	BinaryEnergy::Result BinaryEnergy::minimize() const
	{
		double scale = 1.0;
		for (int i = 0; i < n_; ++i)
		{
			for (double c : {source_cap_[static_cast<std::size_t>(i)], sink_cap_[static_cast<std::size_t>(i)]})
				if (std::isfinite(c))
					scale = std::max(scale, c);
			for (const auto &e : arcs_[static_cast<std::size_t>(i)])
				if (std::isfinite(e.cap))
					scale = std::max(scale, e.cap);
		}

		const int s = n_, t = n_ + 1;
		Dinic flow(n_ + 2, 1e-13 * scale);
		for (int i = 0; i < n_; ++i)
		{
			if (source_cap_[static_cast<std::size_t>(i)] > 0.0)
				flow.add(s, i, source_cap_[static_cast<std::size_t>(i)]);
			if (sink_cap_[static_cast<std::size_t>(i)] > 0.0)
				flow.add(i, t, sink_cap_[static_cast<std::size_t>(i)]);
			for (const auto &e : arcs_[static_cast<std::size_t>(i)])
				flow.add(i, e.to, e.cap);
		}

		Result r;
		r.energy = constant_ + flow.run(s, t);
		const auto seen = flow.reachable(s);
		r.labels.resize(static_cast<std::size_t>(n_));
		for (int i = 0; i < n_; ++i)
			r.labels[static_cast<std::size_t>(i)] = !seen[static_cast<std::size_t>(i)];
		return r;
	}

} // namespace fmbc::detail
