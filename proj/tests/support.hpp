#pragma once

#include "fmbc/core.hpp"

#include <initializer_list>
#include <vector>

namespace fmbc::test
{
	inline Profile flat(int n, double value)
	{
		return Profile::Constant(n, value);
	}

	inline Profile series(std::initializer_list<double> values)
	{
		Profile p(static_cast<Eigen::Index>(values.size()));
		Eigen::Index i = 0;
		for (double v : values)
			p[i++] = v;
		return p;
	}

	inline DeviceSpec device(DeviceId id, int deadline, int duration, double power)
	{
		return {id, deadline, std::vector<double>(static_cast<std::size_t>(duration), power)};
	}

	/// Relative closeness with an absolute floor of 1.
	inline bool near(double a, double b, double tol = 1e-9)
	{
		return std::abs(a - b) <= tol * std::max(1.0, std::max(std::abs(a), std::abs(b)));
	}

} // namespace fmbc::test
