#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace fmbc
{
	/// Child seed for a named stream: FNV-1a of the label, then each counter
	/// folded in through a SplitMix64 finalizer keyed by the base seed.
	std::uint64_t derive_seed(std::uint64_t base, std::string_view label, std::initializer_list<std::uint64_t> counters = {});

	inline std::mt19937_64 stream(std::uint64_t base, std::string_view label, std::initializer_list<std::uint64_t> counters = {})
	{
		return std::mt19937_64(derive_seed(base, label, counters));
	}

} // namespace fmbc
