#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mfgp/embedding.hpp"
#include "mfgp/hodgkin_huxley.hpp"
#include "mfgp/types.hpp"

namespace mfgp {

/// A two-fidelity test problem over a bounded domain.
struct BenchmarkPair {
    std::string name;
    std::function<double(double)> f_high;
    std::function<double(double)> f_low;
    Interval domain;
    /// Where f_low may be evaluated exactly (shifted times included).
    Interval low_domain = Interval::unbounded();
    int default_n_high = 10;
    int default_n_low = 100;
    /// Fixed delay step; when absent the low-fidelity grid spacing is used.
    std::optional<double> delay_step;

    /// f_low as an evaluator restricted to low_domain.
    std::shared_ptr<const LowFidelityEvaluator> analytic_low() const;
    Vector high(const Vector& t) const;
    Vector low(const Vector& t) const;
};

/// simple, embed_demo, phase_shift, periodicity, discontinuity, hodgkin_huxley.
/// Throws InvalidArgument on an unknown name.
BenchmarkPair benchmark(std::string_view name);

/// The Hodgkin-Huxley pair over a custom window.
BenchmarkPair hodgkin_huxley_benchmark(const HHWindow& window);

std::vector<std::string> benchmark_names();

} // namespace mfgp
