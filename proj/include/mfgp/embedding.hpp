#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <string>

#include "mfgp/gp.hpp"
#include "mfgp/types.hpp"

namespace mfgp {

/// Extended input space built from time and delayed low-fidelity values.
///
/// Column order is fixed: [t] [f_l(t)] [f_l(t - tau)] ... [f_l(t - n tau)], with the
/// first two present only when their flag is set.
struct EmbeddingConfig {
    int num_delays = 0;
    double delay_step = 0.0;
    bool include_t = true;
    bool include_fl = true;

    Index dimension() const { return (include_t ? 1 : 0) + (include_fl ? 1 : 0) + num_delays; }
    /// True when the embedding reads the low-fidelity function at all.
    bool uses_low_fidelity() const { return include_fl || num_delays > 0; }
    void validate() const;
};

/// Source of low-fidelity values at arbitrary times.
class LowFidelityEvaluator {
public:
    virtual ~LowFidelityEvaluator() = default;
    virtual Vector evaluate(const Vector& t) const = 0;
    /// Times outside this interval are rejected by build_embedding.
    virtual Interval domain() const { return Interval::unbounded(); }
};

/// Wraps a closed-form function, optionally restricted to a bounded domain.
class AnalyticEvaluator : public LowFidelityEvaluator {
public:
    explicit AnalyticEvaluator(std::function<double(double)> f, Interval domain = Interval::unbounded())
        : f_(std::move(f)), domain_(domain)
    {
    }

    Vector evaluate(const Vector& t) const override;
    Interval domain() const override { return domain_; }

private:
    std::function<double(double)> f_;
    Interval domain_;
};

/// Posterior mean of a trained 1-D GP. Extrapolates beyond the training data with a single
/// logged warning per evaluator.
class SurrogateEvaluator : public LowFidelityEvaluator {
public:
    explicit SurrogateEvaluator(std::shared_ptr<const TrainedGP> gp);

    Vector evaluate(const Vector& t) const override;
    const TrainedGP& gp() const { return *gp_; }
    /// Range of the training inputs; queries outside it are extrapolated.
    Interval data_range() const { return range_; }

private:
    std::shared_ptr<const TrainedGP> gp_;
    Interval range_;
    mutable std::atomic<bool> warned_{false};
};

/// Embeds every time in `t` per `config`. Throws DomainError if any shifted time falls outside
/// the evaluator's domain. Pure in its arguments.
Matrix build_embedding(const Vector& t, const LowFidelityEvaluator& f_low, const EmbeddingConfig& config);

/// Overload for configs that read no low-fidelity values (time only).
Matrix build_embedding(const Vector& t, const EmbeddingConfig& config);

} // namespace mfgp
