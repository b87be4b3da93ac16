#include "mfgp/embedding.hpp"

#include <cmath>
#include <sstream>

#include "mfgp/error.hpp"
#include "mfgp/log.hpp"

namespace mfgp {

void EmbeddingConfig::validate() const
{
    if (num_delays < 0)
        throw InvalidArgument("embedding: num_delays must be >= 0");
    if (num_delays > 0 && !(delay_step > 0.0 && std::isfinite(delay_step)))
        throw InvalidArgument("embedding: delay_step must be finite and > 0 when delays are used");
    if (dimension() == 0)
        throw InvalidArgument("embedding: configuration selects no columns");
}

Vector AnalyticEvaluator::evaluate(const Vector& t) const
{
    Vector out(t.size());
    for (Index i = 0; i < t.size(); ++i)
        out(i) = f_(t(i));
    return out;
}

SurrogateEvaluator::SurrogateEvaluator(std::shared_ptr<const TrainedGP> gp) : gp_(std::move(gp))
{
    if (!gp_)
        throw InvalidArgument("surrogate evaluator: null model");
    if (gp_->dim() != 1)
        throw InvalidArgument("surrogate evaluator: model must have one input dimension");
    range_ = {gp_->inputs().col(0).minCoeff(), gp_->inputs().col(0).maxCoeff()};
}

Vector SurrogateEvaluator::evaluate(const Vector& t) const
{
    if (t.size() == 0)
        return Vector();
    const double lo = t.minCoeff();
    const double hi = t.maxCoeff();
    if ((lo < range_.lower || hi > range_.upper) && !warned_.exchange(true)) {
        std::ostringstream msg;
        msg << "surrogate queried on [" << lo << ", " << hi << "] beyond its data range [" << range_.lower << ", "
            << range_.upper << "]; using the posterior mean";
        log_warning("surrogate_extrapolation", msg.str());
    }
    return gp_->predict(as_column(t)).mean;
}

namespace {

    Matrix embed(const Vector& t, const LowFidelityEvaluator* f_low, const EmbeddingConfig& config)
    {
        config.validate();
        const Index m = t.size();
        Matrix out(m, config.dimension());
        Index col = 0;
        if (config.include_t)
            out.col(col++) = t;
        if (!config.uses_low_fidelity())
            return out;
        if (f_low == nullptr)
            throw InvalidArgument("embedding: configuration needs a low-fidelity evaluator");

        // All shifts go through the evaluator in one batch: block k holds t - k tau.
        const Index first = config.include_fl ? 0 : 1;
        const Index blocks = config.num_delays + 1 - first;
        Vector shifted(m * blocks);
        for (Index b = 0; b < blocks; ++b)
            shifted.segment(b * m, m) = t.array() - static_cast<double>(first + b) * config.delay_step;

        const Interval domain = f_low->domain();
        for (Index i = 0; i < shifted.size(); ++i)
            if (!domain.contains(shifted(i))) {
                std::ostringstream msg;
                msg << "shifted time " << shifted(i) << " lies outside the low-fidelity domain [" << domain.lower
                    << ", " << domain.upper << "]";
                throw DomainError(msg.str());
            }

        const Vector values = f_low->evaluate(shifted);
        for (Index b = 0; b < blocks; ++b)
            out.col(col++) = values.segment(b * m, m);
        return out;
    }

} // namespace

Matrix build_embedding(const Vector& t, const LowFidelityEvaluator& f_low, const EmbeddingConfig& config)
{
    return embed(t, &f_low, config);
}

Matrix build_embedding(const Vector& t, const EmbeddingConfig& config) { return embed(t, nullptr, config); }

} // namespace mfgp
