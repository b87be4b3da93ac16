#include "mfgp/fusion.hpp"

#include <cmath>

#include "mfgp/error.hpp"

namespace mfgp {

namespace {

    // Salts separating the low- and high-fidelity fits drawn from one seed. Every builder uses
    // the same pair, so methods whose input spaces coincide produce identical models.
    constexpr std::uint64_t kLowSalt = 0x4c4f57;
    constexpr std::uint64_t kHighSalt = 0x48494748;

    EmbeddingConfig with_default_step(EmbeddingConfig config, const FidelityPair& pair)
    {
        if (config.num_delays > 0 && !(config.delay_step > 0.0))
            config.delay_step = pair.default_delay_step();
        return config;
    }

    void require_low(const FidelityPair& pair, const char* what)
    {
        if (pair.t_low.size() < 1)
            throw InvalidArgument(std::string(what) + ": needs at least one low-fidelity point");
    }

    void require_high(const FidelityPair& pair, const char* what)
    {
        if (pair.t_high.size() < 1)
            throw InvalidArgument(std::string(what) + ": needs at least one high-fidelity point");
    }

} // namespace

std::string_view method_name(Method m)
{
    switch (m) {
    case Method::Kriging:
        return "kriging";
    case Method::Ar1:
        return "ar1";
    case Method::Nargp:
        return "nargp";
    case Method::Gpe:
        return "gpe";
    }
    return "unknown";
}

MethodSpec MethodSpec::gpe(std::string id, const EmbeddingConfig& embedding)
{
    MethodSpec s;
    s.id = std::move(id);
    s.method = Method::Gpe;
    s.embedding = embedding;
    return s;
}

MethodSpec MethodSpec::named(std::string_view id)
{
    MethodSpec s;
    s.id = std::string(id);
    if (id == "kriging") {
        s.method = Method::Kriging;
        s.embedding = {0, 0.0, true, false};
    } else if (id == "ar1") {
        s.method = Method::Ar1;
        s.embedding = {0, 0.0, true, false};
    } else if (id == "nargp") {
        s.method = Method::Nargp;
        s.embedding = {0, 0.0, true, true};
    } else if (id == "gpe") {
        s = gpe(s.id, {2, 0.0, true, true});
    } else if (id == "gpe2") {
        s = gpe(s.id, {4, 0.0, true, true});
    } else if (id == "delays") {
        s = gpe(s.id, {2, 0.0, false, true});
    } else if (id == "delays1") {
        s = gpe(s.id, {1, 0.0, false, true});
    } else if (id == "gp_fl") {
        s = gpe(s.id, {0, 0.0, false, true});
    } else {
        throw InvalidArgument("unknown method '" + std::string(id) + "'");
    }
    return s;
}

std::vector<std::string> MethodSpec::known_ids() { return {"kriging", "ar1", "nargp", "gpe", "gpe2", "delays", "delays1", "gp_fl"}; }

void FidelityPair::validate() const
{
    if (t_high.size() != y_high.size())
        throw InvalidArgument("fidelity pair: high-fidelity inputs and targets differ in length");
    if (t_low.size() != y_low.size())
        throw InvalidArgument("fidelity pair: low-fidelity inputs and targets differ in length");
    if (!(domain.lower <= domain.upper))
        throw InvalidArgument("fidelity pair: empty domain");
    for (const Vector* t : {&t_high, &t_low})
        for (Index i = 0; i < t->size(); ++i)
            if (!domain.contains((*t)(i)))
                throw InvalidArgument("fidelity pair: sample time " + std::to_string((*t)(i)) + " outside the domain");
}

double FidelityPair::default_delay_step() const
{
    if (t_low.size() == 0 || !domain.bounded())
        throw InvalidArgument("fidelity pair: default delay step needs low-fidelity samples and a bounded domain");
    return domain.length() / static_cast<double>(t_low.size());
}

std::optional<double> FusionModel::rho() const
{
    if (ar1_)
        return ar1_->params().rho;
    return std::nullopt;
}

Prediction FusionModel::predict(const Vector& t) const
{
    if (ar1_)
        return ar1_->predict(as_column(t));
    const Matrix x = low_ ? build_embedding(t, *low_, embedding_) : build_embedding(t, embedding_);
    return gp_->predict(x);
}

std::shared_ptr<const TrainedGP> train_low_fidelity(const Vector& t_low, const Vector& y_low, std::uint64_t seed,
                                                    const FitOptions& options)
{
    if (t_low.size() < 2)
        throw InvalidArgument("train_low_fidelity: needs at least 2 points");
    return std::make_shared<const TrainedGP>(fit(as_column(t_low), y_low, seed, options));
}

std::shared_ptr<const LowFidelityEvaluator> low_fidelity_surrogate(const FidelityPair& pair, std::uint64_t seed,
                                                                   const FitOptions& options)
{
    return std::make_shared<SurrogateEvaluator>(
        train_low_fidelity(pair.t_low, pair.y_low, mix_seed(seed, kLowSalt), options));
}

FusionModel build_kriging(const FidelityPair& pair, std::uint64_t seed, const FusionOptions& options)
{
    pair.validate();
    require_high(pair, "kriging");
    FusionModel m;
    m.method_ = Method::Kriging;
    m.id_ = "kriging";
    m.embedding_ = {0, 0.0, true, false};
    m.gp_ = fit(as_column(pair.t_high), pair.y_high, mix_seed(seed, kHighSalt), options.fit);
    return m;
}

FusionModel build_ar1(const FidelityPair& pair, std::uint64_t seed, const FusionOptions& options,
                      std::shared_ptr<const LowFidelityEvaluator> low, std::optional<double> fixed_rho)
{
    pair.validate();
    require_high(pair, "ar1");
    require_low(pair, "ar1");
    Ar1Options ao;
    ao.fit = options.fit;
    ao.fixed_rho = fixed_rho;
    // The decoupled path fits the high block exactly as Kriging does; only the joint search
    // uses the AR1 restart budget.
    if (!(fixed_rho && *fixed_rho == 0.0))
        ao.fit.restarts = options.ar1_restarts;

    const TrainedGP* start = nullptr;
    if (const auto* s = dynamic_cast<const SurrogateEvaluator*>(low.get()))
        start = &s->gp();
    std::shared_ptr<const TrainedGP> own;
    if (start == nullptr) {
        own = train_low_fidelity(pair.t_low, pair.y_low, mix_seed(seed, kLowSalt), options.fit);
        start = own.get();
    }

    FusionModel m;
    m.method_ = Method::Ar1;
    m.id_ = "ar1";
    m.embedding_ = {0, 0.0, true, false};
    m.ar1_ = fit_ar1(as_column(pair.t_low), pair.y_low, as_column(pair.t_high), pair.y_high,
                     mix_seed(seed, kHighSalt), ao, start);
    return m;
}

FusionModel build_gpe(const FidelityPair& pair, const EmbeddingConfig& config, std::uint64_t seed,
                      const FusionOptions& options, std::shared_ptr<const LowFidelityEvaluator> low)
{
    pair.validate();
    require_high(pair, "gpe");
    FusionModel m;
    m.method_ = Method::Gpe;
    m.id_ = "gpe";
    m.embedding_ = with_default_step(config, pair);
    m.embedding_.validate();
    if (m.embedding_.uses_low_fidelity()) {
        if (!low) {
            require_low(pair, "gpe");
            low = low_fidelity_surrogate(pair, seed, options.fit);
        }
        m.low_ = std::move(low);
    }
    const Matrix x =
        m.low_ ? build_embedding(pair.t_high, *m.low_, m.embedding_) : build_embedding(pair.t_high, m.embedding_);
    m.gp_ = fit(x, pair.y_high, mix_seed(seed, kHighSalt), options.fit);
    return m;
}

FusionModel build_nargp(const FidelityPair& pair, std::uint64_t seed, const FusionOptions& options,
                        std::shared_ptr<const LowFidelityEvaluator> low)
{
    FusionModel m = build_gpe(pair, {0, 0.0, true, true}, seed, options, std::move(low));
    m.method_ = Method::Nargp;
    m.id_ = "nargp";
    return m;
}

FusionModel build_model(const FidelityPair& pair, const MethodSpec& spec, std::uint64_t seed,
                        const FusionOptions& options, std::shared_ptr<const LowFidelityEvaluator> low)
{
    switch (spec.method) {
    case Method::Kriging:
        return build_kriging(pair, seed, options);
    case Method::Ar1:
        return build_ar1(pair, seed, options, std::move(low), spec.fixed_rho);
    case Method::Nargp:
        return build_nargp(pair, seed, options, std::move(low));
    case Method::Gpe:
        return build_gpe(pair, spec.embedding, seed, options, std::move(low));
    }
    throw InvalidArgument("build_model: unknown method");
}

Prediction run_fusion_pipeline(const FidelityPair& pair, const MethodSpec& spec, const Vector& test_points,
                               std::uint64_t seed, const FusionOptions& options,
                               std::shared_ptr<const LowFidelityEvaluator> low)
{
    for (Index i = 0; i < test_points.size(); ++i)
        if (!pair.domain.contains(test_points(i)))
            throw InvalidArgument("run_fusion_pipeline: test point " + std::to_string(test_points(i)) +
                                  " outside the domain");
    return build_model(pair, spec, seed, options, std::move(low)).predict(test_points);
}

} // namespace mfgp
