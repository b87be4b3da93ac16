#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mfgp/ar1.hpp"
#include "mfgp/embedding.hpp"
#include "mfgp/gp.hpp"

namespace mfgp {

enum class Method { Kriging, Ar1, Nargp, Gpe };

std::string_view method_name(Method m);

/// A fusion method plus its input space. `embedding.delay_step <= 0` means "use the pair's
/// default": the low-fidelity grid spacing.
struct MethodSpec {
    std::string id;
    Method method = Method::Kriging;
    EmbeddingConfig embedding{0, 0.0, true, false};
    /// AR1 only: pins the scaling between the two kernels.
    std::optional<double> fixed_rho;

    /// Built-in ids: kriging, ar1, nargp, gpe (t, f_l, 2 delays), gpe2 (4 delays),
    /// delays (f_l and 2 delays, no t), delays1 (f_l and 1 delay), gp_fl (f_l only).
    static MethodSpec named(std::string_view id);
    static std::vector<std::string> known_ids();
    static MethodSpec gpe(std::string id, const EmbeddingConfig& embedding);
};

/// Sparse high-fidelity and dense low-fidelity samples over a common domain.
struct FidelityPair {
    Vector t_high;
    Vector y_high;
    Vector t_low;
    Vector y_low;
    Interval domain{0.0, 1.0};

    void validate() const;
    /// Low-fidelity grid spacing, the default delay step.
    double default_delay_step() const;
};

struct FusionOptions {
    FitOptions fit;
    /// Random restarts of the joint AR1 optimization (in addition to its warm start).
    int ar1_restarts = 2;
};

/// Trained fusion model. Immutable; concurrent predict calls are safe.
class FusionModel {
public:
    Method method() const { return method_; }
    const std::string& id() const { return id_; }
    const EmbeddingConfig& embedding() const { return embedding_; }
    std::optional<double> rho() const;

    /// The high-fidelity GP (every method but AR1).
    const TrainedGP* gp() const { return gp_ ? &*gp_ : nullptr; }
    const Ar1Model* ar1() const { return ar1_ ? &*ar1_ : nullptr; }
    const std::shared_ptr<const LowFidelityEvaluator>& low_fidelity() const { return low_; }

    /// Posterior of f_h at the given times; latent variance.
    Prediction predict(const Vector& t) const;

private:
    friend FusionModel build_kriging(const FidelityPair&, std::uint64_t, const FusionOptions&);
    friend FusionModel build_ar1(const FidelityPair&, std::uint64_t, const FusionOptions&,
                                 std::shared_ptr<const LowFidelityEvaluator>, std::optional<double>);
    friend FusionModel build_nargp(const FidelityPair&, std::uint64_t, const FusionOptions&,
                                   std::shared_ptr<const LowFidelityEvaluator>);
    friend FusionModel build_gpe(const FidelityPair&, const EmbeddingConfig&, std::uint64_t, const FusionOptions&,
                                 std::shared_ptr<const LowFidelityEvaluator>);

    FusionModel() = default;

    Method method_ = Method::Kriging;
    std::string id_;
    EmbeddingConfig embedding_;
    std::optional<TrainedGP> gp_;
    std::optional<Ar1Model> ar1_;
    std::shared_ptr<const LowFidelityEvaluator> low_;
};

/// 1-D GP on the low-fidelity samples, usable at any time (extrapolation allowed).
std::shared_ptr<const TrainedGP> train_low_fidelity(const Vector& t_low, const Vector& y_low, std::uint64_t seed,
                                                    const FitOptions& options = {});

/// Wraps a freshly trained low-fidelity GP as an evaluator, with the seed derivation the builders use.
std::shared_ptr<const LowFidelityEvaluator> low_fidelity_surrogate(const FidelityPair& pair, std::uint64_t seed,
                                                                   const FitOptions& options = {});

/// GP on (t_h, y_h) alone.
FusionModel build_kriging(const FidelityPair& pair, std::uint64_t seed, const FusionOptions& options = {});

/// Joint coKriging over both blocks. A surrogate `low` warm-starts the low-fidelity kernel.
FusionModel build_ar1(const FidelityPair& pair, std::uint64_t seed, const FusionOptions& options = {},
                      std::shared_ptr<const LowFidelityEvaluator> low = nullptr,
                      std::optional<double> fixed_rho = std::nullopt);

/// GP over (t, f_l(t)). Without `low`, a surrogate is trained from the pair's low-fidelity samples.
FusionModel build_nargp(const FidelityPair& pair, std::uint64_t seed, const FusionOptions& options = {},
                        std::shared_ptr<const LowFidelityEvaluator> low = nullptr);

/// GP over the embedding of t. Without `low`, a surrogate is trained when the embedding needs one.
FusionModel build_gpe(const FidelityPair& pair, const EmbeddingConfig& config, std::uint64_t seed,
                      const FusionOptions& options = {}, std::shared_ptr<const LowFidelityEvaluator> low = nullptr);

/// Dispatches on the spec.
FusionModel build_model(const FidelityPair& pair, const MethodSpec& spec, std::uint64_t seed,
                        const FusionOptions& options = {}, std::shared_ptr<const LowFidelityEvaluator> low = nullptr);

/// Low-fidelity model, embedding, high-fidelity fit and prediction at `test_points` in one call.
Prediction run_fusion_pipeline(const FidelityPair& pair, const MethodSpec& spec, const Vector& test_points,
                               std::uint64_t seed, const FusionOptions& options = {},
                               std::shared_ptr<const LowFidelityEvaluator> low = nullptr);

} // namespace mfgp
