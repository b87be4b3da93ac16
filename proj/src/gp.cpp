#include "mfgp/gp.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Cholesky>

#include "gp_detail.hpp"
#include "mfgp/error.hpp"

namespace mfgp {

namespace detail {

    DataScale data_scale(const Matrix& inputs, const Vector& centered_targets)
    {
        DataScale s;
        s.input_range.resize(inputs.cols());
        for (Index d = 0; d < inputs.cols(); ++d) {
            const double r = inputs.rows() > 0 ? inputs.col(d).maxCoeff() - inputs.col(d).minCoeff() : 0.0;
            s.input_range(d) = (r > 0.0 && std::isfinite(r)) ? r : 1.0;
        }
        const double v = centered_targets.size() > 0 ? centered_targets.squaredNorm() / centered_targets.size() : 0.0;
        s.target_variance = (v > 0.0 && std::isfinite(v)) ? v : 1.0;
        return s;
    }

    void check_finite(const Matrix& inputs, const Vector& targets, const char* what)
    {
        if (!inputs.allFinite())
            throw InvalidArgument(std::string(what) + ": inputs contain non-finite values");
        if (!targets.allFinite())
            throw InvalidArgument(std::string(what) + ": targets contain non-finite values");
        if (inputs.rows() != targets.size())
            throw InvalidArgument(std::string(what) + ": " + std::to_string(inputs.rows()) + " input rows but " +
                                  std::to_string(targets.size()) + " targets");
    }

    void check_conflicting_duplicates(const Matrix& inputs, const Vector& targets)
    {
        for (Index i = 0; i < inputs.rows(); ++i)
            for (Index j = i + 1; j < inputs.rows(); ++j)
                if (inputs.row(i) == inputs.row(j) && targets(i) != targets(j))
                    throw NumericalError("rows " + std::to_string(i) + " and " + std::to_string(j) +
                                         " share an input but disagree on the target with noise pinned to 0");
    }

    Vector profile_start(const Vector& reference, Index n_weights, bool free_noise,
                         const std::function<double(const Vector&)>& lml)
    {
        // Length-scale relative to the input range from 1e-3 to 10; noise relative to target variance.
        constexpr int n_scale = 17;
        const double noise_levels[] = {1e-8, 1e-4, 1e-2};
        Vector best = reference;
        double best_value = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < n_scale; ++i) {
            const double log_ell = std::log(1e-3) + i * (std::log(10.0) - std::log(1e-3)) / (n_scale - 1);
            for (double noise : noise_levels) {
                Vector u = reference;
                u.head(n_weights).array() += -2.0 * log_ell;
                if (free_noise)
                    u(n_weights + 1) += std::log(noise);
                const double v = lml(u);
                if (v > best_value) {
                    best_value = v;
                    best = u;
                }
                if (!free_noise)
                    break;
            }
        }
        return best;
    }

    EvidenceTerms evidence_terms(const CholeskyFactor& factor, const Vector& y, bool with_w)
    {
        EvidenceTerms t;
        t.alpha = factor.solve(y);
        const double n = static_cast<double>(y.size());
        t.value = -0.5 * y.dot(t.alpha) - 0.5 * factor.log_determinant() - 0.5 * n * std::log(2.0 * std::numbers::pi);
        if (with_w) {
            t.w = factor.solve(Matrix(Matrix::Identity(y.size(), y.size())));
            t.w = t.alpha * t.alpha.transpose() - t.w;
        }
        return t;
    }

    Vector refine_solution(const std::function<Vector(const Vector&)>& apply,
                           const std::function<Vector(const Vector&)>& solve, const Vector& b, Vector x)
    {
        // Conjugate gradients preconditioned by the jittered factor. Most of the spectrum is already
        // solved by the preconditioner; the few modes near or below the jitter take one step each.
        constexpr int max_steps = 200;
        constexpr int patience = 10;
        const double target = 1e-14 * b.norm();
        Vector r = b - apply(x);
        Vector best = x;
        double best_norm = r.norm();
        Vector z = solve(r);
        Vector p = z;
        double rz = r.dot(z);
        int since_best = 0;
        for (int step = 0; step < max_steps && best_norm > target && since_best < patience; ++step) {
            const Vector ap = apply(p);
            const double pap = p.dot(ap);
            if (!(pap > 0.0) || !(rz > 0.0))
                break;
            const double a = rz / pap;
            x += a * p;
            r = b - apply(x);
            const double norm = r.norm();
            if (!std::isfinite(norm))
                break;
            if (norm < best_norm) {
                best = x;
                best_norm = norm;
                since_best = 0;
            } else {
                ++since_best;
            }
            z = solve(r);
            const double rz_next = r.dot(z);
            p = z + (rz_next / rz) * p;
            rz = rz_next;
        }
        return best;
    }

} // namespace detail

std::vector<double> JitterPolicy::levels() const
{
    std::vector<double> out;
    double level = initial;
    while (level <= maximum * (1.0 + 1e-9) && out.size() < 64) {
        out.push_back(level);
        if (level > 0.0 && growth <= 1.0)
            break;
        level = level > 0.0 ? level * growth : 1e-10;
    }
    if (out.empty())
        out.push_back(initial);
    return out;
}

double CholeskyFactor::log_determinant() const { return 2.0 * lower.diagonal().array().log().sum(); }

Vector CholeskyFactor::solve(const Vector& rhs) const
{
    Vector x = lower.triangularView<Eigen::Lower>().solve(rhs);
    lower.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
    return x;
}

Matrix CholeskyFactor::solve(const Matrix& rhs) const
{
    Matrix x = lower.triangularView<Eigen::Lower>().solve(rhs);
    lower.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
    return x;
}

CholeskyFactor factorize(const Matrix& k, double diag_scale, const JitterPolicy& jitter)
{
    if (!k.allFinite())
        throw NumericalError("covariance matrix contains non-finite entries");
    const double scale = diag_scale > 0.0 && std::isfinite(diag_scale) ? diag_scale : 1.0;
    for (double level : jitter.levels()) {
        const double j = level * scale;
        Matrix a = k;
        a.diagonal().array() += j;
        Eigen::LLT<Matrix> llt(a);
        if (llt.info() != Eigen::Success)
            continue;
        Matrix l = llt.matrixL();
        if (!l.allFinite() || (l.diagonal().array() <= 0.0).any())
            continue;
        return {std::move(l), j};
    }
    throw NumericalError("Cholesky factorization failed after jitter escalation to " +
                         std::to_string(jitter.maximum) + " x mean diagonal");
}

namespace {

    // Evaluates the evidence and its log-space gradient for one parameter setting, reusing the
    // per-dimension squared differences across optimizer iterations.
    class Evidence {
    public:
        Evidence(const Matrix& inputs, const Vector& y, const JitterPolicy& jitter)
            : inputs_(inputs), y_(y), jitter_(jitter), sq_diff_(pairwise_sq_differences(inputs))
        {
        }

        LmlResult evaluate(const KernelParams& p, bool with_gradient) const
        {
            const Index n = inputs_.rows();
            const Index d = inputs_.cols();
            Matrix kk(n, n);
            for (Index j = 0; j < n; ++j)
                for (Index i = j; i < n; ++i) {
                    double s = 0.0;
                    for (Index c = 0; c < d; ++c)
                        s += p.ard_weights(c) * sq_diff_[static_cast<std::size_t>(c)](i, j);
                    const double v = p.signal_variance * std::exp(-0.5 * s);
                    kk(i, j) = v;
                    kk(j, i) = v;
                }
            Matrix k = kk;
            k.diagonal().array() += p.noise_variance;
            const CholeskyFactor f = factorize(k, p.signal_variance, jitter_);
            const auto t = detail::evidence_terms(f, y_, with_gradient);

            LmlResult r;
            r.value = t.value;
            r.jitter = f.jitter;
            if (!with_gradient)
                return r;
            r.gradient.resize(d + 2);
            const Matrix wk = t.w.cwiseProduct(kk);
            for (Index c = 0; c < d; ++c)
                r.gradient(c) = -0.25 * p.ard_weights(c) * wk.cwiseProduct(sq_diff_[static_cast<std::size_t>(c)]).sum();
            const double trace_w = t.w.trace();
            // Jitter scales with the signal variance at a fixed ladder level.
            r.gradient(d) = 0.5 * wk.sum() + 0.5 * f.jitter * trace_w;
            r.gradient(d + 1) = 0.5 * p.noise_variance * trace_w;
            return r;
        }

    private:
        const Matrix& inputs_;
        const Vector& y_;
        JitterPolicy jitter_;
        std::vector<Matrix> sq_diff_;
    };

    KernelParams unpack(const Vector& u, Index d, const std::optional<double>& fixed_noise)
    {
        KernelParams p;
        p.ard_weights = u.head(d).array().exp();
        p.signal_variance = std::exp(u(d));
        p.noise_variance = fixed_noise ? *fixed_noise : std::exp(u(d + 1));
        return p;
    }

    void check_inputs(const Matrix& inputs, const Vector& targets)
    {
        if (inputs.rows() < 1)
            throw InvalidArgument("fit: need at least one training point");
        if (inputs.cols() < 1)
            throw InvalidArgument("fit: inputs need at least one column");
        detail::check_finite(inputs, targets, "fit");
    }

} // namespace

LmlResult log_marginal_likelihood(const Matrix& inputs, const Vector& targets, const KernelParams& params,
                                  const JitterPolicy& jitter)
{
    if (inputs.rows() < 1)
        throw InvalidArgument("log_marginal_likelihood: need at least one point");
    detail::check_finite(inputs, targets, "log_marginal_likelihood");
    if (inputs.cols() != params.dim())
        throw InvalidArgument("log_marginal_likelihood: input dimension does not match ARD weights");
    params.validate();
    return Evidence(inputs, targets, jitter).evaluate(params, true);
}

TrainedGP TrainedGP::condition(Matrix inputs, const Vector& targets, const KernelParams& params,
                               const JitterPolicy& jitter)
{
    check_inputs(inputs, targets);
    if (inputs.cols() != params.dim())
        throw InvalidArgument("condition: input dimension does not match ARD weights");
    params.validate();

    TrainedGP gp;
    gp.offset_ = targets.mean();
    gp.targets_ = targets.array() - gp.offset_;
    gp.inputs_ = std::move(inputs);
    gp.params_ = params;
    Matrix k = gram_matrix(gp.inputs_, params);
    k.diagonal().array() += params.noise_variance;
    gp.factor_ = factorize(k, params.signal_variance, jitter);
    const auto t = detail::evidence_terms(gp.factor_, gp.targets_, false);
    gp.lml_ = t.value;
    // The jitter conditions the factor but is not part of the model: alpha solves the system without it.
    gp.alpha_ = detail::refine_solution([&](const Vector& v) { return Vector(k * v); },
                                        [&](const Vector& v) { return gp.factor_.solve(v); }, gp.targets_, t.alpha);
    return gp;
}

Prediction TrainedGP::predict(const Matrix& query) const
{
    if (query.cols() != dim())
        throw InvalidArgument("predict: query has " + std::to_string(query.cols()) + " columns, model expects " +
                              std::to_string(dim()));
    const Matrix ks = cross_covariance(inputs_, query, params_);  // N x M
    Prediction p;
    p.mean = ks.transpose() * alpha_;
    p.mean.array() += offset_;
    const Matrix v = factor_.lower.triangularView<Eigen::Lower>().solve(ks);
    p.variance = (params_.signal_variance - v.colwise().squaredNorm().array()).max(0.0).matrix().transpose();
    return p;
}

TrainedGP fit(const Matrix& inputs, const Vector& targets, std::uint64_t seed, const FitOptions& options)
{
    check_inputs(inputs, targets);
    if (options.restarts < 1)
        throw InvalidArgument("fit: restarts must be >= 1");
    if (options.fixed_noise && (*options.fixed_noise < 0.0 || !std::isfinite(*options.fixed_noise)))
        throw InvalidArgument("fit: pinned noise variance must be finite and >= 0");
    if (options.fixed_noise && *options.fixed_noise == 0.0)
        detail::check_conflicting_duplicates(inputs, targets);

    const Index d = inputs.cols();
    const double offset = targets.mean();
    const Vector y = targets.array() - offset;
    const detail::DataScale scale = detail::data_scale(inputs, y);
    const bool free_noise = !options.fixed_noise.has_value();
    const Index n_params = d + (free_noise ? 2 : 1);

    Vector reference(n_params);
    for (Index c = 0; c < d; ++c)
        reference(c) = -2.0 * std::log(scale.input_range(c));
    reference(d) = std::log(scale.target_variance);
    if (free_noise)
        reference(d + 1) = std::log(scale.target_variance);

    const JitterPolicy search_jitter{options.jitter.initial, options.jitter.initial, options.jitter.growth};
    const Evidence evidence(inputs, y, search_jitter);
    const Objective objective = [&](const Vector& u, Vector& grad) {
        if (((u - reference).array().abs() > options.log_bound).any() ||
            std::abs(u(d) - reference(d)) > options.signal_log_bound)
            return std::numeric_limits<double>::infinity();
        try {
            const LmlResult r = evidence.evaluate(unpack(u, d, options.fixed_noise), true);
            grad = -r.gradient.head(n_params);
            return -r.value;
        } catch (const NumericalError&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    std::vector<Vector> starts;
    if (options.profile_start)
        starts.push_back(detail::profile_start(reference, d, free_noise, [&](const Vector& u) {
            try {
                return evidence.evaluate(unpack(u, d, options.fixed_noise), false).value;
            } catch (const NumericalError&) {
                return -std::numeric_limits<double>::infinity();
            }
        }));

    std::mt19937_64 rng(seed);
    for (int r = 0; r < options.restarts; ++r) {
        Vector u0(n_params);
        for (Index c = 0; c < n_params; ++c)
            u0(c) = reference(c) + detail::log_uniform(rng, options.init_min, options.init_max);
        starts.push_back(std::move(u0));
    }

    std::vector<RestartSummary> summaries;
    Vector best_u;
    double best_lml = -std::numeric_limits<double>::infinity();
    for (const Vector& u0 : starts) {
        Vector g0(n_params);
        const double f0 = objective(u0, g0);
        const LbfgsResult res = minimize_lbfgs(objective, u0, options.optimizer);

        RestartSummary s;
        s.initial_lml = std::isfinite(f0) ? -f0 : -std::numeric_limits<double>::infinity();
        s.final_lml = std::isfinite(res.value) ? -res.value : -std::numeric_limits<double>::infinity();
        s.iterations = res.iterations;
        s.converged = res.converged;
        summaries.push_back(s);
        if (s.final_lml > best_lml) {
            best_lml = s.final_lml;
            best_u = res.x;
        }
    }
    if (!std::isfinite(best_lml))
        throw NumericalError("fit: no restart produced a factorizable covariance");

    TrainedGP gp = TrainedGP::condition(inputs, targets, unpack(best_u, d, options.fixed_noise), options.jitter);
    gp.restarts_ = std::move(summaries);
    return gp;
}

} // namespace mfgp
