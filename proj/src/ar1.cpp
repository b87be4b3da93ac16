#include "mfgp/ar1.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include <Eigen/Cholesky>

#include "gp_detail.hpp"
#include "mfgp/error.hpp"

namespace mfgp {

namespace {

    // Packed layout: [log w1 (d), log s1, log w2 (d), log s2, rho, log noise_low, log noise_high].
    struct Layout {
        Index d;
        Index w1() const { return 0; }
        Index s1() const { return d; }
        Index w2() const { return d + 1; }
        Index s2() const { return 2 * d + 1; }
        Index rho() const { return 2 * d + 2; }
        Index noise_low() const { return 2 * d + 3; }
        Index noise_high() const { return 2 * d + 4; }
        Index size() const { return 2 * d + 5; }
    };

    Ar1Params unpack(const Vector& u, const Layout& l)
    {
        Ar1Params p;
        p.low.ard_weights = u.segment(l.w1(), l.d).array().exp();
        p.low.signal_variance = std::exp(u(l.s1()));
        p.low.noise_variance = std::exp(u(l.noise_low()));
        p.diff.ard_weights = u.segment(l.w2(), l.d).array().exp();
        p.diff.signal_variance = std::exp(u(l.s2()));
        p.diff.noise_variance = std::exp(u(l.noise_high()));
        p.rho = u(l.rho());
        return p;
    }

    struct JointFactor {
        Matrix l11;
        Matrix l21;
        Matrix l22;
        double level1 = 0.0;  // ladder level that made each block factor
        double level2 = 0.0;
        double j1 = 0.0;
        double j2 = 0.0;

        Matrix full() const
        {
            const Index nl = l11.rows();
            const Index nh = l22.rows();
            Matrix l = Matrix::Zero(nl + nh, nl + nh);
            l.topLeftCorner(nl, nl) = l11;
            l.bottomLeftCorner(nh, nl) = l21;
            l.bottomRightCorner(nh, nh) = l22;
            return l;
        }

        double log_determinant() const
        {
            return 2.0 * (l11.diagonal().array().log().sum() + l22.diagonal().array().log().sum());
        }

        // Block forward/back substitution. With a zero coupling block this performs exactly the
        // operations of the single-output solve on each block.
        Vector solve(const Vector& y1, const Vector& y2) const
        {
            Vector z1 = l11.triangularView<Eigen::Lower>().solve(y1);
            Vector a2 = l22.triangularView<Eigen::Lower>().solve(Vector(y2 - l21 * z1));
            l22.transpose().triangularView<Eigen::Upper>().solveInPlace(a2);
            Vector a1 = z1 - l21.transpose() * a2;
            l11.transpose().triangularView<Eigen::Upper>().solveInPlace(a1);
            Vector out(y1.size() + y2.size());
            out << a1, a2;
            return out;
        }
    };

    bool cholesky(const Matrix& a, Matrix& lower)
    {
        Eigen::LLT<Matrix> llt(a);
        if (llt.info() != Eigen::Success)
            return false;
        lower = llt.matrixL();
        return lower.allFinite() && (lower.diagonal().array() > 0.0).all();
    }

    JointFactor factor_joint(const Matrix& k1_ll, const Matrix& k1_hl, const Matrix& k1_hh, const Matrix& k2_hh,
                             const Ar1Params& p, const JitterPolicy& policy)
    {
        Matrix k11 = k1_ll;
        k11.diagonal().array() += p.low.noise_variance;
        const Matrix k21 = p.rho * k1_hl;
        Matrix k22 = (p.rho * p.rho) * k1_hh + k2_hh;
        k22.diagonal().array() += p.diff.noise_variance;
        if (!k11.allFinite() || !k21.allFinite() || !k22.allFinite())
            throw NumericalError("AR1 covariance contains non-finite entries");

        // Each block walks the ladder on its own, so a zero coupling reproduces the single-output
        // factors exactly.
        const double scale1 = p.low.signal_variance;
        const double scale2 = p.rho * p.rho * p.low.signal_variance + p.diff.signal_variance;
        const std::vector<double> levels = policy.levels();
        JointFactor f;
        bool ok = false;
        for (double level : levels) {
            Matrix a11 = k11;
            f.level1 = level;
            f.j1 = level * scale1;
            a11.diagonal().array() += f.j1;
            if ((ok = cholesky(a11, f.l11)))
                break;
        }
        if (!ok)
            throw NumericalError("AR1 low-fidelity block failed to factor after jitter escalation");
        f.l21 = f.l11.triangularView<Eigen::Lower>().solve(k21.transpose()).transpose();
        for (double level : levels) {
            Matrix s = k22;
            f.level2 = level;
            f.j2 = level * scale2;
            s.diagonal().array() += f.j2;
            s -= f.l21 * f.l21.transpose();
            if ((ok = cholesky(s, f.l22)))
                return f;
        }
        throw NumericalError("AR1 high-fidelity block failed to factor after jitter escalation");
    }

    Vector centered(const Vector& y) { return y.array() - y.mean(); }

    void check_block(const Matrix& x, const Vector& y, const char* what)
    {
        if (x.rows() < 1)
            throw InvalidArgument(std::string(what) + ": need at least one point");
        detail::check_finite(x, y, what);
    }

    // Joint evidence with cached squared differences over the stacked inputs.
    class Ar1Evidence {
    public:
        Ar1Evidence(const Matrix& x_low, const Vector& y_low, const Matrix& x_high, const Vector& y_high,
                    const JitterPolicy& jitter)
            : nl_(x_low.rows()), nh_(x_high.rows()), jitter_(jitter)
        {
            Matrix x(nl_ + nh_, x_low.cols());
            x << x_low, x_high;
            y_.resize(nl_ + nh_);
            y_ << y_low, y_high;
            sq_ = pairwise_sq_differences(x);
        }

        LmlResult evaluate(const Ar1Params& p, bool with_gradient) const
        {
            const Index n = nl_ + nh_;
            const Index d = p.low.dim();
            Matrix k1(n, n);
            Matrix k2(nh_, nh_);
            for (Index j = 0; j < n; ++j)
                for (Index i = j; i < n; ++i) {
                    double s1 = 0.0;
                    double s2 = 0.0;
                    for (Index c = 0; c < d; ++c) {
                        const double sq = sq_[static_cast<std::size_t>(c)](i, j);
                        s1 += p.low.ard_weights(c) * sq;
                        s2 += p.diff.ard_weights(c) * sq;
                    }
                    const double v1 = p.low.signal_variance * std::exp(-0.5 * s1);
                    k1(i, j) = v1;
                    k1(j, i) = v1;
                    if (j >= nl_) {
                        const double v2 = p.diff.signal_variance * std::exp(-0.5 * s2);
                        k2(i - nl_, j - nl_) = v2;
                        k2(j - nl_, i - nl_) = v2;
                    }
                }

            const JointFactor f = factor_joint(k1.topLeftCorner(nl_, nl_), k1.bottomLeftCorner(nh_, nl_),
                                               k1.bottomRightCorner(nh_, nh_), k2, p, jitter_);
            const Vector alpha = f.solve(y_.head(nl_), y_.tail(nh_));
            LmlResult r;
            r.value = -0.5 * y_.dot(alpha) - 0.5 * f.log_determinant() -
                      0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
            r.jitter = std::max(f.level1, f.level2);
            if (!with_gradient)
                return r;

            const CholeskyFactor full{f.full(), 0.0};
            const Matrix w = alpha * alpha.transpose() - full.solve(Matrix(Matrix::Identity(n, n)));
            const auto w11 = w.topLeftCorner(nl_, nl_);
            const auto w21 = w.bottomLeftCorner(nh_, nl_);
            const auto w22 = w.bottomRightCorner(nh_, nh_);
            const double rho = p.rho;

            const Layout l{d};
            r.gradient = Vector::Zero(l.size());

            // k1 appears in every block, scaled by (1, rho, rho^2).
            const Matrix wk1 = w.cwiseProduct(k1);
            auto block_sum = [&](const Matrix& m) {
                return 0.5 * (m.topLeftCorner(nl_, nl_).sum() + 2.0 * rho * m.bottomLeftCorner(nh_, nl_).sum() +
                              rho * rho * m.bottomRightCorner(nh_, nh_).sum());
            };
            for (Index c = 0; c < d; ++c)
                r.gradient(l.w1() + c) =
                    -0.5 * p.low.ard_weights(c) * block_sum(wk1.cwiseProduct(sq_[static_cast<std::size_t>(c)]));
            r.gradient(l.s1()) = block_sum(wk1) + 0.5 * f.j1 * w11.trace() +
                                 0.5 * f.level2 * rho * rho * p.low.signal_variance * w22.trace();

            const Matrix wk2 = w22.cwiseProduct(k2);
            for (Index c = 0; c < d; ++c)
                r.gradient(l.w2() + c) = -0.25 * p.diff.ard_weights(c) *
                                         wk2.cwiseProduct(sq_[static_cast<std::size_t>(c)].bottomRightCorner(nh_, nh_)).sum();
            r.gradient(l.s2()) = 0.5 * wk2.sum() + 0.5 * f.level2 * p.diff.signal_variance * w22.trace();

            r.gradient(l.rho()) = w21.cwiseProduct(k1.bottomLeftCorner(nh_, nl_)).sum() +
                                  rho * w22.cwiseProduct(k1.bottomRightCorner(nh_, nh_)).sum() +
                                  f.level2 * rho * p.low.signal_variance * w22.trace();
            r.gradient(l.noise_low()) = 0.5 * p.low.noise_variance * w11.trace();
            r.gradient(l.noise_high()) = 0.5 * p.diff.noise_variance * w22.trace();
            return r;
        }

    private:
        Index nl_;
        Index nh_;
        JitterPolicy jitter_;
        Vector y_;
        std::vector<Matrix> sq_;
    };

} // namespace

LmlResult ar1_log_marginal_likelihood(const Matrix& x_low, const Vector& y_low, const Matrix& x_high,
                                      const Vector& y_high, const Ar1Params& params, const JitterPolicy& jitter)
{
    check_block(x_low, y_low, "ar1 low-fidelity block");
    check_block(x_high, y_high, "ar1 high-fidelity block");
    if (x_low.cols() != x_high.cols() || x_low.cols() != params.low.dim() || x_low.cols() != params.diff.dim())
        throw InvalidArgument("ar1: input dimensions disagree");
    params.low.validate();
    params.diff.validate();
    return Ar1Evidence(x_low, y_low, x_high, y_high, jitter).evaluate(params, true);
}

Ar1Model Ar1Model::condition(Matrix x_low, const Vector& y_low, Matrix x_high, const Vector& y_high,
                             const Ar1Params& params, const JitterPolicy& jitter)
{
    check_block(x_low, y_low, "ar1 low-fidelity block");
    check_block(x_high, y_high, "ar1 high-fidelity block");
    if (x_low.cols() != x_high.cols() || x_low.cols() != params.low.dim() || x_low.cols() != params.diff.dim())
        throw InvalidArgument("ar1: input dimensions disagree");
    params.low.validate();
    params.diff.validate();
    if (!std::isfinite(params.rho))
        throw InvalidArgument("ar1: rho must be finite");

    Ar1Model m;
    m.offset_low_ = y_low.mean();
    m.offset_high_ = y_high.mean();
    const Vector yl = centered(y_low);
    const Vector yh = centered(y_high);
    m.params_ = params;

    const Matrix k1_ll = gram_matrix(x_low, params.low);
    const Matrix k1_hl = cross_covariance(x_high, x_low, params.low);
    const Matrix k1_hh = gram_matrix(x_high, params.low);
    const Matrix k2_hh = gram_matrix(x_high, params.diff);
    const JointFactor f = factor_joint(k1_ll, k1_hl, k1_hh, k2_hh, params, jitter);
    m.alpha_ = f.solve(yl, yh);
    Vector y(yl.size() + yh.size());
    y << yl, yh;
    m.lml_ = -0.5 * y.dot(m.alpha_) - 0.5 * f.log_determinant() -
             0.5 * static_cast<double>(y.size()) * std::log(2.0 * std::numbers::pi);

    // Refine against the joint covariance without jitter, as the single-output model does.
    const Index nl = yl.size();
    const Matrix k21 = params.rho * k1_hl;
    Matrix k22 = (params.rho * params.rho) * k1_hh + k2_hh;
    k22.diagonal().array() += params.diff.noise_variance;
    const auto apply = [&](const Vector& v) {
        Vector out(v.size());
        out.head(nl) = k1_ll * v.head(nl) + params.low.noise_variance * v.head(nl) + k21.transpose() * v.tail(v.size() - nl);
        out.tail(v.size() - nl) = k21 * v.head(nl) + k22 * v.tail(v.size() - nl);
        return out;
    };
    const auto solve = [&](const Vector& v) { return f.solve(v.head(nl), v.tail(v.size() - nl)); };
    if (params.rho != 0.0) {
        m.alpha_ = detail::refine_solution(apply, solve, y, m.alpha_);
    } else {
        // Uncoupled blocks are refined one at a time, so the high block matches a single-fidelity model.
        const Index nh = yh.size();
        auto block = [&](const Vector& v, bool low) {
            Vector full = Vector::Zero(nl + nh);
            (low ? full.head(nl) : full.tail(nh)) = v;
            return full;
        };
        m.alpha_.head(nl) = detail::refine_solution(
            [&](const Vector& v) { return Vector(apply(block(v, true)).head(nl)); },
            [&](const Vector& v) { return Vector(solve(block(v, true)).head(nl)); }, yl, m.alpha_.head(nl));
        m.alpha_.tail(nh) = detail::refine_solution(
            [&](const Vector& v) { return Vector(apply(block(v, false)).tail(nh)); },
            [&](const Vector& v) { return Vector(solve(block(v, false)).tail(nh)); }, yh, m.alpha_.tail(nh));
    }
    m.lower_ = f.full();
    m.level_ = std::max(f.level1, f.level2);
    m.x_low_ = std::move(x_low);
    m.x_high_ = std::move(x_high);
    return m;
}

Prediction Ar1Model::predict(const Matrix& query) const
{
    if (query.cols() != dim())
        throw InvalidArgument("ar1 predict: query has " + std::to_string(query.cols()) + " columns, model expects " +
                              std::to_string(dim()));
    const Index nl = x_low_.rows();
    const Index nh = x_high_.rows();
    const double rho = params_.rho;
    const Matrix ks_low = rho * cross_covariance(x_low_, query, params_.low);
    const Matrix ks_high = (rho * rho) * cross_covariance(x_high_, query, params_.low) +
                           cross_covariance(x_high_, query, params_.diff);

    Prediction p;
    const Vector a1 = alpha_.head(nl);
    const Vector a2 = alpha_.tail(nh);
    p.mean = ks_low.transpose() * a1;
    p.mean += ks_high.transpose() * a2;
    p.mean.array() += offset_high_;

    const auto l11 = lower_.topLeftCorner(nl, nl);
    const auto l21 = lower_.bottomLeftCorner(nh, nl);
    const auto l22 = lower_.bottomRightCorner(nh, nh);
    const Matrix v1 = l11.triangularView<Eigen::Lower>().solve(ks_low);
    const Matrix v2 = l22.triangularView<Eigen::Lower>().solve(Matrix(ks_high - l21 * v1));
    const double prior = rho * rho * params_.low.signal_variance + params_.diff.signal_variance;
    p.variance =
        (prior - (v1.colwise().squaredNorm() + v2.colwise().squaredNorm()).array()).max(0.0).matrix().transpose();
    return p;
}

Ar1Model fit_ar1(const Matrix& x_low, const Vector& y_low, const Matrix& x_high, const Vector& y_high,
                 std::uint64_t seed, const Ar1Options& options, const TrainedGP* low_start)
{
    check_block(x_low, y_low, "ar1 low-fidelity block");
    check_block(x_high, y_high, "ar1 high-fidelity block");
    if (x_low.cols() != x_high.cols())
        throw InvalidArgument("ar1: input dimensions disagree");
    if (options.fit.restarts < 1)
        throw InvalidArgument("ar1: restarts must be >= 1");
    if (options.fixed_rho && !std::isfinite(*options.fixed_rho))
        throw InvalidArgument("ar1: pinned rho must be finite");
    const Index d = x_low.cols();

    // Decoupled blocks: the joint evidence is a sum, so each kernel is fitted on its own block
    // with the same seed derivation a single-fidelity fit of that block would use.
    if (options.fixed_rho && *options.fixed_rho == 0.0) {
        FitOptions fo = options.fit;
        const TrainedGP low = low_start ? *low_start : fit(x_low, y_low, mix_seed(seed, 1), fo);
        const TrainedGP high = fit(x_high, y_high, seed, fo);
        return Ar1Model::condition(x_low, y_low, x_high, y_high, {low.params(), high.params(), 0.0},
                                   options.fit.jitter);
    }

    const Layout layout{d};
    const Vector yl = centered(y_low);
    const Vector yh = centered(y_high);
    Matrix x_all(x_low.rows() + x_high.rows(), d);
    x_all << x_low, x_high;
    const detail::DataScale scale_low = detail::data_scale(x_all, yl);
    const detail::DataScale scale_high = detail::data_scale(x_all, yh);

    Vector reference(layout.size());
    for (Index c = 0; c < d; ++c) {
        reference(layout.w1() + c) = -2.0 * std::log(scale_low.input_range(c));
        reference(layout.w2() + c) = -2.0 * std::log(scale_high.input_range(c));
    }
    reference(layout.s1()) = std::log(scale_low.target_variance);
    reference(layout.s2()) = std::log(scale_high.target_variance);
    reference(layout.rho()) = 0.0;
    reference(layout.noise_low()) = std::log(scale_low.target_variance);
    reference(layout.noise_high()) = std::log(scale_high.target_variance);
    const double rho_bound = 1e3 * std::sqrt(scale_high.target_variance / scale_low.target_variance);

    // Pinned coordinates keep their value in `fixed`; the search runs over the rest.
    const double rho_value = options.fixed_rho.value_or(options.rho_init);
    const auto& pinned_noise = options.fit.fixed_noise;
    auto is_pinned = [&](Index k) {
        if (k == layout.rho())
            return options.fixed_rho.has_value();
        return pinned_noise.has_value() && (k == layout.noise_low() || k == layout.noise_high());
    };
    Vector fixed = Vector::Zero(layout.size());
    fixed(layout.rho()) = rho_value;
    if (pinned_noise) {
        fixed(layout.noise_low()) = std::log(*pinned_noise);
        fixed(layout.noise_high()) = std::log(*pinned_noise);
    }
    std::vector<Index> free;
    for (Index k = 0; k < layout.size(); ++k)
        if (!is_pinned(k))
            free.push_back(k);
    const Index n_free = static_cast<Index>(free.size());

    auto expand = [&](const Vector& v) {
        Vector u = fixed;
        for (Index k = 0; k < n_free; ++k)
            u(free[static_cast<std::size_t>(k)]) = v(k);
        return u;
    };
    auto reduce = [&](const Vector& u) {
        Vector v(n_free);
        for (Index k = 0; k < n_free; ++k)
            v(k) = u(free[static_cast<std::size_t>(k)]);
        return v;
    };

    const JitterPolicy search_jitter{options.fit.jitter.initial, options.fit.jitter.initial,
                                     options.fit.jitter.growth};
    const Ar1Evidence evidence(x_low, yl, x_high, yh, search_jitter);
    const Objective objective = [&](const Vector& v, Vector& grad) {
        const Vector u = expand(v);
        for (Index k = 0; k < layout.size(); ++k) {
            if (is_pinned(k))
                continue;
            double bound = options.fit.log_bound;
            if (k == layout.rho())
                bound = rho_bound;
            else if (k == layout.s1() || k == layout.s2())
                bound = options.fit.signal_log_bound;
            if (std::abs(u(k) - reference(k)) > bound)
                return std::numeric_limits<double>::infinity();
        }
        try {
            const LmlResult r = evidence.evaluate(unpack(u, layout), true);
            grad = -reduce(r.gradient);
            return -r.value;
        } catch (const NumericalError&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    std::vector<Vector> starts;
    if (options.fit.profile_start || low_start) {
        // k1 from a low-fidelity fit; k2 profiled on what rho * k1 leaves unexplained at the
        // high-fidelity points.
        const TrainedGP low = low_start ? *low_start : fit(x_low, y_low, mix_seed(seed, 1), options.fit);
        Vector u = reference;
        u.segment(layout.w1(), d) = low.params().ard_weights.array().max(1e-300).log();
        u(layout.s1()) = std::log(low.params().signal_variance);
        u(layout.noise_low()) = std::log(std::max(low.params().noise_variance, 1e-300));
        u(layout.rho()) = rho_value;
        const Vector residual = y_high - rho_value * low.predict(x_high).mean;
        FitOptions profile = options.fit;
        profile.restarts = 1;
        const TrainedGP diff = fit(x_high, residual, mix_seed(seed, 2), profile);
        u.segment(layout.w2(), d) = diff.params().ard_weights.array().max(1e-300).log();
        u(layout.s2()) = std::log(diff.params().signal_variance);
        u(layout.noise_high()) = std::log(std::max(diff.params().noise_variance, 1e-300));
        for (Index k = 0; k < layout.size(); ++k) {
            if (is_pinned(k)) {
                u(k) = fixed(k);
            } else if (k != layout.rho()) {
                const double bound =
                    k == layout.s1() || k == layout.s2() ? options.fit.signal_log_bound : options.fit.log_bound;
                u(k) = std::clamp(u(k), reference(k) - bound + 0.5, reference(k) + bound - 0.5);
            }
        }
        starts.push_back(reduce(u));
    }
    std::mt19937_64 rng(seed);
    for (int r = 0; r < options.fit.restarts; ++r) {
        Vector u(layout.size());
        for (Index k = 0; k < layout.size(); ++k)
            u(k) = reference(k) + detail::log_uniform(rng, options.fit.init_min, options.fit.init_max);
        starts.push_back(reduce(u));
    }

    Vector best;
    double best_value = std::numeric_limits<double>::infinity();
    for (const Vector& v0 : starts) {
        const LbfgsResult res = minimize_lbfgs(objective, v0, options.fit.optimizer);
        if (res.value < best_value) {
            best_value = res.value;
            best = res.x;
        }
    }
    if (!std::isfinite(best_value))
        throw NumericalError("ar1: no start produced a factorizable joint covariance");
    return Ar1Model::condition(x_low, y_low, x_high, y_high, unpack(expand(best), layout), options.fit.jitter);
}

} // namespace mfgp
