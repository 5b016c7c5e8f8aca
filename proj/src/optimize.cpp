#include "ecmbq/optimize.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <memory>

namespace ecmbq {

namespace {

struct GslVectorDeleter {
    void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};
using GslVector = std::unique_ptr<gsl_vector, GslVectorDeleter>;

GslVector to_gsl(const Vector& v) {
    GslVector g(gsl_vector_alloc(static_cast<std::size_t>(v.size())));
    for (Eigen::Index i = 0; i < v.size(); ++i) gsl_vector_set(g.get(), static_cast<std::size_t>(i), v[i]);
    return g;
}

Vector from_gsl(const gsl_vector* g) {
    Vector v(static_cast<Eigen::Index>(g->size));
    for (std::size_t i = 0; i < g->size; ++i) v[static_cast<Eigen::Index>(i)] = gsl_vector_get(g, i);
    return v;
}

// The callbacks below must not throw through GSL's C frames.
struct FContext {
    const Objective* f;
    int evals = 0;
};

double f_trampoline(const gsl_vector* x, void* params) {
    auto* ctx = static_cast<FContext*>(params);
    ++ctx->evals;
    try {
        const double v = (*ctx->f)(from_gsl(x));
        return std::isfinite(v) ? v : GSL_POSINF;
    } catch (...) {
        return GSL_POSINF;
    }
}

struct FdfContext {
    const ObjectiveWithGradient* f;
    int evals = 0;
};

void fdf_trampoline(const gsl_vector* x, void* params, double* value, gsl_vector* grad) {
    auto* ctx = static_cast<FdfContext*>(params);
    ++ctx->evals;
    Vector g = Vector::Zero(static_cast<Eigen::Index>(x->size));
    double v = GSL_POSINF;
    try {
        v = (*ctx->f)(from_gsl(x), g);
    } catch (...) {
        v = GSL_POSINF;
    }
    if (!std::isfinite(v) || !g.allFinite()) {
        v = GSL_POSINF;
        g.setZero();
    }
    if (value) *value = v;
    if (grad) {
        for (std::size_t i = 0; i < x->size; ++i) gsl_vector_set(grad, i, g[static_cast<Eigen::Index>(i)]);
    }
}

double fdf_f(const gsl_vector* x, void* params) {
    double v = 0.0;
    fdf_trampoline(x, params, &v, nullptr);
    return v;
}

void fdf_df(const gsl_vector* x, void* params, gsl_vector* grad) { fdf_trampoline(x, params, nullptr, grad); }

struct ErrorHandlerGuard {
    gsl_error_handler_t* previous = gsl_set_error_handler_off();
    ~ErrorHandlerGuard() { gsl_set_error_handler(previous); }
};

}  // namespace

OptimResult minimize_nelder_mead(const Objective& f, const Vector& x0, const Vector& step, int max_iters,
                                 double size_tol) {
    ErrorHandlerGuard guard;
    const auto n = static_cast<std::size_t>(x0.size());
    FContext ctx{&f};
    OptimResult best;
    best.x = x0;
    best.value = f(x0);
    best.evaluations = 1;
    if (n == 0) return best;

    gsl_multimin_function fn{&f_trampoline, n, &ctx};
    std::unique_ptr<gsl_multimin_fminimizer, decltype(&gsl_multimin_fminimizer_free)> s(
        gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n), &gsl_multimin_fminimizer_free);
    GslVector gx = to_gsl(x0);
    GslVector gs = to_gsl(step);
    gsl_multimin_fminimizer_set(s.get(), &fn, gx.get(), gs.get());
    for (int it = 0; it < max_iters; ++it) {
        if (gsl_multimin_fminimizer_iterate(s.get()) != GSL_SUCCESS) break;
        if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s.get()), size_tol) == GSL_SUCCESS) {
            best.converged = true;
            break;
        }
    }
    const double v = gsl_multimin_fminimizer_minimum(s.get());
    if (v < best.value) {
        best.value = v;
        best.x = from_gsl(gsl_multimin_fminimizer_x(s.get()));
    }
    best.evaluations += ctx.evals;
    return best;
}

OptimResult minimize_bfgs(const ObjectiveWithGradient& f, const Vector& x0, int max_iters, double grad_tol,
                          double initial_step) {
    ErrorHandlerGuard guard;
    const auto n = static_cast<std::size_t>(x0.size());
    FdfContext ctx{&f};
    OptimResult res;
    res.x = x0;
    Vector g0(x0.size());
    res.value = f(x0, g0);
    res.evaluations = 1;
    if (n == 0 || !std::isfinite(res.value)) return res;

    gsl_multimin_function_fdf fn{&fdf_f, &fdf_df, &fdf_trampoline, n, &ctx};
    std::unique_ptr<gsl_multimin_fdfminimizer, decltype(&gsl_multimin_fdfminimizer_free)> s(
        gsl_multimin_fdfminimizer_alloc(gsl_multimin_fdfminimizer_vector_bfgs2, n), &gsl_multimin_fdfminimizer_free);
    GslVector gx = to_gsl(x0);
    gsl_multimin_fdfminimizer_set(s.get(), &fn, gx.get(), initial_step, 0.1);
    for (int it = 0; it < max_iters; ++it) {
        if (gsl_multimin_fdfminimizer_iterate(s.get()) != GSL_SUCCESS) break;
        if (gsl_multimin_test_gradient(gsl_multimin_fdfminimizer_gradient(s.get()), grad_tol) == GSL_SUCCESS) {
            res.converged = true;
            break;
        }
    }
    const double v = gsl_multimin_fdfminimizer_minimum(s.get());
    if (v < res.value) {
        res.value = v;
        res.x = from_gsl(gsl_multimin_fdfminimizer_x(s.get()));
    }
    res.evaluations += ctx.evals;
    return res;
}

}  // namespace ecmbq
