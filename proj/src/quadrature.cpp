#include "frontrun/quadrature.hpp"

#include "frontrun/errors.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <memory>
#include <mutex>
#include <string>

namespace frontrun::quad {

namespace {

constexpr std::size_t kWorkspaceIntervals = 2000;

void disable_gsl_abort() {
    static std::once_flag once;
    std::call_once(once, [] { gsl_set_error_handler_off(); });
}

struct WorkspaceDeleter {
    void operator()(gsl_integration_workspace* w) const { gsl_integration_workspace_free(w); }
};

struct GlTableDeleter {
    void operator()(gsl_integration_glfixed_table* t) const { gsl_integration_glfixed_table_free(t); }
};

const gsl_integration_glfixed_table* gl_table(int n) {
    // Tables are immutable once built; one per order, created lazily.
    static std::mutex mu;
    static std::unique_ptr<gsl_integration_glfixed_table, GlTableDeleter> tables[65];
    if (n < 1 || n > 64) throw InputError("Gauss-Legendre order must be in [1, 64]");
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = tables[n];
    if (!slot) slot.reset(gsl_integration_glfixed_table_alloc(static_cast<std::size_t>(n)));
    return slot.get();
}

}  // namespace

double adaptive_raw(RawIntegrand f, void* ctx, double a, double b, double abs_tol) {
    disable_gsl_abort();
    std::unique_ptr<gsl_integration_workspace, WorkspaceDeleter> ws(
        gsl_integration_workspace_alloc(kWorkspaceIntervals));
    gsl_function fn{f, ctx};
    double result = 0.0;
    double err = 0.0;
    const int status = gsl_integration_qag(&fn, a, b, abs_tol, 0.0, kWorkspaceIntervals,
                                           GSL_INTEG_GAUSS21, ws.get(), &result, &err);
    // A roundoff status means the requested absolute accuracy is below what
    // double precision can resolve for this integral; the estimate is still
    // the best available.
    if (status != GSL_SUCCESS && status != GSL_EROUND) {
        throw NumericError(std::string("quadrature failed: ") + gsl_strerror(status));
    }
    return result;
}

double gauss_legendre_raw(RawIntegrand f, void* ctx, double a, double b, int n) {
    gsl_function fn{f, ctx};
    return gsl_integration_glfixed(&fn, a, b, gl_table(n));
}

std::vector<Node> gauss_legendre_nodes(double a, double b, int n) {
    const auto* table = gl_table(n);
    std::vector<Node> nodes(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        gsl_integration_glfixed_point(a, b, i, &nodes[i].x, &nodes[i].w, table);
    }
    return nodes;
}

}  // namespace frontrun::quad
