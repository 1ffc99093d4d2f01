#include "pamlab/quadrature.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <memory>
#include <mutex>

namespace pamlab {

namespace {

double trampoline(double x, void* params) { return (*static_cast<const RealFunction*>(params))(x); }

struct WorkspaceDeleter {
  void operator()(gsl_integration_workspace* w) const { gsl_integration_workspace_free(w); }
};
using Workspace = std::unique_ptr<gsl_integration_workspace, WorkspaceDeleter>;

Workspace make_workspace(int limit) {
  return Workspace(gsl_integration_workspace_alloc(static_cast<std::size_t>(limit)));
}

}  // namespace

void disable_gsl_abort() {
  static std::once_flag once;
  std::call_once(once, [] { gsl_set_error_handler_off(); });
}

QuadratureResult integrate(const RealFunction& f, double a, double b, const QuadratureOptions& opts) {
  disable_gsl_abort();
  auto ws = make_workspace(opts.limit);
  gsl_function F{&trampoline, const_cast<RealFunction*>(&f)};
  QuadratureResult r;
  r.status = gsl_integration_qags(&F, a, b, opts.abs_tol, opts.rel_tol, static_cast<std::size_t>(opts.limit),
                                  ws.get(), &r.value, &r.abs_error);
  return r;
}

QuadratureResult integrate_to_infinity(const RealFunction& f, double a, const QuadratureOptions& opts) {
  disable_gsl_abort();
  auto ws = make_workspace(opts.limit);
  gsl_function F{&trampoline, const_cast<RealFunction*>(&f)};
  QuadratureResult r;
  r.status = gsl_integration_qagiu(&F, a, opts.abs_tol, opts.rel_tol, static_cast<std::size_t>(opts.limit),
                                   ws.get(), &r.value, &r.abs_error);
  return r;
}

QuadratureResult integrate_cos(const RealFunction& f, double omega, double a, double b,
                               const QuadratureOptions& opts) {
  disable_gsl_abort();
  auto ws = make_workspace(opts.limit);
  gsl_integration_qawo_table* table = gsl_integration_qawo_table_alloc(omega, b - a, GSL_INTEG_COSINE, 50);
  gsl_function F{&trampoline, const_cast<RealFunction*>(&f)};
  QuadratureResult r;
  r.status = gsl_integration_qawo(&F, a, opts.abs_tol, opts.rel_tol, static_cast<std::size_t>(opts.limit),
                                  ws.get(), table, &r.value, &r.abs_error);
  gsl_integration_qawo_table_free(table);
  return r;
}

std::vector<std::pair<double, double>> gauss_legendre(int n, double a, double b) {
  gsl_integration_glfixed_table* t = gsl_integration_glfixed_table_alloc(static_cast<std::size_t>(n));
  std::vector<std::pair<double, double>> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    gsl_integration_glfixed_point(a, b, static_cast<std::size_t>(i), &out[i].first, &out[i].second, t);
  }
  gsl_integration_glfixed_table_free(t);
  return out;
}

}  // namespace pamlab
