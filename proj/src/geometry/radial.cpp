#include <cmath>
#include <numbers>
#include <stdexcept>

#include "galgraph/geometry.hpp"

namespace galgraph {

std::vector<double> bessel_basis(double r, std::size_t n, double cutoff) {
  if (n < 1) throw std::invalid_argument("bessel_basis: need at least one basis function");
  if (!(cutoff > 0.0)) throw std::invalid_argument("bessel_basis: cutoff must be positive");
  const double prefactor = std::sqrt(2.0 / cutoff);
  std::vector<double> out(n);
  for (std::size_t m = 1; m <= n; ++m) {
    const double freq = static_cast<double>(m) * std::numbers::pi / cutoff;
    out[m - 1] = r == 0.0 ? prefactor * freq : prefactor * std::sin(freq * r) / r;
  }
  return out;
}

std::vector<Vec3> scaled_displacements(const Graph& graph, const Vec3& scale) {
  std::vector<Vec3> out(graph.n_edges());
  for (std::size_t e = 0; e < out.size(); ++e)
    for (int a = 0; a < 3; ++a) out[e][a] = graph.displacements[e][a] * scale[a];
  return out;
}

void embed_edges(Graph& graph, const Vec3& scale, std::size_t n_rbf, double cutoff) {
  const auto disp = scaled_displacements(graph, scale);
  graph.radial_embedding = Matrix(graph.n_edges(), n_rbf);
  for (std::size_t e = 0; e < disp.size(); ++e) {
    const auto b = bessel_basis(dot(disp[e], disp[e]), n_rbf, cutoff);
    std::copy(b.begin(), b.end(), graph.radial_embedding.row_span(e).begin());
  }
}

}  // namespace galgraph
