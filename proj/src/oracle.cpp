#include "qsnegf/oracle.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace qsnegf {

FiniteUniverse::FiniteUniverse(Eigen::MatrixXd h, std::size_t n_system) : h_(std::move(h)), n_system_(n_system) {
  if (h_.rows() != h_.cols() || h_.rows() == 0) throw std::invalid_argument("FiniteUniverse: h must be square");
  if (dimension() > kMaxDimension)
    throw std::invalid_argument("FiniteUniverse: dimension " + std::to_string(dimension()) + " exceeds " +
                                std::to_string(kMaxDimension));
  if (n_system_ == 0 || n_system_ > dimension())
    throw std::invalid_argument("FiniteUniverse: bad system dimension");
  if ((h_ - h_.transpose()).cwiseAbs().maxCoeff() > 1e-14 * std::max(1.0, h_.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("FiniteUniverse: h is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h_);
  if (solver.info() != Eigen::Success) throw std::runtime_error("FiniteUniverse: eigensolver failed");
  energies_ = solver.eigenvalues();
  vectors_ = solver.eigenvectors();
}

FiniteUniverse FiniteUniverse::from_system(const FrozenSystem& system, std::size_t chain_length) {
  const std::size_t n = system.dim();
  const auto& leads = system.leads();
  if (chain_length == 0) throw std::invalid_argument("FiniteUniverse: chain length must be positive");
  const std::size_t d = n + leads.size() * chain_length;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const cplx v = system.state().h(i, j);
      if (v.imag() != 0.0) throw std::invalid_argument("FiniteUniverse: complex system Hamiltonian");
      h(i, j) = v.real();
    }
  for (std::size_t a = 0; a < leads.size(); ++a) {
    const auto& lead = leads[a];
    if (lead.spectrum != LeadSpectrum::chain)
      throw std::invalid_argument("FiniteUniverse: only chain leads have a finite counterpart");
    const auto first = static_cast<Eigen::Index>(n + a * chain_length);
    const auto site = static_cast<Eigen::Index>(lead.site);
    const double V = system.state().drive[a].amplitude;
    h(site, first) = h(first, site) = V;
    for (std::size_t k = 0; k < chain_length; ++k) {
      const auto i = first + static_cast<Eigen::Index>(k);
      h(i, i) = lead.band_center;
      if (k + 1 < chain_length) h(i, i + 1) = h(i + 1, i) = lead.hopping;
    }
  }
  return FiniteUniverse(std::move(h), n);
}

Eigen::VectorXd FiniteUniverse::system_weights() const {
  return vectors_.topRows(static_cast<Eigen::Index>(n_system_)).colwise().squaredNorm().transpose();
}

Eigen::MatrixXd FiniteUniverse::system_overlaps() const {
  const auto top = vectors_.topRows(static_cast<Eigen::Index>(n_system_));
  return top.transpose() * top;
}

double FiniteUniverse::residual() const {
  const double scale = std::max(1e-300, h_.norm());
  const Eigen::MatrixXd r = h_ * vectors_ - vectors_ * energies_.asDiagonal();
  return r.colwise().norm().maxCoeff() / scale;
}

double FiniteUniverse::level_spacing() const {
  if (energies_.size() < 2) return 0.0;
  return (energies_(energies_.size() - 1) - energies_(0)) / static_cast<double>(energies_.size() - 1);
}

FiniteThermo finite_thermo(const FiniteUniverse& univ, const Ensemble& ens) {
  const Eigen::VectorXd w = univ.system_weights();
  FiniteThermo t;
  for (Eigen::Index k = 0; k < univ.energies().size(); ++k) {
    const double e = univ.energies()(k);
    const double f = fermi(ens, e);
    const double s = entropy_kernel(ens, e);
    const double om = grand_kernel(ens, e);
    t.N += f;
    t.U += e * f;
    t.S += s;
    t.Omega += om;
    t.N_S += w(k) * f;
    t.U_S += w(k) * e * f;
    t.S_S += w(k) * s;
    t.Omega_S += w(k) * om;
  }
  return t;
}

FiniteAlphaEntropy finite_alpha_entropy(const FiniteUniverse& univ, const Ensemble& ens, double alpha) {
  const Eigen::Index d = univ.energies().size();
  const Eigen::MatrixXd p = univ.system_overlaps();
  Eigen::VectorXd f(d);
  Eigen::VectorXd s(d);
  Eigen::VectorXd particle(d);
  Eigen::VectorXd hole(d);
  for (Eigen::Index k = 0; k < d; ++k) {
    const double e = univ.energies()(k);
    f(k) = fermi(ens, e);
    s(k) = entropy_kernel(ens, e);
    particle(k) = neg_log_fermi(ens, e);
    hole(k) = neg_log_fermi_complement(ens, e);
  }

  // sum over (mu, nu) of |P_mu,nu|^2 [f_mu (-ln f_nu) + (1 - f_mu)(-ln(1 - f_nu))]
  auto cross = [&](const Eigen::MatrixXd& proj) {
    double total = 0.0;
    for (Eigen::Index nu = 0; nu < d; ++nu) {
      double col = 0.0;
      for (Eigen::Index mu = 0; mu < d; ++mu) {
        const double q = proj(mu, nu) * proj(mu, nu);
        col += q * (f(mu) * particle(nu) + (1.0 - f(mu)) * hole(nu));
      }
      total += col;
    }
    return total;
  };

  const Eigen::MatrixXd q = Eigen::MatrixXd::Identity(d, d) - p;
  FiniteAlphaEntropy out;
  out.S_total = s.sum();
  out.S_S = 2.0 * alpha * p.diagonal().dot(s) + (1.0 - 2.0 * alpha) * cross(p);
  const double beta = 1.0 - alpha;
  out.S_R = 2.0 * beta * q.diagonal().dot(s) + (1.0 - 2.0 * beta) * cross(q);
  return out;
}

double finite_ldos(const FiniteUniverse& univ, double e, double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("finite_ldos: eta must be positive");
  if (eta < univ.level_spacing())
    throw std::domain_error("finite_ldos: eta below the mean level spacing");
  const Eigen::VectorXd w = univ.system_weights();
  double g = 0.0;
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    const double x = e - univ.energies()(k);
    g += w(k) * eta / (x * x + eta * eta);
  }
  return g / std::numbers::pi;
}

}  // namespace qsnegf
