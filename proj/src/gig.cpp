// Generalized inverse Gaussian variates after Hoermann and Leydold (2014):
// ratio-of-uniforms with or without mode shift, and a three-piece
// rejection hat for small lambda and concentration.

#include <cmath>
#include <numbers>
#include <random>

#include "depshap/distributions.hpp"
#include "depshap/errors.hpp"

namespace depshap {
namespace {

// Mode of the standardized density x^(lambda-1) exp(-omega/2 (x + 1/x)).
double gig_mode(double lambda, double omega) {
  if (lambda >= 1.0) return (std::sqrt((lambda - 1.0) * (lambda - 1.0) + omega * omega) + (lambda - 1.0)) / omega;
  return omega / (std::sqrt((1.0 - lambda) * (1.0 - lambda) + omega * omega) + (1.0 - lambda));
}

double log_kernel(double x, double t, double s) { return t * std::log(x) - s * (x + 1.0 / x); }

double rou_noshift(double lambda, double omega, Rng& rng) {
  std::uniform_real_distribution<double> unif;
  const double t = 0.5 * (lambda - 1.0);
  const double s = 0.25 * omega;
  const double xm = gig_mode(lambda, omega);
  const double nc = log_kernel(xm, t, s);
  const double ym = ((lambda + 1.0) + std::sqrt((lambda + 1.0) * (lambda + 1.0) + omega * omega)) / omega;
  const double um = std::exp(0.5 * (lambda + 1.0) * std::log(ym) - s * (ym + 1.0 / ym) - nc);
  for (;;) {
    const double u = um * unif(rng);
    const double v = unif(rng);
    if (v <= 0.0) continue;
    const double x = u / v;
    if (x > 0.0 && std::log(v) <= log_kernel(x, t, s) - nc) return x;
  }
}

double rou_shift(double lambda, double omega, Rng& rng) {
  std::uniform_real_distribution<double> unif;
  const double t = 0.5 * (lambda - 1.0);
  const double s = 0.25 * omega;
  const double xm = gig_mode(lambda, omega);
  const double nc = log_kernel(xm, t, s);

  // Roots of the cubic giving the bounding rectangle.
  const double a = -(2.0 * (lambda + 1.0) / omega + xm);
  const double b = 2.0 * (lambda - 1.0) * xm / omega - 1.0;
  const double c = xm;
  const double p = b - a * a / 3.0;
  const double q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
  const double fi = std::acos(-q / (2.0 * std::sqrt(-(p * p * p) / 27.0)));
  const double fak = 2.0 * std::sqrt(-p / 3.0);
  const double y1 = fak * std::cos(fi / 3.0) - a / 3.0;
  const double y2 = fak * std::cos(fi / 3.0 + 4.0 / 3.0 * std::numbers::pi) - a / 3.0;
  const double uplus = (y1 - xm) * std::exp(log_kernel(y1, t, s) - nc);
  const double uminus = (y2 - xm) * std::exp(log_kernel(y2, t, s) - nc);
  for (;;) {
    const double u = uminus + unif(rng) * (uplus - uminus);
    const double v = unif(rng);
    if (v <= 0.0) continue;
    const double x = u / v + xm;
    if (x > 0.0 && std::log(v) <= log_kernel(x, t, s) - nc) return x;
  }
}

// 0 <= lambda < 1, 0 < omega <= 1.
double three_piece(double lambda, double omega, Rng& rng) {
  std::uniform_real_distribution<double> unif;
  const double xm = gig_mode(lambda, omega);
  const double x0 = omega / (1.0 - lambda);
  const double k0 = std::exp((lambda - 1.0) * std::log(xm) - 0.5 * omega * (xm + 1.0 / xm));
  double area[3];
  double k1 = 0.0;
  double k2 = 0.0;
  area[0] = k0 * x0;
  if (x0 >= 2.0 / omega) {
    k2 = std::pow(x0, lambda - 1.0);
    area[1] = 0.0;
    area[2] = k2 * 2.0 * std::exp(-omega * x0 / 2.0) / omega;
  } else {
    k1 = std::exp(-omega);
    area[1] = lambda == 0.0 ? k1 * std::log(2.0 / (omega * omega))
                            : k1 / lambda * (std::pow(2.0 / omega, lambda) - std::pow(x0, lambda));
    k2 = std::pow(2.0 / omega, lambda - 1.0);
    area[2] = k2 * 2.0 * std::exp(-1.0) / omega;
  }
  const double total = area[0] + area[1] + area[2];
  for (;;) {
    double v = total * unif(rng);
    double x = 0.0;
    double hx = 0.0;
    if (v <= area[0]) {
      x = x0 * v / area[0];
      hx = k0;
    } else if ((v -= area[0]) <= area[1]) {
      if (lambda == 0.0) {
        x = omega * std::exp(std::exp(omega) * v);
        hx = k1 / x;
      } else {
        x = std::pow(std::pow(x0, lambda) + lambda / k1 * v, 1.0 / lambda);
        hx = k1 * std::pow(x, lambda - 1.0);
      }
    } else {
      v -= area[1];
      const double lo = std::max(x0, 2.0 / omega);
      x = -2.0 / omega * std::log(std::exp(-omega / 2.0 * lo) - omega / (2.0 * k2) * v);
      hx = k2 * std::exp(-omega / 2.0 * x);
    }
    if (!(x > 0.0) || !std::isfinite(x)) continue;
    const double u = unif(rng) * hx;
    if (std::log(u) <= (lambda - 1.0) * std::log(x) - omega / 2.0 * (x + 1.0 / x)) return x;
  }
}

// Standardized variate with density proportional to x^(lambda-1) exp(-omega/2 (x + 1/x)), lambda >= 0.
double standard_gig(double lambda, double omega, Rng& rng) {
  if (lambda > 2.0 || omega > 3.0) return rou_shift(lambda, omega, rng);
  if (lambda >= 1.0 - 2.25 * omega * omega || omega > 0.2) return rou_noshift(lambda, omega, rng);
  return three_piece(lambda, omega, rng);
}

// Asymptotic expansion of K_nu(z) e^z sqrt(2z/pi) for large z.
double scaled_bessel_k_series(double nu, double z) {
  const double mu = 4.0 * nu * nu;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 30; ++k) {
    const double next = term * (mu - (2.0 * k - 1.0) * (2.0 * k - 1.0)) / (k * 8.0 * z);
    if (std::abs(next) >= std::abs(term)) break;
    term = next;
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return sum;
}

}  // namespace

void validate_gig(double lambda, double chi, double psi) {
  if (!std::isfinite(lambda) || !std::isfinite(chi) || !std::isfinite(psi) || chi < 0 || psi < 0) {
    throw DomainError("invalid GIG parameters");
  }
  if (lambda > 0 && !(psi > 0)) throw DomainError("invalid GIG parameters: lambda > 0 needs psi > 0");
  if (lambda < 0 && !(chi > 0)) throw DomainError("invalid GIG parameters: lambda < 0 needs chi > 0");
  if (lambda == 0 && !(chi > 0 && psi > 0)) throw DomainError("invalid GIG parameters: lambda = 0 needs chi, psi > 0");
}

double log_bessel_k(double nu, double z) {
  if (!(z > 0)) throw DomainError("Bessel K needs a positive argument");
  nu = std::abs(nu);
  if (z < 500.0) {
    const double k = std::cyl_bessel_k(nu, z);
    if (std::isfinite(k) && k > 1e-290) return std::log(k);
  }
  return 0.5 * std::log(std::numbers::pi / (2.0 * z)) - z + std::log(scaled_bessel_k_series(nu, z));
}

double gig_mean(double lambda, double chi, double psi) {
  validate_gig(lambda, chi, psi);
  if (chi == 0) return 2.0 * lambda / psi;
  if (psi == 0) {
    if (lambda >= -1) throw DomainError("GIG mean is infinite");
    return chi / (2.0 * (-lambda - 1.0));
  }
  const double omega = std::sqrt(chi * psi);
  return std::sqrt(chi / psi) * std::exp(log_bessel_k(lambda + 1.0, omega) - log_bessel_k(lambda, omega));
}

double gig_variance(double lambda, double chi, double psi) {
  validate_gig(lambda, chi, psi);
  if (chi == 0) return 4.0 * lambda / (psi * psi);
  if (psi == 0) {
    const double a = -lambda;
    if (a <= 2) throw DomainError("GIG variance is infinite");
    const double b = chi / 2.0;
    return b * b / ((a - 1.0) * (a - 1.0) * (a - 2.0));
  }
  const double omega = std::sqrt(chi * psi);
  const double k0 = log_bessel_k(lambda, omega);
  const double r1 = std::exp(log_bessel_k(lambda + 1.0, omega) - k0);
  const double r2 = std::exp(log_bessel_k(lambda + 2.0, omega) - k0);
  return chi / psi * (r2 - r1 * r1);
}

double sample_gig_one(double lambda, double chi, double psi, Rng& rng) {
  if (chi == 0) {
    // Gamma(lambda, rate psi/2).
    std::gamma_distribution<double> gamma(lambda, 2.0 / psi);
    return gamma(rng);
  }
  if (psi == 0) {
    // Inverse gamma(-lambda, scale chi/2).
    std::gamma_distribution<double> gamma(-lambda, 2.0 / chi);
    return 1.0 / gamma(rng);
  }
  const double omega = std::sqrt(chi * psi);
  const double alpha = std::sqrt(chi / psi);
  if (lambda < 0) return alpha / standard_gig(-lambda, omega, rng);
  return alpha * standard_gig(lambda, omega, rng);
}

std::vector<double> sample_gig(double lambda, double chi, double psi, int n, std::uint64_t seed) {
  validate_gig(lambda, chi, psi);
  if (n < 0) throw DomainError("sample size must be non-negative");
  Rng rng = make_rng(seed);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (double& w : out) w = sample_gig_one(lambda, chi, psi, rng);
  return out;
}

}  // namespace depshap
