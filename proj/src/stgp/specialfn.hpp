#ifndef STGP_SPECIALFN_HPP
#define STGP_SPECIALFN_HPP

namespace stgp {

// ln Gamma(x) for x > 0 (Lanczos approximation, reflection below 0.5).
double log_gamma(double x);

// Modified Bessel function of the second kind K_nu(x), real order nu >= 0
// (K_{-nu} = K_nu is applied for negative orders), x > 0.
// Returns 0 on underflow (large x), +inf on overflow (tiny x, large nu).
double bessel_k(double nu, double x);

// ln K_nu(x); stays finite where K_nu itself would over- or underflow.
double log_bessel_k(double nu, double x);

// Standard normal density, distribution function and its inverse.
double norm_pdf(double z);
double norm_cdf(double z);
double norm_quantile(double p); // p in (0,1)

} // namespace stgp

#endif
