#pragma once

namespace sabr {

double norm_pdf(double x) noexcept;
/// Standard normal CDF, accurate in both tails.
double norm_cdf(double x) noexcept;
/// Inverse standard normal CDF; p must lie in (0,1).
double norm_inv(double p);

}  // namespace sabr
