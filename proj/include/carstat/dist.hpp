#pragma once

namespace carstat {

// Standard normal CDF.
double normal_cdf(double z);

// Standard normal quantile, p in (0,1). Wichura's AS 241 (PPND16),
// absolute error below 1e-15 over the full range.
double normal_quantile(double p);

// Chi-squared CDF with k degrees of freedom, w >= 0; regularized lower
// incomplete gamma P(k/2, w/2).
double chisq_cdf(double w, int k);

// Chi-squared quantile, p in (0,1); Wilson-Hilferty start refined by
// safeguarded Newton iterations on chisq_cdf.
double chisq_quantile(double p, int k);

// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
double gamma_p(double a, double x);

}  // namespace carstat
