#include "carstat/dist.hpp"

#include <cmath>
#include <limits>

#include "carstat/errors.hpp"

namespace carstat {

double normal_cdf(double z) { return 0.5 * std::erfc(-z * M_SQRT1_2); }

// Wichura (1988), algorithm AS 241, routine PPND16.
double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) fail(Err::out_of_range, "normal_quantile: p outside (0,1)");

  static const double a[8] = {
      3.3871328727963666080e0,  1.3314166789178437745e+2, 1.9715909503065514427e+3,
      1.3731693765509461125e+4, 4.5921953931549871457e+4, 6.7265770927008700853e+4,
      3.3430575583588128105e+4, 2.5090809287301226727e+3};
  static const double b[8] = {
      1.0,                      4.2313330701600911252e+1, 6.8718700749205790830e+2,
      5.3941960214247511077e+3, 2.1213794301586595867e+4, 3.9307895800092710610e+4,
      2.8729085735721942674e+4, 5.2264952788528545610e+3};
  static const double c[8] = {
      1.42343711074968357734e0,  4.63033784615654529590e0,  5.76949722146069140550e0,
      3.64784832476320460504e0,  1.27045825245236838258e0,  2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4};
  static const double d[8] = {
      1.0,                       2.05319162663775882187e0,  1.67638483018380384940e0,
      6.89767334985100004550e-1, 1.48103976427480074590e-1, 1.51986665636164571966e-2,
      5.47593808499534494600e-4, 1.05075007164441684324e-9};
  static const double e[8] = {
      6.65790464350110377720e0,  5.46378491116411436990e0,  1.78482653991729133580e0,
      2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7};
  static const double f[8] = {
      1.0,                       5.99832206555887937690e-1, 1.36929880922735805310e-1,
      1.48753612908506148525e-2, 7.86869131145613259100e-4, 1.84631831751005468180e-5,
      1.42151175831644588870e-7, 2.04426310338993978564e-15};

  auto poly = [](const double* k, double r) {
    return ((((((k[7] * r + k[6]) * r + k[5]) * r + k[4]) * r + k[3]) * r + k[2]) * r + k[1]) *
               r +
           k[0];
  };

  double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    double r = 0.180625 - q * q;
    return q * poly(a, r) / poly(b, r);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = poly(c, r) / poly(d, r);
  } else {
    r -= 5.0;
    val = poly(e, r) / poly(f, r);
  }
  return q < 0.0 ? -val : val;
}

namespace {

// Series expansion of P(a,x), valid for x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < 500; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a,x) by modified Lentz, valid for x >= a + 1.
double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double gamma_p(double a, double x) {
  if (a <= 0.0 || x < 0.0) fail(Err::out_of_range, "gamma_p: a <= 0 or x < 0");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_cf(a, x);
}

double chisq_cdf(double w, int k) {
  if (k < 1) fail(Err::out_of_range, "chisq_cdf: k < 1");
  if (w < 0.0) fail(Err::out_of_range, "chisq_cdf: w < 0");
  return gamma_p(0.5 * k, 0.5 * w);
}

double chisq_quantile(double p, int k) {
  if (k < 1) fail(Err::out_of_range, "chisq_quantile: k < 1");
  if (!(p > 0.0 && p < 1.0)) fail(Err::out_of_range, "chisq_quantile: p outside (0,1)");

  // Wilson-Hilferty starting value.
  double z = normal_quantile(p);
  double t = 1.0 - 2.0 / (9.0 * k) + z * std::sqrt(2.0 / (9.0 * k));
  double x = k * t * t * t;
  if (!(x > 0.0)) x = 0.5;

  double lo = 0.0, hi = std::numeric_limits<double>::infinity();
  const double half_k = 0.5 * k;
  const double log_norm = -half_k * std::log(2.0) - std::lgamma(half_k);
  for (int it = 0; it < 200; ++it) {
    double fx = chisq_cdf(x, k) - p;
    if (fx > 0.0) {
      hi = x;
    } else {
      lo = x;
    }
    double pdf = std::exp((half_k - 1.0) * std::log(x) - 0.5 * x + log_norm);
    double step = pdf > 0.0 ? fx / pdf : 0.0;
    double nx = x - step;
    if (!(nx > lo && (nx < hi))) {
      nx = std::isinf(hi) ? 2.0 * x : 0.5 * (lo + hi);  // bisect when Newton escapes
    }
    if (std::fabs(nx - x) <= 1e-14 * (1.0 + std::fabs(x))) {
      x = nx;
      break;
    }
    x = nx;
  }
  return x;
}

}  // namespace carstat
