#pragma once

namespace optknn {

// Standard normal quantile (Wichura, AS 241). Relative accuracy about 1e-16.
double normal_quantile(double p);

double normal_cdf(double x);

}  // namespace optknn
