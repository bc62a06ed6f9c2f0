#pragma once

#include "cpme/types.hpp"

namespace cpme::detail {

/// v[i] = exp(v[i]) for finite inputs. Uses the glibc vector math library
/// when the build found it, Eigen's packet exp otherwise.
void exp_inplace(double* v, Index n);

}  // namespace cpme::detail
