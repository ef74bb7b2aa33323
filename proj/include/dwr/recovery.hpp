#pragma once

#include "dwr/fe_space.hpp"

#include <memory>

namespace dwr {

/// Higher-order reconstruction of a Q1 function. On every intact 2x2
/// sibling patch the nine Q1 nodal values define a biquadratic, which is
/// read into a Q2 space on the same mesh. Dofs touched by no intact patch
/// keep the Q1 value; dofs shared by several patches take the mean.
FeFunction patch_recover(const FeFunction& fh);

/// Nodal interpolation of a continuous function given on some space into
/// `target` (same domain).
FeFunction interpolate(std::shared_ptr<const FeSpace> target, const FeFunction& f);

/// Weight w = g - I_h g, represented on g's space, where I_h is nodal
/// interpolation into `coarse`.
FeFunction interpolation_remainder(const FeFunction& g, std::shared_ptr<const FeSpace> coarse);

} // namespace dwr
