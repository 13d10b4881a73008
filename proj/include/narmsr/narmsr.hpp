#pragma once

// Umbrella header for the NARM-regularized super-resolution library.

#include "narmsr/config.hpp"
#include "narmsr/dataset.hpp"
#include "narmsr/degradation.hpp"
#include "narmsr/denoiser.hpp"
#include "narmsr/errors.hpp"
#include "narmsr/image.hpp"
#include "narmsr/image_io.hpp"
#include "narmsr/linalg.hpp"
#include "narmsr/metrics.hpp"
#include "narmsr/narm.hpp"
#include "narmsr/solver.hpp"

namespace narmsr {
inline constexpr const char* kVersion = "0.1.0";
}
