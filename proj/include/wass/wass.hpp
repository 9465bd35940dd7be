#pragma once

// Umbrella header: exact optimal transport between finitely supported
// measures, Wasserstein geodesics, continuity-equation verification,
// tangent-space projections, differentials of pushforward maps, and
// convex mixing of measures, with a property-test battery for the lot.

#include "wass/common.hpp"
#include "wass/measures.hpp"
#include "wass/geometry.hpp"
#include "wass/ot.hpp"
#include "wass/tangent.hpp"
#include "wass/curves.hpp"
#include "wass/pushdiff.hpp"
#include "wass/mixing.hpp"
#include "wass/io.hpp"
#include "wass/checks.hpp"
