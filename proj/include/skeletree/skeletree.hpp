// SPDX-License-Identifier: Apache-2.0
// Umbrella header: pulls in every public module of the library.
#pragma once

#include "skeletree/baseline_gsa.hpp"
#include "skeletree/breakpoint_connect.hpp"
#include "skeletree/errors.hpp"
#include "skeletree/io.hpp"
#include "skeletree/metrics.hpp"
#include "skeletree/pipeline.hpp"
#include "skeletree/point_cloud.hpp"
#include "skeletree/refine.hpp"
#include "skeletree/rng.hpp"
#include "skeletree/skeleton_graph.hpp"
#include "skeletree/synth_io.hpp"
#include "skeletree/synth_tree.hpp"
#include "skeletree/thinning.hpp"
#include "skeletree/threading.hpp"
#include "skeletree/vec3.hpp"
#include "skeletree/voxel_grid.hpp"
#include "skeletree/wood_leaf_filter.hpp"
