#pragma once

// Umbrella header.

#include "asterhop/common.hpp"
#include "asterhop/random.hpp"
#include "asterhop/parallel.hpp"
#include "asterhop/geometry.hpp"
#include "asterhop/bvh.hpp"
#include "asterhop/kdtree.hpp"
#include "asterhop/mesh.hpp"
#include "asterhop/shapes.hpp"
#include "asterhop/gravity.hpp"
#include "asterhop/dynamics.hpp"
#include "asterhop/lambert.hpp"
#include "asterhop/localization.hpp"
#include "asterhop/planner.hpp"
#include "asterhop/swarm.hpp"
