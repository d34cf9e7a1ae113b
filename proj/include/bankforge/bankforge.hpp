#pragma once

#include "bankforge/common.hpp"
#include "bankforge/costmodel.hpp"
#include "bankforge/geometry.hpp"
#include "bankforge/io.hpp"
#include "bankforge/polytope.hpp"
#include "bankforge/program.hpp"
#include "bankforge/rewrite.hpp"
#include "bankforge/search.hpp"
#include "bankforge/sim.hpp"
#include "bankforge/synth.hpp"
#include "bankforge/types.hpp"
#include "bankforge/validate.hpp"
