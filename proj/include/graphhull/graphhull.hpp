#ifndef GRAPHHULL_GRAPHHULL_HPP
#define GRAPHHULL_GRAPHHULL_HPP

#include "graphhull/common.hpp"
#include "graphhull/curvature.hpp"
#include "graphhull/diagnostics.hpp"
#include "graphhull/evaluation.hpp"
#include "graphhull/generator.hpp"
#include "graphhull/gradient.hpp"
#include "graphhull/graph.hpp"
#include "graphhull/inference.hpp"
#include "graphhull/objective.hpp"
#include "graphhull/parameterization.hpp"
#include "graphhull/serialization.hpp"

#endif  // GRAPHHULL_GRAPHHULL_HPP
