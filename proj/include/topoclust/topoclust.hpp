#pragma once

#include "datasets.hpp"
#include "disjoint_set.hpp"
#include "evaluation.hpp"
#include "layers.hpp"
#include "manifest.hpp"
#include "matrix.hpp"
#include "numerics.hpp"
#include "rng.hpp"
#include "svg.hpp"
#include "topology.hpp"
#include "training.hpp"
