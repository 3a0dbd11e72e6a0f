#pragma once

#include "polybem/error_analysis.hpp"
#include "polybem/experiments.hpp"
#include "polybem/galerkin.hpp"
#include "polybem/geometry.hpp"
#include "polybem/io.hpp"
#include "polybem/operators.hpp"
#include "polybem/postprocess.hpp"
#include "polybem/problems.hpp"
#include "polybem/quadrature.hpp"
