#pragma once

#include "bcsg/cli.hpp"
#include "bcsg/equations.hpp"
#include "bcsg/evaluator.hpp"
#include "bcsg/graph.hpp"
#include "bcsg/matrix_game.hpp"
#include "bcsg/model.hpp"
#include "bcsg/pipeline.hpp"
#include "bcsg/policy.hpp"
#include "bcsg/pps.hpp"
#include "bcsg/qualitative.hpp"
#include "bcsg/rational.hpp"
#include "bcsg/simulator.hpp"
#include "bcsg/strategy.hpp"
