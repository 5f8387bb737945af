#pragma once

#include "topm/complexity.hpp"
#include "topm/engine.hpp"
#include "topm/errors.hpp"
#include "topm/estimator.hpp"
#include "topm/harness.hpp"
#include "topm/indices.hpp"
#include "topm/instance_io.hpp"
#include "topm/instances.hpp"
#include "topm/linalg.hpp"
#include "topm/random.hpp"
#include "topm/ranking.hpp"
#include "topm/simplex.hpp"
