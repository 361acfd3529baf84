#pragma once

#include "fui/data/csv.hpp"
#include "fui/data/partition.hpp"
#include "fui/data/synthetic.hpp"
#include "fui/dpfl/engine.hpp"
#include "fui/dpfl/privacy.hpp"
#include "fui/error.hpp"
#include "fui/eval/convergence.hpp"
#include "fui/eval/metrics.hpp"
#include "fui/eval/mia.hpp"
#include "fui/eval/pipeline.hpp"
#include "fui/eval/sweep.hpp"
#include "fui/game/solver.hpp"
#include "fui/game/strategies.hpp"
#include "fui/game/utilities.hpp"
#include "fui/harness/config.hpp"
#include "fui/harness/run_dir.hpp"
#include "fui/models/dataset.hpp"
#include "fui/models/model.hpp"
#include "fui/unlearning/calibration.hpp"
#include "fui/unlearning/fui.hpp"
#include "fui/vecnum/codec.hpp"
#include "fui/vecnum/lbfgs.hpp"
#include "fui/vecnum/param_vector.hpp"
#include "fui/vecnum/rng.hpp"
