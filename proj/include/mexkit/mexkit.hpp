#pragma once

// Umbrella header for the model-extraction experimentation kit.

#include "mexkit/attacks/attacks.hpp"
#include "mexkit/attacks/config.hpp"
#include "mexkit/attacks/report.hpp"
#include "mexkit/common.hpp"
#include "mexkit/core/dataset.hpp"
#include "mexkit/core/metrics.hpp"
#include "mexkit/core/serialize.hpp"
#include "mexkit/exp/data_gen.hpp"
#include "mexkit/exp/matrix.hpp"
#include "mexkit/exp/records.hpp"
#include "mexkit/exp/runner.hpp"
#include "mexkit/exp/tables.hpp"
#include "mexkit/exp/trends.hpp"
#include "mexkit/models/architectures.hpp"
#include "mexkit/models/checkpoint.hpp"
#include "mexkit/models/classifier.hpp"
#include "mexkit/models/network.hpp"
#include "mexkit/models/recipe.hpp"
#include "mexkit/oracle/defense.hpp"
#include "mexkit/oracle/ledger.hpp"
#include "mexkit/oracle/oracle.hpp"
#include "mexkit/selection/deepfool.hpp"
#include "mexkit/selection/dfal.hpp"
#include "mexkit/selection/kcenter.hpp"
#include "mexkit/selection/state.hpp"
