#pragma once

#include "rollout_lab/error.hpp"
#include "rollout_lab/limits.hpp"
#include "rollout_lab/network.hpp"
#include "rollout_lab/cycles.hpp"
#include "rollout_lab/generators.hpp"
#include "rollout_lab/pattern.hpp"
#include "rollout_lab/window.hpp"
#include "rollout_lab/tableau.hpp"
#include "rollout_lab/scheduler.hpp"
#include "rollout_lab/executor.hpp"
#include "rollout_lab/io.hpp"
