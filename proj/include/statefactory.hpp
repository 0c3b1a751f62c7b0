#pragma once

#include "statefactory/baselines.hpp"
#include "statefactory/blocksworld.hpp"
#include "statefactory/commands.hpp"
#include "statefactory/dataset.hpp"
#include "statefactory/embedding.hpp"
#include "statefactory/errors.hpp"
#include "statefactory/extraction.hpp"
#include "statefactory/llm.hpp"
#include "statefactory/metrics.hpp"
#include "statefactory/planner.hpp"
#include "statefactory/prompts.hpp"
#include "statefactory/remote_embedding.hpp"
#include "statefactory/routing.hpp"
#include "statefactory/state_model.hpp"
#include "statefactory/trajectory.hpp"
