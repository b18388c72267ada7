#pragma once

#include "prosim/analysis.hpp"
#include "prosim/config.hpp"
#include "prosim/decision.hpp"
#include "prosim/engine.hpp"
#include "prosim/error.hpp"
#include "prosim/io.hpp"
#include "prosim/llm_client.hpp"
#include "prosim/policy.hpp"
#include "prosim/population.hpp"
#include "prosim/random.hpp"
#include "prosim/scenario.hpp"
#include "prosim/shapley.hpp"
#include "prosim/socialnet.hpp"
#include "prosim/stats.hpp"
#include "prosim/tpp.hpp"
