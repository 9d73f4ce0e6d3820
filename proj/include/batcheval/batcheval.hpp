#pragma once

// Umbrella header: batched LLM-as-judge evaluation with iterative
// repartitioning, score ensembling, diagnostics, and a deterministic
// simulated judge.

#include "batcheval/api_judge.hpp"
#include "batcheval/artifacts.hpp"
#include "batcheval/batching.hpp"
#include "batcheval/datasets.hpp"
#include "batcheval/engine.hpp"
#include "batcheval/errors.hpp"
#include "batcheval/judge.hpp"
#include "batcheval/metrics.hpp"
#include "batcheval/noise.hpp"
#include "batcheval/parsing.hpp"
#include "batcheval/prompts.hpp"
#include "batcheval/report.hpp"
#include "batcheval/rng.hpp"
#include "batcheval/sweep.hpp"
#include "batcheval/types.hpp"
