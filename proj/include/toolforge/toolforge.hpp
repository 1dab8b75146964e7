#pragma once

// Everything except the HTTP backend, which pulls in cpp-httplib; include
// toolforge/http_backend.hpp separately for live models.

#include "toolforge/assistant_format.hpp"
#include "toolforge/benchmark.hpp"
#include "toolforge/corpus.hpp"
#include "toolforge/corruptions.hpp"
#include "toolforge/error.hpp"
#include "toolforge/generator.hpp"
#include "toolforge/hash.hpp"
#include "toolforge/levenshtein.hpp"
#include "toolforge/llm_backend.hpp"
#include "toolforge/mcts.hpp"
#include "toolforge/patterns.hpp"
#include "toolforge/pipeline.hpp"
#include "toolforge/planning.hpp"
#include "toolforge/prompts.hpp"
#include "toolforge/sample.hpp"
#include "toolforge/simulated_backend.hpp"
#include "toolforge/text.hpp"
#include "toolforge/tool_space.hpp"
#include "toolforge/validation.hpp"
