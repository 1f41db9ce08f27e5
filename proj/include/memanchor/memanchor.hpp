#pragma once

// Umbrella header for the anchored long-term memory engine.

#include "memanchor/config.hpp"
#include "memanchor/corpus.hpp"
#include "memanchor/embed.hpp"
#include "memanchor/errors.hpp"
#include "memanchor/eval.hpp"
#include "memanchor/events.hpp"
#include "memanchor/extract.hpp"
#include "memanchor/graph.hpp"
#include "memanchor/index.hpp"
#include "memanchor/lm.hpp"
#include "memanchor/metrics.hpp"
#include "memanchor/prompts.hpp"
#include "memanchor/retrieve.hpp"
