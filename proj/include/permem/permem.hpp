#pragma once

#include "permem/backend/backend.hpp"
#include "permem/backend/config.hpp"
#include "permem/backend/factory.hpp"
#include "permem/backend/http_backend.hpp"
#include "permem/backend/json_extract.hpp"
#include "permem/backend/mock_backend.hpp"
#include "permem/dataset_io.hpp"
#include "permem/domain_pool.hpp"
#include "permem/error.hpp"
#include "permem/evaluation/jaccard.hpp"
#include "permem/evaluation/metrics.hpp"
#include "permem/evaluation/report.hpp"
#include "permem/evaluation/retention.hpp"
#include "permem/gating.hpp"
#include "permem/horizons.hpp"
#include "permem/json_util.hpp"
#include "permem/memory_bank.hpp"
#include "permem/memory_ops.hpp"
#include "permem/model.hpp"
#include "permem/prompts.hpp"
#include "permem/rng.hpp"
#include "permem/runner.hpp"
#include "permem/stats.hpp"
#include "permem/synthgen/dialogue.hpp"
#include "permem/synthgen/pipeline.hpp"
#include "permem/synthgen/profile.hpp"
#include "permem/synthgen/scaling.hpp"
#include "permem/synthgen/shift.hpp"
#include "permem/synthgen/skeleton.hpp"
#include "permem/synthgen/timeline.hpp"
#include "permem/text.hpp"
