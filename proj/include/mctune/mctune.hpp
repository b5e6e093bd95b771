// Copyright 2026 The mctune Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "mctune/baselines.hpp"
#include "mctune/cost_model.hpp"
#include "mctune/harness.hpp"
#include "mctune/interpreter.hpp"
#include "mctune/kernel.hpp"
#include "mctune/kernel_library.hpp"
#include "mctune/llm_client.hpp"
#include "mctune/mcts.hpp"
#include "mctune/prompt.hpp"
#include "mctune/proposer.hpp"
#include "mctune/random.hpp"
#include "mctune/search_result.hpp"
#include "mctune/transform_types.hpp"
#include "mctune/transforms.hpp"
