// Copyright 2026 The mwcover Authors.
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

#include "mwcover/boost.hpp"
#include "mwcover/core.hpp"
#include "mwcover/coverage.hpp"
#include "mwcover/discriminator.hpp"
#include "mwcover/divergence.hpp"
#include "mwcover/generators.hpp"
#include "mwcover/io.hpp"
#include "mwcover/kmeans.hpp"
#include "mwcover/oracles.hpp"
#include "mwcover/rng.hpp"
#include "mwcover/synthdata.hpp"
