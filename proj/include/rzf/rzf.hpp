// Copyright 2026 The rzf-coop Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RZF_RZF_HPP
#define RZF_RZF_HPP

#include "rzf/bitalloc.hpp"
#include "rzf/common.hpp"
#include "rzf/det_sinr.hpp"
#include "rzf/experiments.hpp"
#include "rzf/linalg.hpp"
#include "rzf/montecarlo.hpp"
#include "rzf/output.hpp"
#include "rzf/parallel.hpp"
#include "rzf/random.hpp"
#include "rzf/regopt.hpp"
#include "rzf/rmt_core.hpp"
#include "rzf/scenario.hpp"

#endif  // RZF_RZF_HPP
