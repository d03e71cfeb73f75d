// Copyright 2026 The ldpred Authors
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

#ifndef LDPRED__LDPRED_HPP_
#define LDPRED__LDPRED_HPP_

#include "ldpred/assessment.hpp"
#include "ldpred/config.hpp"
#include "ldpred/control.hpp"
#include "ldpred/csv.hpp"
#include "ldpred/dynamics.hpp"
#include "ldpred/estimation.hpp"
#include "ldpred/lane_path.hpp"
#include "ldpred/prediction.hpp"
#include "ldpred/random.hpp"
#include "ldpred/simulator.hpp"
#include "ldpred/stats.hpp"
#include "ldpred/types.hpp"

#endif  // LDPRED__LDPRED_HPP_
