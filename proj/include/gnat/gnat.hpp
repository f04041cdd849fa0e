// Copyright 2026 The gnat-lattice Authors.
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

// Everything.

#include "gnat/alignment.hpp"
#include "gnat/bench.hpp"
#include "gnat/checks.hpp"
#include "gnat/config.hpp"
#include "gnat/context.hpp"
#include "gnat/dedup.hpp"
#include "gnat/dedup_transducer.hpp"
#include "gnat/demo.hpp"
#include "gnat/harness.hpp"
#include "gnat/inference.hpp"
#include "gnat/matrix.hpp"
#include "gnat/model.hpp"
#include "gnat/model_io.hpp"
#include "gnat/oracle.hpp"
#include "gnat/presets.hpp"
#include "gnat/semiring.hpp"
#include "gnat/weights.hpp"
