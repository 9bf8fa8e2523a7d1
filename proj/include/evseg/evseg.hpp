// Copyright 2026 The evseg Authors.
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

#include "evseg/closure.hpp"
#include "evseg/corpus.hpp"
#include "evseg/corpus_io.hpp"
#include "evseg/embedding.hpp"
#include "evseg/encoder.hpp"
#include "evseg/error.hpp"
#include "evseg/eventseg.hpp"
#include "evseg/hash.hpp"
#include "evseg/inference.hpp"
#include "evseg/joint_model.hpp"
#include "evseg/optimizer.hpp"
#include "evseg/pipeline.hpp"
#include "evseg/pos.hpp"
#include "evseg/random.hpp"
#include "evseg/rectifier.hpp"
#include "evseg/relation.hpp"
#include "evseg/segmentation.hpp"
#include "evseg/stats.hpp"
#include "evseg/subgraph.hpp"
#include "evseg/synth.hpp"
#include "evseg/training.hpp"
