// Copyright 2026 The otadp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef OTADP_OTADP_HPP
#define OTADP_OTADP_HPP

#include "otadp/analysis.hpp"
#include "otadp/channel.hpp"
#include "otadp/config.hpp"
#include "otadp/config_io.hpp"
#include "otadp/device.hpp"
#include "otadp/harness.hpp"
#include "otadp/numeric.hpp"
#include "otadp/privacy.hpp"
#include "otadp/scenario.hpp"
#include "otadp/seed.hpp"
#include "otadp/server.hpp"

#endif  // OTADP_OTADP_HPP
