// Copyright 2026 The sstr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "sstr/assignment.hpp"
#include "sstr/controller.hpp"
#include "sstr/error.hpp"
#include "sstr/protocol.hpp"
#include "sstr/report_json.hpp"
#include "sstr/segmenter.hpp"
#include "sstr/synth.hpp"
#include "sstr/tac.hpp"
#include "sstr/trace_io.hpp"
#include "sstr/trace_model.hpp"
#include "sstr/vav.hpp"
