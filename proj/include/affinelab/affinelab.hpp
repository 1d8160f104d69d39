// SPDX-License-Identifier: Apache-2.0
//
// Everything: jets, surface text, Blaschke structure, curvature,
// classification, families and the report runner.
#pragma once

#include <affinelab/blaschke.hpp>
#include <affinelab/classify.hpp>
#include <affinelab/curvature.hpp>
#include <affinelab/dsl.hpp>
#include <affinelab/error.hpp>
#include <affinelab/families.hpp>
#include <affinelab/jet.hpp>
#include <affinelab/linalg.hpp>
#include <affinelab/report.hpp>
#include <affinelab/sampling.hpp>
#include <affinelab/tensor.hpp>
