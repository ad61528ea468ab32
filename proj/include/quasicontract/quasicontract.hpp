#pragma once

#include "quasicontract/bounds.hpp"
#include "quasicontract/constraint.hpp"
#include "quasicontract/linalg.hpp"
#include "quasicontract/lti.hpp"
#include "quasicontract/metric.hpp"
#include "quasicontract/orbit.hpp"
#include "quasicontract/region.hpp"
#include "quasicontract/version.hpp"
