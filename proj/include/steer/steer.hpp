#pragma once

#include "steer/ansatz.hpp"
#include "steer/commands.hpp"
#include "steer/geometry.hpp"
#include "steer/io.hpp"
#include "steer/lhs_sim.hpp"
#include "steer/qstate.hpp"
#include "steer/radius.hpp"
#include "steer/sphere.hpp"
