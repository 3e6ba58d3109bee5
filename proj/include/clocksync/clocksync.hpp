#pragma once

#include <clocksync/combinations.hpp>
#include <clocksync/edge_orbits.hpp>
#include <clocksync/errors.hpp>
#include <clocksync/linalg.hpp>
#include <clocksync/matrix.hpp>
#include <clocksync/phase.hpp>
#include <clocksync/rational.hpp>
#include <clocksync/recovery.hpp>
#include <clocksync/resilience.hpp>
#include <clocksync/sync_model.hpp>
