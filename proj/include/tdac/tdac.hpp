#pragma once

// Umbrella header: the full library except the CLI front end (tdac/cli.hpp),
// which pulls in CLI11 and is only needed by executables.

#include "tdac/actor_critic.hpp"
#include "tdac/errors.hpp"
#include "tdac/features.hpp"
#include "tdac/harness.hpp"
#include "tdac/io.hpp"
#include "tdac/mdp.hpp"
#include "tdac/oracle.hpp"
#include "tdac/policy.hpp"
#include "tdac/rng.hpp"
#include "tdac/schedule.hpp"
#include "tdac/verify.hpp"
#include "tdac/version.hpp"
