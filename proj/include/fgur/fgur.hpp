#pragma once

#include "fgur/errors.hpp"
#include "fgur/linalg.hpp"
#include "fgur/tester.hpp"
#include "fgur/random.hpp"
#include "fgur/channel_opt.hpp"
#include "fgur/bounds.hpp"
#include "fgur/scenarios.hpp"
#include "fgur/json_io.hpp"
#include "fgur/verify.hpp"
