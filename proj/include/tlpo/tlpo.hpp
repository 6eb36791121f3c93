#pragma once

#include "tlpo/crossval.hpp"
#include "tlpo/dataset.hpp"
#include "tlpo/harness.hpp"
#include "tlpo/learners.hpp"
#include "tlpo/parallel.hpp"
#include "tlpo/rng.hpp"
#include "tlpo/roc.hpp"
#include "tlpo/stats.hpp"
#include "tlpo/synth.hpp"
#include "tlpo/tournament.hpp"
