#pragma once

#include "fdout/core.hpp"
#include "fdout/depths.hpp"
#include "fdout/detect.hpp"
#include "fdout/dirout.hpp"
#include "fdout/muod.hpp"
#include "fdout/robust.hpp"
#include "fdout/simmodels.hpp"
#include "fdout/tvd.hpp"
