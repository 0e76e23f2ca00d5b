#pragma once

#include "qslant/core.hpp"
#include "qslant/corpus.hpp"
#include "qslant/derivatives.hpp"
#include "qslant/dual.hpp"
#include "qslant/errors.hpp"
#include "qslant/expr.hpp"
#include "qslant/geoflow.hpp"
#include "qslant/hstructure.hpp"
#include "qslant/linalg.hpp"
#include "qslant/map.hpp"
#include "qslant/report.hpp"
#include "qslant/slant.hpp"
#include "qslant/version.hpp"
