#pragma once

#include "error.hpp"
#include "rng.hpp"
#include "digest.hpp"
#include "parallel.hpp"
#include "textio.hpp"
#include "hermitian.hpp"
#include "qcml.hpp"
#include "metrics.hpp"
#include "panel.hpp"
#include "synthetic.hpp"
#include "ensemble.hpp"
#include "signal.hpp"
#include "backtest.hpp"
#include "run.hpp"
