#pragma once

#include <ismoe/dataset.hpp>
#include <ismoe/engine.hpp>
#include <ismoe/errors.hpp>
#include <ismoe/gp.hpp>
#include <ismoe/hyperopt.hpp>
#include <ismoe/metrics.hpp>
#include <ismoe/partition.hpp>
#include <ismoe/synthetic.hpp>
