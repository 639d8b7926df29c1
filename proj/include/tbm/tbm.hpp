#pragma once

#include "baselines.hpp"
#include "corpus.hpp"
#include "errors.hpp"
#include "eval.hpp"
#include "model.hpp"
#include "numeric.hpp"
#include "report.hpp"
#include "sampler.hpp"
#include "samples_io.hpp"
