#pragma once

#include "dirtrunc/random.hpp"
#include "dirtrunc/simplex.hpp"
#include "dirtrunc/truncated_model.hpp"
#include "dirtrunc/chain_trace.hpp"
#include "dirtrunc/aux_gibbs.hpp"
#include "dirtrunc/mh_sampler.hpp"
#include "dirtrunc/diagnostics.hpp"
#include "dirtrunc/oracle.hpp"
