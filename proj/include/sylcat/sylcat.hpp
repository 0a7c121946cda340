#pragma once

#include "sylcat/corpus.hpp"
#include "sylcat/error.hpp"
#include "sylcat/evaluation.hpp"
#include "sylcat/evolver.hpp"
#include "sylcat/hmm.hpp"
#include "sylcat/map_io.hpp"
#include "sylcat/model_io.hpp"
#include "sylcat/parallel.hpp"
#include "sylcat/phonology.hpp"
#include "sylcat/rng.hpp"
