// Umbrella header for the whole library.
#pragma once

#include "laeh/dataset.hpp"
#include "laeh/io.hpp"
#include "laeh/matrix.hpp"
#include "laeh/model.hpp"
#include "laeh/net.hpp"
#include "laeh/objective.hpp"
#include "laeh/retrieval.hpp"
#include "laeh/split.hpp"
#include "laeh/trainer.hpp"
