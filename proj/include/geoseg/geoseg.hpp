#pragma once

// Umbrella header for the geoseg library.

#include "geoseg/coco.hpp"
#include "geoseg/config.hpp"
#include "geoseg/error.hpp"
#include "geoseg/evaluation.hpp"
#include "geoseg/mask.hpp"
#include "geoseg/pgm.hpp"
#include "geoseg/polygon.hpp"
#include "geoseg/preprocess.hpp"
#include "geoseg/probability_map.hpp"
#include "geoseg/quality_filter.hpp"
#include "geoseg/sampling.hpp"
