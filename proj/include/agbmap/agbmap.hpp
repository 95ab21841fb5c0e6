#pragma once

#include "agbmap/allometry.hpp"
#include "agbmap/error.hpp"
#include "agbmap/geostat/kriging.hpp"
#include "agbmap/geostat/samples.hpp"
#include "agbmap/geostat/variogram.hpp"
#include "agbmap/kdtree.hpp"
#include "agbmap/parallel.hpp"
#include "agbmap/pipeline/calibration.hpp"
#include "agbmap/pipeline/config.hpp"
#include "agbmap/pipeline/mapping.hpp"
#include "agbmap/pipeline/run.hpp"
#include "agbmap/random.hpp"
#include "agbmap/raster/ascii_grid.hpp"
#include "agbmap/raster/composites.hpp"
#include "agbmap/raster/glcm.hpp"
#include "agbmap/raster/grid.hpp"
#include "agbmap/raster/match.hpp"
#include "agbmap/raster/pca.hpp"
#include "agbmap/raster/quicklook.hpp"
#include "agbmap/raster/resample.hpp"
#include "agbmap/raster/terrain.hpp"
#include "agbmap/regression/cv.hpp"
#include "agbmap/regression/design.hpp"
#include "agbmap/regression/forest.hpp"
#include "agbmap/regression/importance.hpp"
#include "agbmap/regression/linear.hpp"
#include "agbmap/regression/persist.hpp"
#include "agbmap/regression/stepwise.hpp"
#include "agbmap/synthdata/field.hpp"
#include "agbmap/synthdata/scene.hpp"
#include "agbmap/text.hpp"
#include "agbmap/waveform/decompose.hpp"
#include "agbmap/waveform/filter.hpp"
#include "agbmap/waveform/io.hpp"
#include "agbmap/waveform/metrics.hpp"
#include "agbmap/waveform/process.hpp"
#include "agbmap/waveform/signal.hpp"
#include "agbmap/waveform/types.hpp"
