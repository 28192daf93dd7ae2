#pragma once

#include "particlesynth/augment.hpp"
#include "particlesynth/catalog.hpp"
#include "particlesynth/config.hpp"
#include "particlesynth/dataset.hpp"
#include "particlesynth/error.hpp"
#include "particlesynth/evaluation.hpp"
#include "particlesynth/geometry.hpp"
#include "particlesynth/metadata.hpp"
#include "particlesynth/particle.hpp"
#include "particlesynth/pgm.hpp"
#include "particlesynth/png.hpp"
#include "particlesynth/psd.hpp"
#include "particlesynth/raster.hpp"
#include "particlesynth/render.hpp"
#include "particlesynth/rle.hpp"
#include "particlesynth/rng.hpp"
#include "particlesynth/scene.hpp"
#include "particlesynth/sieve.hpp"
#include "particlesynth/synthetic.hpp"
