#pragma once

// Everything in one include.

#include "spinlab/error.hpp"
#include "spinlab/io.hpp"
#include "spinlab/koenigs.hpp"
#include "spinlab/limits.hpp"
#include "spinlab/parallel.hpp"
#include "spinlab/polyfam.hpp"
#include "spinlab/render.hpp"
#include "spinlab/spinpath.hpp"
#include "spinlab/torusgeom.hpp"
#include "spinlab/visibility.hpp"
