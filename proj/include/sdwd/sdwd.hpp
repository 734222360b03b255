#pragma once
#include <sdwd/cv.hpp>
#include <sdwd/data.hpp>
#include <sdwd/error.hpp>
#include <sdwd/export.hpp>
#include <sdwd/format.hpp>
#include <sdwd/loss.hpp>
#include <sdwd/model.hpp>
#include <sdwd/oracle.hpp>
#include <sdwd/path.hpp>
#include <sdwd/rng.hpp>
#include <sdwd/simgen.hpp>
#include <sdwd/solver.hpp>
#include <sdwd/sparse.hpp>
