#include "doctest.h"
#include "risac/schemes.hpp"
