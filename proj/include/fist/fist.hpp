#ifndef FIST_FIST_HPP
#define FIST_FIST_HPP

#include "fist/entity_id.hpp"
#include "fist/model.hpp"
#include "fist/validator.hpp"
#include "fist/corpus.hpp"
#include "fist/query.hpp"
#include "fist/incident.hpp"
#include "fist/report.hpp"
#include "fist/incident_store.hpp"
#include "fist/interop.hpp"

#endif
