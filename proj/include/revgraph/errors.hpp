// Copyright 2026 the revgraph authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>

namespace revgraph {

// Base class for every recoverable error this library raises.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define REVGRAPH_ERROR_TYPE(Name) \
  struct Name : Error {           \
    using Error::Error;           \
  }

REVGRAPH_ERROR_TYPE(KindMismatch);
REVGRAPH_ERROR_TYPE(UnknownNode);
REVGRAPH_ERROR_TYPE(IoError);
REVGRAPH_ERROR_TYPE(FormatError);
REVGRAPH_ERROR_TYPE(ParseError);
REVGRAPH_ERROR_TYPE(DimensionMismatch);
REVGRAPH_ERROR_TYPE(MissingEmbedding);
REVGRAPH_ERROR_TYPE(MissingCache);
REVGRAPH_ERROR_TYPE(UnknownToken);
REVGRAPH_ERROR_TYPE(EmptyRelation);
REVGRAPH_ERROR_TYPE(NegativeSamplingExhausted);
REVGRAPH_ERROR_TYPE(NonFiniteLoss);
REVGRAPH_ERROR_TYPE(ColdStart);
REVGRAPH_ERROR_TYPE(NoCandidates);
REVGRAPH_ERROR_TYPE(InvalidConfig);
REVGRAPH_ERROR_TYPE(EmptyCases);

#undef REVGRAPH_ERROR_TYPE

}  // namespace revgraph
