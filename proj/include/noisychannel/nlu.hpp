#pragma once

#include "noisychannel/catalog.hpp"
#include "noisychannel/text.hpp"

namespace noisychannel {

// Keyword NLU over a catalog. The intent is that of the first pattern whose
// keywords all occur in the text; the slot is the longest lexicon entry
// (in tokens, earliest entry on ties) occurring contiguously. Text matching
// no pattern is out of domain: intent "ood", empty slot. An in-domain text
// without a known title gets an empty slot.
NluResult toy_nlu(const Tokens& text, const Catalog& catalog);

}  // namespace noisychannel
