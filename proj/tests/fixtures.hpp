#pragma once

#include "tsqa/corpus.hpp"
#include "tsqa/trainer.hpp"

namespace fixture {

struct Small {
  tsqa::SyntheticCorpus corpus;
  tsqa::Vocabulary vocab;
  tsqa::FeatureConfig features;
  std::vector<tsqa::Example> train, dev;
};

/// A small synthetic split shared by the policy and trainer tests.
inline const Small& small() {
  static const Small s = [] {
    Small out;
    tsqa::SyntheticConfig c;
    c.n_entities = 30;
    c.n_train = 120;
    c.n_dev = 40;
    c.n_test = 10;
    c.seed = 7;
    out.corpus = tsqa::generate_synthetic(c);
    out.vocab = tsqa::Vocabulary::build(out.corpus.train);
    out.features.d = 8;
    out.features.hidden = 12;
    out.train = tsqa::prepare_examples(out.corpus.train, out.vocab, out.features);
    out.dev = tsqa::prepare_examples(out.corpus.dev, out.vocab, out.features);
    return out;
  }();
  return s;
}

inline tsqa::PolicyDims dims(const Small& s, tsqa::FusionMode fusion = tsqa::FusionMode::add) {
  return {s.vocab.size(), s.features.d, s.features.hidden, fusion};
}

}  // namespace fixture
