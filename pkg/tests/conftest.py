"""Shared fixtures: small random models and session-scoped trained models.

The trained fixtures run real (toy-scale) training once per session and are
shared between the unit tests and the acceptance suite.
"""

from dataclasses import dataclass

import numpy as np
import pytest

from puncstream import data as dt
from puncstream import model as mdl
from puncstream import training as tr
from puncstream.decoding import ModelTagger
from puncstream.masks import MaskSpec


@dataclass
class ModelBundle:
    config: mdl.ModelConfig
    params: mdl.ModelParams
    vocab: dt.Vocabulary
    scheme: dt.LabelScheme
    tagger: ModelTagger
    test: list
    result: tr.TrainResult = None


def small_config(vocab_size=12, d_model=8, n_layers=2, n_heads=2, d_ff=16,
                 lookahead=(0, 9), punct=4, disf=5, max_positions=512):
    return mdl.ModelConfig(vocab_size, d_model, n_layers, n_heads, d_ff,
                           MaskSpec(lookahead), punct, disf,
                           max_positions=max_positions)


def random_bundle(config, seed=0):
    params = mdl.init_params(config, np.random.default_rng(seed))
    scheme = dt.LabelScheme()
    words = [f"w{i}" for i in range(config.vocab_size - 2)]
    vocab = dt.Vocabulary(words)
    return ModelBundle(config, params, vocab, scheme,
                       ModelTagger(config, params, vocab, scheme), [])


@pytest.fixture(scope="session")
def scheme():
    return dt.LabelScheme()


@pytest.fixture(scope="session")
def travel_bundle():
    """Streaming tagger trained on the standard synthetic travel corpus:
    4 layers, total look-ahead 9, 2000 steps, 5000 utterances."""
    grammar = dt.GrammarConfig("travel", p_filler=0.15, p_repetition=0.10)
    corpus = dt.synth_generate(7, 5000, grammar)
    dev = dt.synth_generate(9, 100, grammar)
    test = dt.synth_generate(8, 300, grammar)
    vocab = dt.Vocabulary.from_corpus(corpus)
    scheme = dt.LabelScheme()
    config = mdl.ModelConfig(len(vocab), 32, 4, 2, 64, MaskSpec((0, 0, 0, 9)),
                             len(scheme.punct_labels), len(scheme.disf_labels))
    result = tr.train(corpus, tr.TrainConfig(batch_size=8, max_steps=2000,
                                             eval_every=250, seed=1),
                      config, vocab, scheme, dev=dev)
    return ModelBundle(config, result.params, vocab, scheme,
                       ModelTagger(config, result.params, vocab, scheme),
                       test, result)


@pytest.fixture(scope="session")
def repair_bundle():
    """Smaller tagger trained with the repair rule enabled, so repaired
    phrases like "to boston um to denver" carry reparandum labels."""
    grammar = dt.GrammarConfig("travel", p_filler=0.15, p_repetition=0.10,
                               p_repair=0.15)
    corpus = dt.synth_generate(30, 3000, grammar)
    dev = dt.synth_generate(31, 100, grammar)
    test = dt.synth_generate(32, 200, grammar)
    vocab = dt.Vocabulary.from_corpus(corpus)
    scheme = dt.LabelScheme()
    config = mdl.ModelConfig(len(vocab), 32, 2, 2, 64, MaskSpec((0, 9)),
                             len(scheme.punct_labels), len(scheme.disf_labels))
    result = tr.train(corpus, tr.TrainConfig(batch_size=8, max_steps=1500,
                                             eval_every=250, seed=2),
                      config, vocab, scheme, dev=dev)
    return ModelBundle(config, result.params, vocab, scheme,
                       ModelTagger(config, result.params, vocab, scheme),
                       test, result)


@pytest.fixture(scope="session")
def adversarial_bundle():
    """Full-attention tagger trained on the late-question grammar, where a
    trailing particle flips clause-end periods to question marks."""
    grammar = dt.GrammarConfig("late-question")
    corpus = dt.synth_generate(20, 2000, grammar)
    dev = dt.synth_generate(21, 100, grammar)
    test = dt.synth_generate(22, 100, grammar)
    vocab = dt.Vocabulary.from_corpus(corpus)
    scheme = dt.LabelScheme()
    config = mdl.ModelConfig(len(vocab), 32, 2, 2, 64, MaskSpec((256, 256)),
                             len(scheme.punct_labels), len(scheme.disf_labels))
    result = tr.train(corpus, tr.TrainConfig(batch_size=8, max_steps=600,
                                             eval_every=150, seed=3),
                      config, vocab, scheme, dev=dev)
    return ModelBundle(config, result.params, vocab, scheme,
                       ModelTagger(config, result.params, vocab, scheme),
                       test, result)
