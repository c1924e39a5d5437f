import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from puncstream import data as dt

FLIGHT_WORDS = "i want a flight to boston um to denver".split()
FLIGHT_PUNCT = ["O"] * 8 + ["PERIOD"]
FLIGHT_DISF = ["O", "O", "O", "O", "B-RM", "I-RM", "B-IM", "O", "O"]


def test_flight_example_round_trips_byte_identically(tmp_path):
    seq = dt.TokenSequence(FLIGHT_WORDS, FLIGHT_PUNCT, FLIGHT_DISF)
    path = tmp_path / "one.tsv"
    dt.write_corpus(path, [seq])
    first = path.read_bytes()
    parsed = dt.parse_corpus(path)
    assert len(parsed) == 1
    assert parsed[0].words == FLIGHT_WORDS
    assert parsed[0].punct == FLIGHT_PUNCT
    assert parsed[0].disf == FLIGHT_DISF
    dt.write_corpus(path, parsed)
    assert path.read_bytes() == first


def test_empty_file_gives_empty_corpus(tmp_path):
    path = tmp_path / "empty.tsv"
    path.write_text("")
    assert dt.parse_corpus(path) == []


def test_bare_inside_tag_rejected(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text("hello\tO\tI-RM\n\n")
    with pytest.raises(dt.ParseError, match="bad.tsv:1"):
        dt.parse_corpus(path)


def test_wrong_column_count_reports_line(tmp_path):
    path = tmp_path / "cols.tsv"
    path.write_text("a\tO\tO\nb\tO\n")
    with pytest.raises(dt.ParseError, match="cols.tsv:2"):
        dt.parse_corpus(path)


def test_unlabeled_corpus(tmp_path):
    path = tmp_path / "words.tsv"
    path.write_text("hello\nworld\n\nagain\n\n")
    seqs = dt.parse_corpus(path)
    assert [s.words for s in seqs] == [["hello", "world"], ["again"]]
    assert seqs[0].punct is None and seqs[0].disf is None


def test_unknown_label_rejected_on_encode():
    vocab = dt.Vocabulary(["hi"])
    seq = dt.TokenSequence(["hi"], ["SEMICOLON"], ["O"])
    with pytest.raises(dt.EncodeError, match="SEMICOLON"):
        dt.encode(seq, vocab, dt.LabelScheme())


def test_bio_validation():
    dt.validate_bio(["O", "B-RM", "I-RM", "B-IM", "I-IM", "O"])
    with pytest.raises(dt.BioError):
        dt.validate_bio(["O", "I-RM"])
    with pytest.raises(dt.BioError):
        dt.validate_bio(["B-IM", "I-RM"])


def test_scheme_requires_o_first():
    with pytest.raises(ValueError):
        dt.LabelScheme(punct_labels=("COMMA", "O"))


def test_synth_zero_probabilities_is_fluent():
    seqs = dt.synth_generate(3, 50, dt.GrammarConfig())
    for seq in seqs:
        assert set(seq.disf) == {"O"}
        assert seq.punct[-1] in ("PERIOD", "QUESTION")


def test_synth_deterministic_and_counts_match_log():
    grammar = dt.GrammarConfig(p_filler=0.3, p_repetition=0.3, p_repair=0.3)
    log = []
    a = dt.synth_generate(11, 300, grammar, event_log=log)
    b = dt.synth_generate(11, 300, grammar)
    assert [(s.words, s.punct, s.disf) for s in a] == \
        [(s.words, s.punct, s.disf) for s in b]
    # independent recount: B- tags across the corpus equal logged insertions
    begins = sum(lab.startswith("B-") for s in a for lab in s.disf)
    rm_tokens = sum(lab.endswith("RM") for s in a for lab in s.disf)
    logged_im_inside_repairs = sum(
        1 for kind, k in log if kind == "repair" and k > 2)
    assert begins == len(log) + logged_im_inside_repairs
    # repair insertions of length > 2 include a 2-word reparandum + filler
    assert rm_tokens == sum(min(k, 2) if kind == "repair" else k
                            for kind, k in log if kind != "filler")


def test_repetition_rule_by_construction():
    words = ["i", "fly", "to", "boston"]
    punct = ["O", "O", "O", "PERIOD"]
    disf = ["O"] * 4
    rng = random.Random(0)
    log = []
    w, p, d = dt._insert_repetition(words, punct, disf, rng, log)
    ((_, span),) = log
    start = next(i for i, lab in enumerate(d) if lab == "B-RM")
    assert w[start:start + span] == w[start + span:start + 2 * span]
    assert d[start:start + span] == ["B-RM"] + ["I-RM"] * (span - 1)
    assert p[start:start + span] == ["O"] * span


def test_every_generated_sequence_passes_bio():
    grammar = dt.GrammarConfig(p_filler=0.4, p_repetition=0.4, p_repair=0.4)
    for seq in dt.synth_generate(5, 500, grammar):
        dt.validate_bio(seq.disf)


def test_truncation_augment_identity_at_zero_probability():
    batch = dt.synth_generate(6, 20, dt.GrammarConfig())
    out = dt.truncation_augment(batch, random.Random(0), probability=0.0)
    assert out == batch


def test_truncation_augment_lengths_and_final_punct():
    batch = dt.synth_generate(7, 40, dt.GrammarConfig())
    rng = random.Random(1)
    out = dt.truncation_augment(batch, rng, probability=1.0)
    for before, after in zip(batch, out):
        extra = len(after.words) - len(before.words)
        assert 1 <= extra
        assert after.words[:len(before.words)] == before.words
        assert after.punct[-1] == "O"
        dt.validate_bio(after.disf)


def test_truncation_augment_rate_monte_carlo():
    batch = dt.synth_generate(8, 100, dt.GrammarConfig())
    rng = random.Random(2)
    augmented = 0
    trials = 100
    for _ in range(trials):
        out = dt.truncation_augment(batch, rng)
        augmented += sum(len(a.words) != len(b.words)
                         for a, b in zip(out, batch))
    rate = augmented / (trials * len(batch))
    assert abs(rate - 0.5) < 0.02


def test_vocabulary_min_frequency_and_unk():
    seqs = [dt.TokenSequence(["aa", "aa", "bb"])]
    vocab = dt.Vocabulary.from_corpus(seqs, min_freq=2)
    assert vocab.id_of("aa") > 1
    assert vocab.id_of("bb") == vocab.unk_id
    assert vocab.id_of("zz") == vocab.unk_id


def test_encode_decode_round_trip():
    grammar = dt.GrammarConfig(p_filler=0.3, p_repetition=0.2)
    seqs = dt.synth_generate(9, 30, grammar)
    vocab = dt.Vocabulary.from_corpus(seqs, min_freq=1)
    scheme = dt.LabelScheme()
    for seq in seqs:
        ids, p_ids, d_ids = dt.encode(seq, vocab, scheme)
        assert vocab.unk_id not in ids  # min_freq=1: everything known
        back = dt.decode(ids, p_ids, d_ids, vocab, scheme)
        assert back.words == seq.words
        assert back.punct == seq.punct
        assert back.disf == seq.disf


def test_encode_maps_oov_to_unk():
    vocab = dt.Vocabulary(["known"])
    seq = dt.TokenSequence(["known", "mystery"], ["O", "PERIOD"], ["O", "O"])
    ids, _, _ = dt.encode(seq, vocab, dt.LabelScheme())
    assert ids == [vocab.id_of("known"), vocab.unk_id]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 20))
def test_generate_write_parse_round_trip(seed, count):
    import os
    import tempfile
    grammar = dt.GrammarConfig(p_filler=0.3, p_repetition=0.3, p_repair=0.3)
    seqs = dt.synth_generate(seed, count, grammar)
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "c.tsv")
        dt.write_corpus(path, seqs)
        parsed = dt.parse_corpus(path)
    assert [(s.words, s.punct, s.disf) for s in parsed] == \
        [(s.words, s.punct, s.disf) for s in seqs]
