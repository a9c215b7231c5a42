import random

import pytest

from dop import (Tree, YieldMismatchError, read_trees,
                 score_corpus, score_pair)
from dop.parseval import format_report, report_rows


def tree(text):
    return read_trees(text)[0]


# (proposed, gold, expected (correct, proposed_count, gold_count)),
# all hand-counted from the bracketings
HAND_SCORED_PAIRS = (
    ("(S (NP (P a)) (VP (P b)))", "(S (NP (P a)) (VP (P b)))", (3, 3, 3)),
    ("(S (A (P a) (P b)) (B (P c) (C (P d) (P e))))",
     "(S (A (P a) (P b)) (D (P c) (C (C (P d) (P e)))))", (3, 4, 5)),
    ("(NP a)", "(NP a)", (0, 0, 0)),
    ("(S (P a) (P b) (P c))", "(S (X (P a) (P b)) (P c))", (1, 1, 2)),
    ("(S (A (P a) (P b)))", "(S (B (P a) (P b)))", (1, 2, 2)),
    ("(NP (NP (P a) (P b)))", "(NP (NP (NP (P a) (P b))))", (2, 2, 3)),
    ("(S (A (P a)) (B (P b) (P c)))", "(S (A (P a) (P b)) (B (P c)))",
     (1, 3, 3)),
    ("(S (X (P a) (P b)) (Y (P c) (P d)))",
     "(S (P a) (X (P b) (P c)) (P d))", (1, 3, 2)),
    ("(NP (NP (NP (P a))))", "(NP (NP (P a)))", (2, 3, 2)),
    ("(S (NP (D a) (N b)) (VP (V c) (NP (D d) (N e))))",
     "(S (NP (D a) (N b)) (VP (V c) (NP (D d) (N e))))", (4, 4, 4)),
)


@pytest.mark.parametrize("proposed,gold,expected", HAND_SCORED_PAIRS)
def test_score_pair_hand_counts(proposed, gold, expected):
    assert score_pair(tree(proposed), tree(gold)) == expected


def test_score_pair_identity_random():
    from conftest import random_tree
    rng = random.Random(9)
    for _ in range(20):
        t = random_tree(rng)
        correct, proposed, gold = score_pair(t, t)
        assert correct == proposed == gold


def test_score_pair_symmetry():
    for proposed, gold, _ in HAND_SCORED_PAIRS:
        a, _, _ = score_pair(tree(proposed), tree(gold))
        b, _, _ = score_pair(tree(gold), tree(proposed))
        assert a == b


def _splice(t, path):
    """Remove one internal node, promoting its children."""
    if not path:
        raise ValueError
    children = list(t.children)
    i = path[0]
    if len(path) == 1:
        children[i:i + 1] = list(children[i].children)
    else:
        children[i] = _splice(children[i], path[1:])
    return Tree(t.label, children)


def test_removing_constituent_never_increases_correct():
    gold = tree("(S (A (P a) (P b)) (B (P c) (C (P d) (P e))))")
    proposed = tree("(S (A (P a) (P b)) (B (P c) (C (P d) (P e))))")
    weakened = _splice(proposed, (1,))        # drop the B node
    full, _, _ = score_pair(proposed, gold)
    fewer, _, _ = score_pair(weakened, gold)
    assert fewer <= full


def test_score_pair_yield_mismatch():
    with pytest.raises(YieldMismatchError):
        score_pair(tree("(S (P a) (P b))"), tree("(S (P a) (P c))"))


def test_score_corpus_micro_average():
    pairs = [
        (tree(HAND_SCORED_PAIRS[1][0]), tree(HAND_SCORED_PAIRS[1][1])),
        (tree("(S (A (P x) (P y)))"), tree("(S (A (P x) (P y)))")),
    ]
    report = score_corpus(pairs)
    assert report.totals(None)[:3] == (5, 6, 7)
    assert report.precision() == 5 / 6
    assert report.recall() == 5 / 7


def test_score_corpus_identity():
    trees = [tree(gold) for _, gold, _ in HAND_SCORED_PAIRS]
    report = score_corpus([(t, t) for t in trees])
    assert report.precision() == 1.0
    assert report.recall() == 1.0


def test_score_corpus_no_parse():
    gold_rich = tree("(S (A (B (C (P a) (P b)))))")     # 4 constituents
    perfect = tree("(S (NP (P a)) (VP (P b)))")          # 3 constituents
    report = score_corpus([(None, gold_rich), (perfect, perfect)])
    assert report.precision() == 1.0
    assert report.recall() == 3 / 7
    assert report.totals(None)[4] == 1                   # one no-parse


def test_score_corpus_records_mismatches():
    good = tree("(S (P a) (P b))")
    bad = tree("(S (P a) (P x))")
    report = score_corpus([(bad, good), (good, good)])
    assert len(report.errors) == 1
    assert report.errors[0][0] == 0
    assert report.totals(None)[3] == 1                   # one scored sentence


def test_length_bins():
    def flat(n):
        return Tree("S", tuple(Tree("P", ("w%d" % i,)) for i in range(n)))

    short, mid, long_ = flat(5), flat(45), flat(101)
    report = score_corpus([(short, short), (mid, mid), (long_, long_)])
    assert report.totals(40)[3] == 1
    assert report.totals(100)[3] == 2
    assert report.totals(None)[3] == 3


def test_exclude_root():
    proposed = tree("(S (A (P a) (P b)))")
    gold = tree("(X (A (P a) (P b)))")
    assert score_pair(proposed, gold) == (1, 2, 2)
    assert score_pair(proposed, gold, exclude_root=True) == (1, 1, 1)


def test_empty_corpus_rejected():
    with pytest.raises(ValueError):
        score_corpus([])


def test_format_and_rows_smoke():
    t = tree("(S (NP (P a)) (VP (P b)))")
    report = score_corpus([(t, t)])
    text = format_report(report)
    assert "LP 100.00" in text and "LR 100.00" in text
    rows = report_rows(report)
    assert rows[0].startswith("index\t")
    assert rows[1] == "0\t2\t3\t3\t3\t0"
