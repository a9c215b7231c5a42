import random
from collections import Counter
from fractions import Fraction

import pytest

from dop import (Fragment, OracleOverflowError, RestrictionSet, build_model,
                 enumerate_derivations, exact_mpp, extract_treebank,
                 read_treebank, write_tree)
from dop.oracle import report_lines
from conftest import TOY_HEAD_RULES


def frag(text):
    return Fragment.from_string(text)


# hand-derived on the 2-tree corpus via the inside recursion:
# P("john hates susan") = 1/20 over 13 derivations,
# P("john likes mary") = 11/80 over 16 derivations.
def test_toy_sentence_exact_sums(toy_model):
    report = enumerate_derivations(toy_model, "john hates susan".split())
    assert len(report.derivations) == 13
    tree = "(S (NP john) (VP (V hates) (NP susan)))"
    assert report.tree_sums == {tree: Fraction(1, 20)}

    report = enumerate_derivations(toy_model, "john likes mary".split())
    assert len(report.derivations) == 16
    tree = "(S (NP john) (VP (V likes) (NP mary)))"
    assert report.tree_sums == {tree: Fraction(11, 80)}


def test_derivation_probabilities_multiply(toy_model):
    report = enumerate_derivations(toy_model, "john hates susan".split())
    for derivation in report.derivations:
        product = Fraction(1)
        for fragment in derivation.fragments:
            product *= toy_model.entries[fragment.key].probability
        assert derivation.probability == product
    assert sum(d.probability for d in report.derivations) == Fraction(1, 20)


def test_uncovered_word_yields_no_derivations(toy_model):
    report = enumerate_derivations(toy_model, "john likes zebras".split())
    assert report.derivations == ()
    assert report.tree_sums == {}


def test_depth1_model_single_derivation_per_tree(toy_treebank):
    model = build_model(extract_treebank(toy_treebank),
                        RestrictionSet(max_depth=1), TOY_HEAD_RULES,
                        start_labels={"S"})
    report = enumerate_derivations(model, "john hates mary".split())
    assert len(report.derivations) == len(report.tree_sums) == 1


def test_total_mass_bounded(toy_model):
    total = Fraction(0)
    for sentence in ("john likes mary", "john hates susan",
                     "peter likes susan", "peter hates mary"):
        report = enumerate_derivations(toy_model, sentence.split())
        total += sum(report.tree_sums.values(), Fraction(0))
    assert total <= 1


def test_order_independence(toy_model):
    # shuffling the entry dict must not change the report
    report_a = enumerate_derivations(toy_model, "john hates susan".split())
    items = list(toy_model.entries.items())
    random.Random(5).shuffle(items)
    toy_model.entries = dict(items)
    report_b = enumerate_derivations(toy_model, "john hates susan".split())
    assert {d.fragments for d in report_a.derivations} == \
        {d.fragments for d in report_b.derivations}
    assert report_a.tree_sums == report_b.tree_sums


def test_cap_overflow():
    fragments = Counter({frag("(A (B))"): 1, frag("(B (A))"): 1,
                         frag("(A w)"): 1, frag("(B v)"): 1})
    model = build_model(fragments, RestrictionSet(), TOY_HEAD_RULES,
                        start_labels={"A"})
    with pytest.raises(OracleOverflowError):
        enumerate_derivations(model, ["w"], cap=500)


def test_exact_mpp_rational_comparison(toy_model):
    report = enumerate_derivations(toy_model, "john hates susan".split())
    assert write_tree(exact_mpp(report)) == \
        "(S (NP john) (VP (V hates) (NP susan)))"


def test_exact_mpp_prefers_larger_sum():
    # build a report by hand through the public API: ambiguous corpus
    corpus = (
        "(S (V saw) (NP (N man)) (PP (P with) (N scope)))\n"
        "(S (V saw) (NP (NP (N man)) (PP (P with) (N scope))))\n"
    )
    bank = read_treebank(corpus)
    model = build_model(extract_treebank(bank), RestrictionSet(),
                        TOY_HEAD_RULES, start_labels={"S"})
    report = enumerate_derivations(model, "saw man with scope".split())
    assert len(report.tree_sums) == 2
    best = exact_mpp(report)
    best_sum = report.tree_sums[write_tree(best)]
    assert all(best_sum >= other for other in report.tree_sums.values())


def test_exact_mpp_empty_report(toy_model):
    report = enumerate_derivations(toy_model, ["zebras"])
    with pytest.raises(ValueError):
        exact_mpp(report)


def test_report_lines_format(toy_model):
    report = enumerate_derivations(toy_model, "john hates susan".split())
    lines = report_lines(report)
    assert lines == ["(S (NP john) (VP (V hates) (NP susan)))\t1/20\t13"]
