"""PARSEVAL scoring: labeled precision and recall over constituents.

A proposed constituent is correct if the gold tree has a constituent with
the same label over the same word span; duplicates (unary chains repeating
a label over one span) match at most once per occurrence, i.e. multiset
intersection, as evalb does.
"""

from dataclasses import dataclass

from .tree import Tree, constituents


class YieldMismatchError(ValueError):
    pass


def score_pair(proposed: Tree, gold: Tree, exclude_root: bool = False):
    """(correct, proposed count, gold count) for one sentence."""
    if proposed.leaves() != gold.leaves():
        raise YieldMismatchError(
            "proposed yield %r differs from gold yield %r"
            % (" ".join(proposed.leaves()), " ".join(gold.leaves())))
    prop = constituents(proposed, exclude_root=exclude_root)
    ref = constituents(gold, exclude_root=exclude_root)
    correct = sum((prop & ref).values())
    return correct, sum(prop.values()), sum(ref.values())


@dataclass(frozen=True)
class SentenceScore:
    index: int
    length: int               # gold sentence length in words
    correct: int
    proposed: int
    gold: int
    no_parse: bool


@dataclass(frozen=True)
class ScoreReport:
    rows: tuple
    errors: tuple             # (index, message) for yield mismatches

    def totals(self, max_length=None):
        """(correct, proposed, gold, sentences, no_parses) over a length bin."""
        correct = proposed = gold = sentences = no_parses = 0
        for row in self.rows:
            if max_length is not None and row.length > max_length:
                continue
            correct += row.correct
            proposed += row.proposed
            gold += row.gold
            sentences += 1
            no_parses += row.no_parse
        return correct, proposed, gold, sentences, no_parses

    def precision(self, max_length=None) -> float:
        correct, proposed, _, _, _ = self.totals(max_length)
        return correct / proposed if proposed else 0.0

    def recall(self, max_length=None) -> float:
        correct, _, gold, _, _ = self.totals(max_length)
        return correct / gold if gold else 0.0


def score_corpus(pairs, exclude_root: bool = False) -> ScoreReport:
    """Micro-averaged scores over (proposed-or-None, gold) pairs.

    None marks a no-parse: it contributes the gold count and nothing else.
    Yield mismatches are recorded and excluded from the totals.
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("empty corpus")
    rows = []
    errors = []
    for index, (proposed, gold) in enumerate(pairs):
        length = len(gold.leaves())
        gold_count = sum(constituents(gold, exclude_root=exclude_root).values())
        if proposed is None:
            rows.append(SentenceScore(index, length, 0, 0, gold_count, True))
            continue
        try:
            correct, proposed_count, gold_count = score_pair(
                proposed, gold, exclude_root=exclude_root)
        except YieldMismatchError as err:
            errors.append((index, str(err)))
            continue
        rows.append(SentenceScore(index, length, correct, proposed_count,
                                  gold_count, False))
    return ScoreReport(rows=tuple(rows), errors=tuple(errors))


def format_report(report: ScoreReport) -> str:
    """Human-readable summary with the <=40 and <=100 word bins."""
    lines = []
    for title, bound in (("<= 40 words", 40), ("<= 100 words", 100),
                         ("all sentences", None)):
        correct, proposed, gold, sentences, no_parses = report.totals(bound)
        lp = 100.0 * correct / proposed if proposed else 0.0
        lr = 100.0 * correct / gold if gold else 0.0
        lines.append("%-14s  sentences %-5d  no-parse %-4d  LP %6.2f  LR %6.2f"
                     % (title, sentences, no_parses, lp, lr))
    if report.errors:
        lines.append("skipped %d pair(s) with mismatched yields"
                     % len(report.errors))
    return "\n".join(lines)


def report_rows(report: ScoreReport) -> list:
    """Per-sentence TSV rows plus binned totals."""
    out = ["index\tlength\tcorrect\tproposed\tgold\tno_parse"]
    for row in report.rows:
        out.append("%d\t%d\t%d\t%d\t%d\t%d"
                   % (row.index, row.length, row.correct, row.proposed,
                      row.gold, int(row.no_parse)))
    out.append("bin\tsentences\tcorrect\tproposed\tgold\tLP\tLR")
    for name, bound in (("le40", 40), ("le100", 100), ("all", None)):
        correct, proposed, gold, sentences, no_parses = report.totals(bound)
        lp = 100.0 * correct / proposed if proposed else 0.0
        lr = 100.0 * correct / gold if gold else 0.0
        out.append("%s\t%d\t%d\t%d\t%d\t%.2f\t%.2f"
                   % (name, sentences, correct, proposed, gold, lp, lr))
    return out
