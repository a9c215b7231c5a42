"""Chart parsing with fragment-indexed rules.

Each model fragment becomes a rule: lhs = the fragment's root, rhs = its
frontier (words and substitution sites) left to right. Rule right-hand
sides are matched through a shared prefix trie, which left-factors long
rules into binary steps; the dotted prefix items this creates are internal
to the parser. The inside pass is a bottom-up CKY with per-span pruning on
prior-weighted scores; derivations come out of the pruned forest through
lazy n-best extraction, and the most probable parse sums derivation
probabilities per tree.
"""

import heapq
import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction

from .fragments import Fragment, Site
from .model import FragmentModel
from .tree import Tree, write_tree


class CompositionError(ValueError):
    pass


class CyclicGrammarError(ValueError):
    """Unary fragment cycles make the derivation set infinite."""


@dataclass(frozen=True)
class IndexedRule:
    lhs: str
    rhs: tuple                # fragment frontier: Site markers and words
    fragment: Fragment
    probability: Fraction
    logprob: float
    index: int


def _log(probability) -> float:
    p = Fraction(probability)
    return math.log(p.numerator) - math.log(p.denominator)


def to_rules(model: FragmentModel) -> list:
    """One rule per model entry, in deterministic (root, key) order."""
    rules = []
    for key in sorted(model.entries, key=lambda k: (model.entries[k].fragment.root, k)):
        entry = model.entries[key]
        fragment = entry.fragment
        rules.append(IndexedRule(
            lhs=fragment.root, rhs=fragment.frontier, fragment=fragment,
            probability=entry.probability, logprob=_log(entry.probability),
            index=len(rules)))
    return rules


def compose(left, right):
    """Substitute `right` on the leftmost open site of `left`.

    Left may be a Fragment or a Tree (a Tree has no open site and always
    fails); right is a Fragment or a closed Tree. Returns a Tree when the
    result has no remaining site, else a Fragment.
    """
    lstruct = left.structure if isinstance(left, Fragment) else left
    rstruct = right.structure if isinstance(right, Fragment) else right

    def substitute(node):
        # returns (new node, replaced?) rebuilding only the leftmost path
        children = list(node.children)
        for i, child in enumerate(children):
            if isinstance(child, Site):
                if child.label != rstruct.label:
                    raise CompositionError(
                        "leftmost open site is %s, cannot substitute %s"
                        % (child.label, rstruct.label))
                children[i] = rstruct
                return Tree(node.label, children), True
            if isinstance(child, Tree):
                new_child, done = substitute(child)
                if done:
                    children[i] = new_child
                    return Tree(node.label, children), True
        return node, False

    result, done = substitute(lstruct)
    if not done:
        raise CompositionError("no open substitution site on the left operand")
    if any(isinstance(item, Site) for item in _frontier_of(result)):
        return Fragment(result)
    return result


def _frontier_of(node):
    for child in node.children:
        if isinstance(child, Tree):
            yield from _frontier_of(child)
        else:
            yield child


def _symbol(rhs_element):
    if isinstance(rhs_element, Site):
        return ("n", rhs_element.label)
    return ("w", rhs_element)


class _Grammar:
    """Prefix trie over rule right-hand sides, with completions per node."""

    def __init__(self, rules):
        self.first_step = {}          # symbol -> trie node
        self.steps = {}               # (trie node, symbol) -> trie node
        self.completions = defaultdict(list)   # trie node -> [(lhs, rule)]
        self.lhs_labels = set()
        unary_edges = defaultdict(set)
        counter = 0
        for rule in rules:
            node = None
            for i, element in enumerate(rule.rhs):
                sym = _symbol(element)
                if i == 0:
                    node = self.first_step.get(sym)
                    if node is None:
                        node = self.first_step[sym] = counter
                        counter += 1
                else:
                    node = self.steps.get((prev, sym))
                    if node is None:
                        node = self.steps[(prev, sym)] = counter
                        counter += 1
                prev = node
            self.completions[node].append((rule.lhs, rule))
            self.lhs_labels.add(rule.lhs)
            if len(rule.rhs) == 1 and isinstance(rule.rhs[0], Site):
                unary_edges[rule.lhs].add(rule.rhs[0].label)
        self.unary_cycle = _find_cycle(unary_edges)

    def unary_completions(self, sym):
        node = self.first_step.get(sym)
        if node is None:
            return ()
        return self.completions.get(node, ())


def _find_cycle(edges):
    """A label on a cycle of the unary-rule graph, or None."""
    done = set()
    for origin in edges:
        if origin in done:
            continue
        path = set()
        stack = [(origin, iter(edges.get(origin, ())))]
        path.add(origin)
        while stack:
            label, it = stack[-1]
            for succ in it:
                if succ in path:
                    return succ
                if succ not in done:
                    path.add(succ)
                    stack.append((succ, iter(edges.get(succ, ()))))
                    break
            else:
                stack.pop()
                path.discard(label)
                done.add(label)
    return None


class ChartItem:
    """A (symbol, span) vertex of the parse forest.

    inside is the best (Viterbi) log inside probability; edges are
    (rule-or-None, tails, log weight) triples. The derivation list and
    candidate heap are filled lazily during n-best extraction.
    """

    __slots__ = ("sym", "span", "inside", "edges", "_edge_ids",
                 "derivs", "cand", "seen")

    def __init__(self, sym, span):
        self.sym = sym
        self.span = span
        self.inside = -math.inf
        self.edges = []
        self._edge_ids = set()
        self.derivs = None
        self.cand = None
        self.seen = None

    def add_edge(self, rule, tails, weight):
        edge_id = (rule.index if rule else -1, tuple(id(t) for t in tails))
        if edge_id in self._edge_ids:
            return False
        self._edge_ids.add(edge_id)
        self.edges.append((rule, tuple(tails), weight))
        score = weight + sum(t.inside for t in tails)
        if score > self.inside:
            self.inside = score
        return True

    @property
    def label(self):
        return self.sym[1]

    def __repr__(self):
        return "ChartItem(%r, %r, %.4f)" % (self.sym, self.span, self.inside)


class Chart:
    """Pruned parse forest for one sentence."""

    def __init__(self, sentence, cells, start_items, unary_cycle=None):
        self.sentence = sentence
        self.cells = cells
        self.start_items = start_items
        self.unary_cycle = unary_cycle

    def item(self, label, start, end):
        return self.cells.get((start, end), {}).get(("n", label))


class ChartParser:
    """Reusable parser over a fixed rule set.

    prune_ratio follows the per-span threshold convention: after a span's
    items are complete, any real (non-dotted) item whose prior-weighted
    score is below prune_ratio times the span's best is dropped.
    """

    def __init__(self, rules, priors=None, prune_ratio=1e-5, start_labels=None):
        if not 0.0 < prune_ratio <= 1.0:
            raise ValueError("prune_ratio must be in (0, 1]")
        self.rules = list(rules)
        self.grammar = _Grammar(self.rules)
        self.prune_ratio = prune_ratio
        priors = priors or {}
        self._log_priors = {label: _log(p) for label, p in priors.items()
                            if p > 0}
        self._default_log_prior = (min(self._log_priors.values())
                                   if self._log_priors else 0.0)
        if start_labels is None:
            start_labels = sorted(self.grammar.lhs_labels)
        self.start_labels = tuple(sorted(start_labels))

    def _log_prior(self, label):
        return self._log_priors.get(label, self._default_log_prior)

    def chart(self, sentence, extra_rules=()) -> Chart:
        sentence = tuple(sentence)
        extra_lexical = defaultdict(list)
        for rule in extra_rules:
            if len(rule.rhs) != 1 or isinstance(rule.rhs[0], Site):
                raise ValueError("extra rules must be lexical depth-1 rules")
            extra_lexical[("w", rule.rhs[0])].append((rule.lhs, rule))

        n = len(sentence)
        cells = {}
        for width in range(1, n + 1):
            for start in range(0, n - width + 1):
                span = (start, start + width)
                cell = {}
                cells[span] = cell
                if width == 1:
                    word_item = ChartItem(("w", sentence[start]), span)
                    word_item.inside = 0.0
                    cell[word_item.sym] = word_item
                else:
                    self._binary_phase(cells, span, cell)
                self._complete_prefixes(cell, span)
                self._unary_closure(cell, span, extra_lexical)
                self._prune(cell)

        start_items = []
        if n:
            full = cells.get((0, n), {})
            for label in self.start_labels:
                item = full.get(("n", label))
                if item is not None:
                    start_items.append(item)
            start_items.sort(key=lambda it: (-it.inside, it.label))
        return Chart(sentence, cells, start_items,
                     unary_cycle=self.grammar.unary_cycle)

    def _binary_phase(self, cells, span, cell):
        start, end = span
        steps = self.grammar.steps
        first = self.grammar.first_step
        for mid in range(start + 1, end):
            for litem in cells[(start, mid)].values():
                node = litem.sym[1] if litem.sym[0] == "p" else first.get(litem.sym)
                if node is None:
                    continue
                for ritem in cells[(mid, end)].values():
                    if ritem.sym[0] == "p":
                        continue
                    nxt = steps.get((node, ritem.sym))
                    if nxt is None:
                        continue
                    psym = ("p", nxt)
                    item = cell.get(psym)
                    if item is None:
                        item = cell[psym] = ChartItem(psym, span)
                    item.add_edge(None, (litem, ritem), 0.0)

    def _complete_prefixes(self, cell, span):
        # rules whose full rhs was matched as a length >= 2 prefix chain
        for psym, pitem in list(cell.items()):
            if psym[0] != "p":
                continue
            for lhs, rule in self.grammar.completions.get(psym[1], ()):
                self._add_completion(cell, span, lhs, rule, pitem)

    def _unary_closure(self, cell, span, extra_lexical):
        # fixpoint over single-symbol completions (lexical rules, unary
        # rules, chains through both); probability-1 cycles cannot improve
        # scores, so this terminates once every edge exists
        changed = True
        while changed:
            changed = False
            for sym, item in list(cell.items()):
                if sym[0] == "p":
                    continue
                for lhs, rule in self.grammar.unary_completions(sym):
                    changed |= self._add_completion(cell, span, lhs, rule, item)
                for lhs, rule in extra_lexical.get(sym, ()):
                    changed |= self._add_completion(cell, span, lhs, rule, item)

    def _add_completion(self, cell, span, lhs, rule, tail):
        sym = ("n", lhs)
        item = cell.get(sym)
        if item is None:
            item = cell[sym] = ChartItem(sym, span)
        old_inside = item.inside
        added = item.add_edge(rule, (tail,), rule.logprob)
        return added or item.inside > old_inside

    def _prune(self, cell):
        scored = {sym: item.inside + self._log_prior(sym[1])
                  for sym, item in cell.items() if sym[0] == "n"}
        if not scored:
            return
        threshold = max(scored.values()) + math.log(self.prune_ratio)
        for sym, score in scored.items():
            if score < threshold:
                del cell[sym]


def parse_chart(rules, sentence, prune_ratio=1e-5, priors=None,
                start_labels=None, extra_rules=()) -> Chart:
    """Build the pruned chart for one sentence; see ChartParser for reuse."""
    parser = ChartParser(rules, priors=priors, prune_ratio=prune_ratio,
                         start_labels=start_labels)
    return parser.chart(sentence, extra_rules=extra_rules)


@dataclass(frozen=True)
class Derivation:
    fragments: tuple          # leftmost-substitution order
    logprob: float            # sum of fragment log probabilities
    tree: Tree


@dataclass(frozen=True)
class ParseResult:
    tree: Tree
    probability: float        # summed probability of the tree's derivations
    derivations_examined: int
    tree_tallies: tuple       # (bracketed tree, derivation count, probability)


def _get_kth(item, k):
    """k-th best derivation of an item as (logprob, edge index, jvec)."""
    if item.derivs is None:
        item.derivs = []
        item.cand = []
        item.seen = set()
        if item.sym[0] == "w":
            item.derivs.append((0.0, -1, ()))
        else:
            for edge_idx, (rule, tails, weight) in enumerate(item.edges):
                _push_candidate(item, edge_idx, (0,) * len(tails))
    while len(item.derivs) <= k and item.cand:
        neg, edge_idx, jvec = heapq.heappop(item.cand)
        item.derivs.append((-neg, edge_idx, jvec))
        for pos in range(len(jvec)):
            bumped = jvec[:pos] + (jvec[pos] + 1,) + jvec[pos + 1:]
            _push_candidate(item, edge_idx, bumped)
    return item.derivs[k] if k < len(item.derivs) else None


def _push_candidate(item, edge_idx, jvec):
    if (edge_idx, jvec) in item.seen:
        return
    rule, tails, weight = item.edges[edge_idx]
    score = weight
    for tail, j in zip(tails, jvec):
        sub = _get_kth(tail, j)
        if sub is None:
            return
        score += sub[0]
    item.seen.add((edge_idx, jvec))
    heapq.heappush(item.cand, (-score, edge_idx, jvec))


def _flatten(item, k, out):
    """Expand binarized prefix chains back into the rhs item sequence."""
    if item.sym[0] == "p":
        _, edge_idx, jvec = item.derivs[k]
        _, tails, _ = item.edges[edge_idx]
        left, right = tails
        _flatten(left, jvec[0], out)
        out.append((right, jvec[1]))
    else:
        out.append((item, k))


def _realize(item, k, memo):
    """(tree, rule sequence) for the k-th derivation of an 'n' item.

    Rules come out in leftmost-substitution order: the item's own rule,
    then each substitution site's subderivation left to right.
    """
    got = memo.get((id(item), k))
    if got is not None:
        return got
    _, edge_idx, jvec = item.derivs[k]
    rule, tails, _ = item.edges[edge_idx]
    parts = []
    _flatten(tails[0], jvec[0], parts)
    subtrees = []
    rules = [rule]
    sub_sequences = []
    for part_item, part_k in parts:
        if part_item.sym[0] == "n":
            tree, sub_rules = _realize(part_item, part_k, memo)
            subtrees.append(tree)
            sub_sequences.append(sub_rules)
    tree = _fill_sites(rule.fragment.structure, subtrees)
    for sub_rules in sub_sequences:
        rules.extend(sub_rules)
    result = (tree, tuple(rules))
    memo[(id(item), k)] = result
    return result


def _fill_sites(structure, subtrees):
    it = iter(subtrees)

    def build(node):
        children = []
        for child in node.children:
            if isinstance(child, Site):
                children.append(next(it))
            elif isinstance(child, Tree):
                children.append(build(child))
            else:
                children.append(child)
        return Tree(node.label, children)

    tree = build(structure)
    return tree


def nbest_derivations(chart: Chart, n: int = 1000) -> list:
    """Up to n distinct derivations, best first; [] when there is no parse.

    The first derivation is the exact Viterbi best over the unpruned part
    of the forest. Probabilities are recomputed from the fragments, then
    checked against the extraction scores.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not chart.start_items:
        return []
    if chart.unary_cycle is not None:
        raise CyclicGrammarError(
            "unary fragment cycle through %r; the derivation set is infinite"
            % chart.unary_cycle)
    goal = ChartItem(("g", None), (0, len(chart.sentence)))
    for item in chart.start_items:
        goal.add_edge(None, (item,), 0.0)
    memo = {}
    result = []
    for k in range(n):
        deriv = _get_kth(goal, k)
        if deriv is None:
            break
        score, edge_idx, jvec = deriv
        _, tails, _ = goal.edges[edge_idx]
        tree, rules = _realize(tails[0], jvec[0], memo)
        logprob = math.fsum(rule.logprob for rule in rules)
        if not math.isclose(logprob, score, rel_tol=1e-9, abs_tol=1e-9):
            raise AssertionError(
                "derivation probability drift: %r vs %r" % (logprob, score))
        result.append(Derivation(
            fragments=tuple(rule.fragment for rule in rules),
            logprob=logprob, tree=tree))
    return result


def most_probable_parse(derivations) -> ParseResult:
    """Group derivations by resulting tree and pick the best summed tree.

    Ties break on the best single derivation, then on the lexicographically
    smaller bracketed form.
    """
    if not derivations:
        raise ValueError("most_probable_parse needs at least one derivation")
    groups = {}
    for deriv in derivations:
        groups.setdefault(write_tree(deriv.tree), []).append(deriv)

    tallies = []
    for bracketed, group in groups.items():
        logs = [d.logprob for d in group]
        best_single = max(logs)
        total_log = _logsumexp(logs)
        tallies.append((total_log, best_single, bracketed, group))
    tallies.sort(key=lambda t: (-t[0], -t[1], t[2]))

    total_log, _, bracketed, group = tallies[0]
    return ParseResult(
        tree=group[0].tree,
        probability=math.exp(total_log),
        derivations_examined=len(derivations),
        tree_tallies=tuple((brk, len(grp), math.exp(tlog))
                           for tlog, _, brk, grp in tallies))


def _logsumexp(logs):
    # compensated summation in linear space, scaled by the max term
    m = max(logs)
    if m == -math.inf:
        return m
    total = 0.0
    comp = 0.0
    for lp in logs:
        y = math.exp(lp - m) - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return m + math.log(total)


class SentenceParser:
    """Model-level convenience: rules, priors, OOV handling, MPP selection."""

    def __init__(self, model: FragmentModel, n_best: int = 1000,
                 prune_ratio: float = 1e-5):
        self.model = model
        self.n_best = n_best
        self.rules = to_rules(model)
        self.parser = ChartParser(self.rules, priors=model.priors,
                                  prune_ratio=prune_ratio,
                                  start_labels=sorted(model.start_labels))
        self.vocabulary = model.lexical_words()
        self._next_rule_index = len(self.rules)

    def oov_rules(self, words) -> list:
        """Depth-1 rules for out-of-vocabulary words via the unknown-word model."""
        rules = []
        unknown = self.model.unknown_words
        if unknown is None:
            return rules
        for word in sorted(set(words) - self.vocabulary):
            distribution = unknown.tag_distribution(word)
            for tag, share in sorted(distribution.items()):
                total = self.model.root_totals.get(tag)
                if total is None:
                    continue
                if self.model.smoothed:
                    mass = self.model.reserved_mass.get(tag, Fraction(0))
                    probability = mass * share
                else:
                    probability = share / (Fraction(total) + 1)
                if probability <= 0:
                    continue
                fragment = Fragment(Tree(tag, (word,)))
                rules.append(IndexedRule(
                    lhs=tag, rhs=fragment.frontier, fragment=fragment,
                    probability=probability, logprob=_log(probability),
                    index=self._next_rule_index + len(rules)))
        return rules

    def derivations(self, words) -> list:
        chart = self.parser.chart(words, extra_rules=self.oov_rules(words))
        return nbest_derivations(chart, self.n_best)

    def parse(self, words) -> ParseResult | None:
        derivations = self.derivations(words)
        if not derivations:
            return None
        return most_probable_parse(derivations)
