"""Head-percolation rule tables for finding the head child of a node.

Rule file format, one rule per line::

    PARENT direction child1 child2 ...

``direction`` is ``left`` (scan children left to right) or ``right``
(right to left). Child labels are tried in priority order: the first
priority label found anywhere in the scan wins; if none occurs, the first
child in scan direction is the head. A line ``default <direction>``
sets the rule for unlisted parents.
"""


class HeadRuleError(ValueError):
    pass


class HeadRuleTable:
    """Maps a parent label to (direction, priority sequence)."""

    def __init__(self, rules=None, default=("left", ())):
        self.rules = dict(rules or {})
        self.default = default

    def head_index(self, parent_label, child_labels) -> int:
        """Index of the head child; defined for any non-empty child list."""
        if not child_labels:
            raise HeadRuleError("no children under %r" % parent_label)
        direction, priorities = self.rules.get(parent_label, self.default)
        order = (range(len(child_labels)) if direction == "left"
                 else range(len(child_labels) - 1, -1, -1))
        for wanted in priorities:
            for i in order:
                if child_labels[i] == wanted:
                    return i
        return 0 if direction == "left" else len(child_labels) - 1

    @classmethod
    def from_text(cls, text):
        rules = {}
        default = ("left", ())
        for lineno, line in enumerate(text.split("\n"), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split()
            parent, direction, priorities = fields[0], fields[1] if len(fields) > 1 else "", tuple(fields[2:])
            if direction not in ("left", "right"):
                raise HeadRuleError(
                    "line %d: direction must be 'left' or 'right', got %r"
                    % (lineno, direction))
            if parent == "default":
                default = (direction, priorities)
            else:
                rules[parent] = (direction, priorities)
        return cls(rules, default)

    @classmethod
    def from_file(cls, path):
        with open(path, encoding="utf8") as handle:
            return cls.from_text(handle.read())


# Collins-style table for Penn Treebank labels. The NP rule is the common
# single-pass simplification (rightmost nominal wins).
DEFAULT_HEAD_RULES_TEXT = """\
default left
ADJP left NNS QP NN $ ADVP JJ VBN VBG ADJP JJR NP JJS DT FW RBR RBS SBAR RB
ADVP right RB RBR RBS FW ADVP TO CD JJR JJ IN NP JJS NN
CONJP right CC RB IN
FRAG right
INTJ left
LST right LS :
NAC left NN NNS NNP NNPS NP NAC EX $ CD QP PRP VBG JJ JJS JJR ADJP FW
NP right POS NN NNP NNPS NNS NX JJR CD JJ JJS RB QP NP
NX right POS NN NNP NNPS NNS NX JJR CD JJ JJS RB QP NP
PP right IN TO VBG VBN RP FW
PRN left
PRT right RP
QP left $ IN NNS NN JJ RB DT CD NCD QP JJR JJS
RRC right VP NP ADVP ADJP PP
S left TO IN VP S SBAR ADJP UCP NP
SBAR left WHNP WHPP WHADVP WHADJP IN DT S SQ SINV SBAR FRAG
SBARQ left SQ S SINV SBARQ FRAG
SINV left VBZ VBD VBP VB MD VP S SINV ADJP NP
SQ left VBZ VBD VBP VB MD VP SQ
UCP right
VP left TO VBD VBN MD VBZ VB VBG VBP VP ADJP NN NNS NP
WHADJP left CC WRB JJ ADJP
WHADVP right CC WRB
WHNP left WDT WP WP$ WHADJP WHPP WHNP
WHPP right IN TO FW
X right
"""


def default_head_rules() -> HeadRuleTable:
    return HeadRuleTable.from_text(DEFAULT_HEAD_RULES_TEXT)
