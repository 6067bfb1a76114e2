"""Decryption-policy language: threshold access trees over attribute sets.

A policy is a tree of threshold gates over attribute leaves.  ``and`` is an
n-of-n gate, ``or`` a 1-of-n gate, and ``k of (p1, ..., pn)`` a general
threshold gate.  Secrets are shared down the tree with one polynomial per
gate (children are evaluation points 1..n, the constant term is the node's
share) and recombined with Lagrange coefficients at x = 0.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from typing import Union

from .groups import Scalar

ATTRIBUTE_RE = re.compile(r"[A-Za-z0-9_.:-]+\Z")
KEYWORDS = {"and", "or", "of"}


class PolicyError(ValueError):
    """Syntax or structural error in a policy."""


class PolicyNotSatisfied(Exception):
    """The attribute set does not satisfy the policy tree."""


def valid_attribute(name: str) -> bool:
    return bool(ATTRIBUTE_RE.match(name)) and name.lower() not in KEYWORDS


class AttributeSet:
    """An immutable set of attribute strings (case-sensitive)."""

    __slots__ = ("attributes",)

    def __init__(self, attributes):
        attrs = frozenset(attributes)
        for a in attrs:
            if not valid_attribute(a):
                raise PolicyError(f"invalid attribute name: {a!r}")
        object.__setattr__(self, "attributes", attrs)

    def __contains__(self, attr):
        return attr in self.attributes

    def __iter__(self):
        return iter(sorted(self.attributes))

    def __len__(self):
        return len(self.attributes)

    def __eq__(self, other):
        return isinstance(other, AttributeSet) and self.attributes == other.attributes

    def __hash__(self):
        return hash(self.attributes)

    def union(self, other: "AttributeSet") -> "AttributeSet":
        return AttributeSet(self.attributes | other.attributes)

    def __repr__(self):
        return f"AttributeSet({sorted(self.attributes)})"


@dataclass(frozen=True)
class Leaf:
    attribute: str
    leaf_index: int


@dataclass(frozen=True)
class Gate:
    threshold: int
    children: tuple

    def __post_init__(self):
        if len(self.children) < 1:
            raise PolicyError("gate must have at least one child")
        if not 1 <= self.threshold <= len(self.children):
            raise PolicyError(
                f"threshold {self.threshold} out of range for "
                f"{len(self.children)} children"
            )


PolicyNode = Union[Leaf, Gate]


@dataclass(frozen=True)
class PolicyTree:
    root: PolicyNode

    def leaves(self) -> list[Leaf]:
        out = []

        def walk(node):
            if isinstance(node, Leaf):
                out.append(node)
            else:
                for ch in node.children:
                    walk(ch)

        walk(self.root)
        return out

    def attributes(self) -> set[str]:
        return {leaf.attribute for leaf in self.leaves()}

    def __post_init__(self):
        indices = [leaf.leaf_index for leaf in self.leaves()]
        if indices != list(range(len(indices))):
            raise PolicyError("leaf indices must be 0..n-1 in depth-first order")


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"\s*(?:(\()|(\))|(,)|([A-Za-z0-9_.:-]+))")


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            raise PolicyError(
                f"syntax error at position {len(text) - len(stripped)}: "
                f"unexpected character {stripped[0]!r}"
            )
        if m.group(1):
            tokens.append(("(", m.start(1)))
        elif m.group(2):
            tokens.append((")", m.start(2)))
        elif m.group(3):
            tokens.append((",", m.start(3)))
        else:
            tokens.append((m.group(4), m.start(4)))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i][0] if self.i < len(self.tokens) else None

    def peek2(self):
        return self.tokens[self.i + 1][0] if self.i + 1 < len(self.tokens) else None

    def pos(self):
        if self.i < len(self.tokens):
            return self.tokens[self.i][1]
        return len(self.text)

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok[0]

    def expect(self, tok):
        if self.peek() != tok:
            raise PolicyError(
                f"syntax error at position {self.pos()}: expected {tok!r}"
            )
        return self.next()

    def fail(self, why):
        raise PolicyError(f"syntax error at position {self.pos()}: {why}")

    def parse(self):
        node = self.or_expr()
        if self.peek() is not None:
            self.fail(f"unexpected token {self.peek()!r}")
        return node

    def or_expr(self):
        children = [self.and_expr()]
        while self.peek() is not None and self.peek().lower() == "or":
            self.next()
            children.append(self.and_expr())
        if len(children) == 1:
            return children[0]
        return ("gate", 1, children)

    def and_expr(self):
        children = [self.primary()]
        while self.peek() is not None and self.peek().lower() == "and":
            self.next()
            children.append(self.primary())
        if len(children) == 1:
            return children[0]
        return ("gate", len(children), children)

    def primary(self):
        tok = self.peek()
        if tok is None:
            self.fail("unexpected end of policy")
        if tok == "(":
            self.next()
            node = self.or_expr()
            self.expect(")")
            return node
        if tok.isdigit() and self.peek2() is not None and self.peek2().lower() == "of":
            k = int(self.next())
            self.next()  # "of"
            self.expect("(")
            children = [self.or_expr()]
            while self.peek() == ",":
                self.next()
                children.append(self.or_expr())
            self.expect(")")
            if len(children) < 2:
                self.fail("threshold gate needs at least two alternatives")
            if not 1 <= k <= len(children):
                raise PolicyError(
                    f"threshold {k} out of range for {len(children)} children"
                )
            return ("gate", k, children)
        if tok.lower() in KEYWORDS:
            self.fail(f"unexpected keyword {tok!r}")
        if not ATTRIBUTE_RE.match(tok):
            self.fail(f"invalid attribute {tok!r}")
        self.next()
        return ("leaf", tok)


def parse_policy(text: str) -> PolicyTree:
    """Parse policy text into a tree; ``and`` binds tighter than ``or``."""
    if not text or not text.strip():
        raise PolicyError("empty policy")
    raw = _Parser(text).parse()
    counter = [0]

    def build(node):
        if node[0] == "leaf":
            leaf = Leaf(node[1], counter[0])
            counter[0] += 1
            return leaf
        _, k, children = node
        return Gate(k, tuple(build(c) for c in children))

    return PolicyTree(build(raw))


def print_policy(tree: PolicyTree) -> str:
    """Canonical printer: lowercase keywords, minimal parentheses.

    Inverse of :func:`parse_policy` on parsed trees.
    """

    AND, OR, ATOM = 0, 1, 2

    def render(node):
        if isinstance(node, Leaf):
            return node.attribute, ATOM
        if len(node.children) == 1:
            return render(node.children[0])
        n = len(node.children)
        if node.threshold == 1:
            parts = []
            for ch in node.children:
                s, kind = render(ch)
                parts.append(f"({s})" if kind == OR else s)
            return " or ".join(parts), OR
        if node.threshold == n:
            parts = []
            for ch in node.children:
                s, kind = render(ch)
                parts.append(f"({s})" if kind in (OR, AND) else s)
            return " and ".join(parts), AND
        parts = [render(ch)[0] for ch in node.children]
        return f"{node.threshold} of ({', '.join(parts)})", ATOM

    return render(tree.root)[0]


# ---------------------------------------------------------------------------
# Evaluation, sharing, reconstruction planning
# ---------------------------------------------------------------------------


def evaluate(tree: PolicyTree, omega: AttributeSet) -> bool:
    """Return whether the attribute set satisfies the policy."""

    def sat(node):
        if isinstance(node, Leaf):
            return node.attribute in omega
        return sum(1 for ch in node.children if sat(ch)) >= node.threshold

    return sat(tree.root)


@dataclass(frozen=True)
class SharePlan:
    leaf_shares: dict  # leaf_index -> Scalar
    secret: Scalar


def assign_shares(tree: PolicyTree, s: Scalar, rng: random.Random) -> SharePlan:
    """Share `s` down the tree: each gate gets a random polynomial of degree
    threshold-1 with constant term equal to the node's inherited value, and
    child i receives the evaluation at x = i (1-based position)."""
    from .groups import random_scalar

    shares = {}

    def descend(node, value):
        if isinstance(node, Leaf):
            shares[node.leaf_index] = value
            return
        coeffs = [value] + [
            random_scalar(rng, allow_zero=True) for _ in range(node.threshold - 1)
        ]
        for pos, child in enumerate(node.children, start=1):
            x = Scalar(pos)
            acc = Scalar(0)
            xp = Scalar(1)
            for c in coeffs:
                acc = acc + c * xp
                xp = xp * x
            descend(child, acc)

    descend(tree.root, s)
    return SharePlan(leaf_shares=shares, secret=s)


def lagrange_coeff(i: int, S) -> Scalar:
    """Lagrange basis coefficient at x=0 for point i over index set S."""
    S = set(S)
    if i not in S:
        raise ValueError(f"index {i} not in interpolation set {sorted(S)}")
    num = Scalar(1)
    den = Scalar(1)
    for j in S:
        if j == i:
            continue
        num = num * Scalar(-j)
        den = den * Scalar(i - j)
    return num * den.inverse()


@dataclass(frozen=True)
class PlanLeaf:
    leaf_index: int
    attribute: str


@dataclass(frozen=True)
class PlanGate:
    # (1-based child position, Lagrange coefficient, child plan) per selection
    selections: tuple


@dataclass(frozen=True)
class SatisfyingPlan:
    root: Union[PlanLeaf, PlanGate]

    def selected_leaves(self) -> list[PlanLeaf]:
        out = []

        def walk(node):
            if isinstance(node, PlanLeaf):
                out.append(node)
            else:
                for _, _, child in node.selections:
                    walk(child)

        walk(self.root)
        return out

    def leaf_coefficients(self) -> dict:
        """Flatten the per-gate coefficients into one multiplier per selected
        leaf (the product of Lagrange coefficients along its path)."""
        out = {}

        def walk(node, acc):
            if isinstance(node, PlanLeaf):
                out[node.leaf_index] = acc
            else:
                for _, coeff, child in node.selections:
                    walk(child, acc * coeff)

        walk(self.root, Scalar(1))
        return out


def satisfying_plan(tree: PolicyTree, omega: AttributeSet) -> SatisfyingPlan:
    """Plan reconstruction for a satisfying set: at every satisfied gate pick
    the threshold-many satisfied children with smallest positions."""

    def build(node):
        if isinstance(node, Leaf):
            if node.attribute in omega:
                return PlanLeaf(node.leaf_index, node.attribute)
            return None
        sub = [(pos, build(ch)) for pos, ch in enumerate(node.children, start=1)]
        good = [(pos, plan) for pos, plan in sub if plan is not None]
        if len(good) < node.threshold:
            return None
        chosen = good[: node.threshold]
        S = [pos for pos, _ in chosen]
        return PlanGate(
            tuple((pos, lagrange_coeff(pos, S), plan) for pos, plan in chosen)
        )

    plan = build(tree.root)
    if plan is None:
        raise PolicyNotSatisfied("attribute set does not satisfy the policy")
    return SatisfyingPlan(plan)


def reconstruct_secret(plan: SatisfyingPlan, shares: SharePlan) -> Scalar:
    """Scalar-only recombination of shares along a satisfying plan."""

    def value(node):
        if isinstance(node, PlanLeaf):
            return shares.leaf_shares[node.leaf_index]
        acc = Scalar(0)
        for _, coeff, child in node.selections:
            acc = acc + coeff * value(child)
        return acc

    return value(plan.root)
