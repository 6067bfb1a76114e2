import random

import pytest

from dhabe import scheme
from dhabe.policy import AttributeSet, Gate, Leaf, PolicyTree, evaluate

ATTR_POOL = [
    "doctor", "nurse", "cardiology", "oncology", "admin",
    "staff", "labtech", "billing",
]


@pytest.fixture(scope="session")
def vo():
    """One VO shared by the whole suite: (params, master key, root DA)."""
    return scheme.setup(rng=random.Random(0xD4BE))


def random_tree(rng, max_depth=4, max_leaves=12, pool=ATTR_POOL):
    """Random policy tree with gates of 2..4 children and random thresholds.

    Leaf indices are assigned in depth-first order, matching the parser.
    """
    n_leaves = rng.randint(1, max_leaves)
    counter = [0]

    def gen(depth, budget):
        if depth == 0 or budget == 1 or (depth < max_depth and rng.random() < 0.3):
            leaf = Leaf(rng.choice(pool), counter[0])
            counter[0] += 1
            return leaf
        n = rng.randint(2, min(4, budget))
        if budget > n:
            splits = sorted(rng.sample(range(1, budget), n - 1))
            bounds = [0] + splits + [budget]
            parts = [bounds[i + 1] - bounds[i] for i in range(n)]
        else:
            parts = [1] * n
        children = tuple(gen(depth - 1, part) for part in parts)
        return Gate(rng.randint(1, n), children)

    return PolicyTree(gen(max_depth, n_leaves))


def satisfying_set(rng, tree):
    """A random attribute set satisfying the tree (the full attribute set
    always does, so rejection sampling terminates)."""
    attrs = sorted(tree.attributes())
    for _ in range(50):
        omega = {a for a in attrs if rng.random() < 0.75}
        if omega and evaluate(tree, AttributeSet(omega)):
            return AttributeSet(omega)
    return AttributeSet(attrs)


def non_satisfying_set(rng, tree):
    """A random non-empty attribute set that fails the tree; falls back to a
    foreign attribute, which can never satisfy it."""
    attrs = sorted(tree.attributes())
    for _ in range(50):
        omega = {a for a in attrs if rng.random() < 0.25}
        if omega and not evaluate(tree, AttributeSet(omega)):
            return AttributeSet(omega)
    return AttributeSet({"unrelated-attr"})
