import itertools
import random

import pytest

from conftest import ATTR_POOL, random_tree, satisfying_set
from dhabe.groups import Scalar, default_context, random_scalar
from dhabe.policy import (
    AttributeSet,
    Gate,
    Leaf,
    PolicyError,
    PolicyNotSatisfied,
    PolicyTree,
    assign_shares,
    evaluate,
    lagrange_coeff,
    parse_policy,
    print_policy,
    reconstruct_secret,
    satisfying_plan,
)

Q = default_context().q


# ---------------------------------------------------------------------------
# Independent oracles
# ---------------------------------------------------------------------------


def oracle_eval(node, names):
    """Second, minimal evaluator used as the truth-table oracle."""
    if isinstance(node, Leaf):
        return node.attribute in names
    return len([c for c in node.children if oracle_eval(c, names)]) >= node.threshold


def interpolate_at_zero(points):
    """Plain-integer Lagrange interpolation at x=0 over Z_q."""
    total = 0
    xs = [x for x, _ in points]
    for x_i, y_i in points:
        num, den = 1, 1
        for x_j in xs:
            if x_j == x_i:
                continue
            num = (num * -x_j) % Q
            den = (den * (x_i - x_j)) % Q
        total = (total + y_i * num * pow(den, -1, Q)) % Q
    return total


# ---------------------------------------------------------------------------
# Grammar
# ---------------------------------------------------------------------------


def test_parse_single_attribute():
    tree = parse_policy("doctor")
    assert tree.root == Leaf("doctor", 0)


def test_parse_and_or_precedence():
    tree = parse_policy("(doctor and cardiology) or admin")
    root = tree.root
    assert isinstance(root, Gate) and root.threshold == 1
    inner, admin = root.children
    assert inner == Gate(2, (Leaf("doctor", 0), Leaf("cardiology", 1)))
    assert admin == Leaf("admin", 2)
    # same tree without the explicit parens: and binds tighter
    assert parse_policy("doctor and cardiology or admin") == tree


def test_parse_threshold_gate():
    tree = parse_policy("2 of (a, b, c)")
    assert tree.root == Gate(2, (Leaf("a", 0), Leaf("b", 1), Leaf("c", 2)))


def test_parse_threshold_out_of_range():
    with pytest.raises(PolicyError, match="threshold"):
        parse_policy("3 of (a, b)")
    with pytest.raises(PolicyError):
        parse_policy("0 of (a, b)")


def test_parse_chains_flatten():
    tree = parse_policy("a and b and c")
    assert tree.root == Gate(3, (Leaf("a", 0), Leaf("b", 1), Leaf("c", 2)))
    tree = parse_policy("a or b or c")
    assert tree.root.threshold == 1 and len(tree.root.children) == 3


def test_parse_parenthesized_not_flattened():
    tree = parse_policy("(a and b) and c")
    assert tree.root == Gate(
        2, (Gate(2, (Leaf("a", 0), Leaf("b", 1))), Leaf("c", 2))
    )


def test_parse_keywords_case_insensitive_attrs_not():
    tree = parse_policy("Doctor AND Cardiology")
    assert tree.root == Gate(2, (Leaf("Doctor", 0), Leaf("Cardiology", 1)))
    assert parse_policy("doctor") != parse_policy("Doctor")


def test_parse_number_as_attribute():
    # a bare integer not followed by "of" is an attribute name
    tree = parse_policy("2 and a")
    assert tree.root == Gate(2, (Leaf("2", 0), Leaf("a", 1)))


def test_parse_syntax_errors_carry_position():
    for text in ("", "and", "a and", "a or (b", "a %% b", "1 of (a)", "(a,b)"):
        with pytest.raises(PolicyError):
            parse_policy(text)


def test_duplicate_attribute_leaves_allowed():
    tree = parse_policy("a or (a and b)")
    assert [leaf.attribute for leaf in tree.leaves()] == ["a", "a", "b"]
    assert [leaf.leaf_index for leaf in tree.leaves()] == [0, 1, 2]


def test_attribute_set_rejects_keywords_and_bad_names():
    with pytest.raises(PolicyError):
        AttributeSet({"and"})
    with pytest.raises(PolicyError):
        AttributeSet({"sp ace"})


# ---------------------------------------------------------------------------
# Printer round trip
# ---------------------------------------------------------------------------


def test_print_policy_examples():
    assert print_policy(parse_policy("doctor")) == "doctor"
    assert (
        print_policy(parse_policy("(doctor AND cardiology) OR admin"))
        == "doctor and cardiology or admin"
    )
    assert print_policy(parse_policy("a and (b or c)")) == "a and (b or c)"
    assert print_policy(parse_policy("2 of (a, b or c, d)")) == "2 of (a, b or c, d)"
    assert print_policy(parse_policy("(a and b) and c")) == "(a and b) and c"
    assert print_policy(parse_policy("a or (b or c)")) == "a or (b or c)"


def test_parse_print_round_trip_random():
    rng = random.Random(201)
    for _ in range(200):
        tree = random_tree(rng)
        assert parse_policy(print_policy(tree)) == tree


# ---------------------------------------------------------------------------
# Evaluation vs exhaustive oracle
# ---------------------------------------------------------------------------


def test_evaluate_examples():
    tree = parse_policy("a and b")
    assert evaluate(tree, AttributeSet({"a", "b"}))
    assert not evaluate(tree, AttributeSet({"a"}))
    tree = parse_policy("2 of (a, b, c)")
    assert evaluate(tree, AttributeSet({"a", "c"}))
    assert not evaluate(tree, AttributeSet({"c"}))


def test_evaluate_matches_truth_table_oracle():
    rng = random.Random(202)
    pool = ATTR_POOL[:6]
    for _ in range(60):
        tree = random_tree(rng, pool=pool)
        for r in range(len(pool) + 1):
            for subset in itertools.combinations(pool, r):
                names = set(subset)
                omega = AttributeSet(names) if names else AttributeSet(())
                assert evaluate(tree, omega) == oracle_eval(tree.root, names)


# ---------------------------------------------------------------------------
# Share assignment and Lagrange coefficients
# ---------------------------------------------------------------------------


def test_single_leaf_share_is_secret():
    rng = random.Random(203)
    s = random_scalar(rng)
    plan = assign_shares(parse_policy("a"), s, rng)
    assert plan.leaf_shares[0] == s


def test_or_gate_shares_equal_secret():
    rng = random.Random(204)
    s = random_scalar(rng)
    plan = assign_shares(parse_policy("1 of (a, b)"), s, rng)
    assert plan.leaf_shares[0] == s
    assert plan.leaf_shares[1] == s
    plan = assign_shares(parse_policy("a or b"), s, rng)
    assert plan.leaf_shares[0] == plan.leaf_shares[1] == s


def test_and_gate_shares_interpolate_to_secret():
    rng = random.Random(205)
    s = random_scalar(rng)
    plan = assign_shares(parse_policy("a and b"), s, rng)
    got = interpolate_at_zero(
        [(1, int(plan.leaf_shares[0])), (2, int(plan.leaf_shares[1]))]
    )
    assert got == int(s)


def test_lagrange_examples():
    assert lagrange_coeff(1, {1}) == Scalar(1)
    assert lagrange_coeff(1, {1, 2}) == Scalar(2)
    assert lagrange_coeff(2, {1, 2}) == Scalar(Q - 1)
    with pytest.raises(ValueError):
        lagrange_coeff(3, {1, 2})


def test_lagrange_against_interpolation_oracle():
    # the coefficients must agree with directly interpolating the line
    # through two random points
    rng = random.Random(206)
    y1, y2 = rng.randrange(Q), rng.randrange(Q)
    direct = interpolate_at_zero([(1, y1), (2, y2)])
    via_coeffs = (
        int(lagrange_coeff(1, {1, 2})) * y1 + int(lagrange_coeff(2, {1, 2})) * y2
    ) % Q
    assert direct == via_coeffs


def test_lagrange_reconstructs_random_polynomials():
    rng = random.Random(207)
    for _ in range(100):
        k = rng.randint(1, 6)
        coeffs = [rng.randrange(Q) for _ in range(k)]

        def poly(x):
            return sum(c * pow(x, i, Q) for i, c in enumerate(coeffs)) % Q

        points = rng.sample(range(1, 12), k)
        total = sum(
            int(lagrange_coeff(i, points)) * poly(i) for i in points
        ) % Q
        assert total == coeffs[0]


# ---------------------------------------------------------------------------
# Satisfying plans
# ---------------------------------------------------------------------------


def test_plan_smallest_index_selection():
    plan = satisfying_plan(parse_policy("1 of (a, b)"), AttributeSet({"a", "b"}))
    leaves = plan.selected_leaves()
    assert len(leaves) == 1 and leaves[0].attribute == "a"


def test_plan_coefficients_match_spec_example():
    plan = satisfying_plan(parse_policy("2 of (a, b, c)"), AttributeSet({"b", "c"}))
    gate = plan.root
    assert [pos for pos, _, _ in gate.selections] == [2, 3]
    coeffs = {pos: coeff for pos, coeff, _ in gate.selections}
    assert coeffs[2] == Scalar(3)
    assert coeffs[3] == Scalar(-2)


def test_plan_rejects_unsatisfied():
    with pytest.raises(PolicyNotSatisfied):
        satisfying_plan(parse_policy("a and b"), AttributeSet({"a"}))


def test_scalar_reconstruction_over_random_trees():
    # pure-scalar secret sharing round trip, no pairings anywhere
    rng = random.Random(208)
    for _ in range(100):
        tree = random_tree(rng)
        omega = satisfying_set(rng, tree)
        s = random_scalar(rng)
        shares = assign_shares(tree, s, rng)
        plan = satisfying_plan(tree, omega)
        assert reconstruct_secret(plan, shares) == s
        # flattened per-leaf coefficients reconstruct the same way
        flat = plan.leaf_coefficients()
        total = Scalar(0)
        for leaf in plan.selected_leaves():
            total = total + flat[leaf.leaf_index] * shares.leaf_shares[leaf.leaf_index]
        assert total == s


def test_assign_shares_deterministic_under_seed():
    tree = parse_policy("2 of (a, b and c, d or e)")
    s = Scalar(123456789)
    a = assign_shares(tree, s, random.Random(42))
    b = assign_shares(tree, s, random.Random(42))
    assert a.leaf_shares == b.leaf_shares
    c = assign_shares(tree, s, random.Random(43))
    assert a.leaf_shares != c.leaf_shares


def test_plan_selected_gates_have_exactly_k_children():
    rng = random.Random(209)
    for _ in range(50):
        tree = random_tree(rng)
        omega = satisfying_set(rng, tree)
        plan = satisfying_plan(tree, omega)

        def walk(plan_node, tree_node):
            if isinstance(plan_node, tuple):
                return
            if hasattr(plan_node, "selections"):
                assert len(plan_node.selections) == tree_node.threshold
                for pos, _, child in plan_node.selections:
                    walk(child, tree_node.children[pos - 1])
            else:
                assert plan_node.attribute in omega

        walk(plan.root, tree.root)
