import random

import pytest

from dhabe.policy import AttributeSet
from dhabe.trust import (
    AttributeMap,
    Credential,
    CredentialError,
    CredentialSet,
    Intersection,
    LinkedRole,
    Member,
    Role,
    RoleRef,
    authorized_attributes,
    fixpoint_members,
    parse_attribute_map,
    parse_credentials,
    print_attribute_map,
    print_credentials,
    role_members,
)

# ---------------------------------------------------------------------------
# Naive-closure oracle: enumerate derivable (role, principal) facts by
# rescanning every credential against every known principal until nothing
# new appears.  Deliberately dumber than the production fixpoint.
# ---------------------------------------------------------------------------


def _principals_of(creds):
    out = set()
    for cred in creds:
        out.add(cred.head.principal)
        stack = [cred.body]
        while stack:
            body = stack.pop()
            if isinstance(body, Member):
                out.add(body.principal)
            elif isinstance(body, RoleRef):
                out.add(body.role.principal)
            elif isinstance(body, LinkedRole):
                out.add(body.role.principal)
            elif isinstance(body, Intersection):
                stack.extend(body.bodies)
    return out


def oracle_members(creds, role):
    universe = _principals_of(creds)
    facts = set()  # (Role, principal)

    def derivable(body, p):
        if isinstance(body, Member):
            return body.principal == p
        if isinstance(body, RoleRef):
            return (body.role, p) in facts
        if isinstance(body, LinkedRole):
            return any(
                (body.role, b) in facts and (Role(b, body.name), p) in facts
                for b in universe
            )
        return all(derivable(b, p) for b in body.bodies)

    while True:
        new = {
            (cred.head, p)
            for cred in creds
            for p in universe
            if derivable(cred.body, p)
        }
        if new <= facts:
            break
        facts |= new
    return {p for r, p in facts if r == role}


def random_credentials(rng, max_creds=8, max_principals=5):
    principals = [f"P{i}" for i in range(max_principals)]
    role_names = ["r0", "r1", "r2"]
    creds = []
    for _ in range(rng.randint(0, max_creds)):
        head = Role(rng.choice(principals), rng.choice(role_names))

        def atom():
            kind = rng.randrange(3)
            if kind == 0:
                return Member(rng.choice(principals))
            if kind == 1:
                return RoleRef(Role(rng.choice(principals), rng.choice(role_names)))
            return LinkedRole(
                Role(rng.choice(principals), rng.choice(role_names)),
                rng.choice(role_names),
            )

        body = (
            Intersection((atom(), atom()))
            if rng.random() < 0.2
            else atom()
        )
        creds.append(Credential(head, body))
    return CredentialSet(tuple(creds))


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def test_parse_member_credential():
    creds = parse_credentials("Hosp.doctor <- Alice")
    assert creds.credentials == (
        Credential(Role("Hosp", "doctor"), Member("Alice")),
    )


def test_parse_role_reference():
    creds = parse_credentials("VO.doctor <- Hosp.doctor")
    assert creds.credentials[0].body == RoleRef(Role("Hosp", "doctor"))


def test_parse_linked_role():
    creds = parse_credentials("VO.team <- VO.partner.doctor")
    assert creds.credentials[0].body == LinkedRole(Role("VO", "partner"), "doctor")


def test_parse_intersection():
    creds = parse_credentials("VO.lead <- VO.doctor & Hosp.staff")
    body = creds.credentials[0].body
    assert isinstance(body, Intersection) and len(body.bodies) == 2


def test_parse_comments_and_semicolons():
    creds = parse_credentials(
        "# staff list\nHosp.doctor <- Alice; Hosp.doctor <- Bob # two members"
    )
    assert len(creds) == 2


def test_parse_errors_have_line_numbers():
    with pytest.raises(CredentialError, match="line 2"):
        parse_credentials("Hosp.doctor <- Alice\nnonsense line")
    with pytest.raises(CredentialError):
        parse_credentials("lower.role <- Alice")  # principal must be capitalized
    with pytest.raises(CredentialError):
        parse_credentials("Hosp.Doctor <- Alice")  # role names are lowercase
    with pytest.raises(CredentialError):
        parse_credentials("Hosp.r <- A.b.c.d")


def test_credentials_print_parse_round_trip():
    rng = random.Random(301)
    for _ in range(50):
        creds = random_credentials(rng)
        assert parse_credentials(print_credentials(creds)) == creds


def test_parse_attribute_map():
    amap = parse_attribute_map("VO.doctor -> doctor, staff @ root")
    assert amap.entries == (
        (Role("VO", "doctor"), ("doctor", "staff"), "root"),
    )
    assert parse_attribute_map(print_attribute_map(amap)) == amap


def test_parse_attribute_map_errors():
    for text in ("VO.doctor doctor @ root", "VO.doctor -> @ root", "VO.doctor -> a"):
        with pytest.raises(CredentialError):
            parse_attribute_map(text)


# ---------------------------------------------------------------------------
# Fixpoint semantics
# ---------------------------------------------------------------------------


def test_empty_credentials_empty_membership():
    creds = CredentialSet(())
    assert role_members(creds, Role("VO", "doctor")) == set()


def test_role_reference_chain():
    creds = parse_credentials("Hosp.doctor <- Alice; VO.doctor <- Hosp.doctor")
    role = Role("VO", "doctor")
    assert role_members(creds, role) == {"Alice"}
    assert oracle_members(creds, role) == {"Alice"}


def test_linked_role_example():
    creds = parse_credentials(
        "VO.team <- VO.partner.doctor; VO.partner <- Hosp; Hosp.doctor <- Alice"
    )
    role = Role("VO", "team")
    assert role_members(creds, role) == {"Alice"}
    assert oracle_members(creds, role) == {"Alice"}


def test_intersection_semantics():
    creds = parse_credentials(
        "A.r <- Alice; A.r <- Bob; B.s <- Alice; C.t <- A.r & B.s"
    )
    assert role_members(creds, Role("C", "t")) == {"Alice"}


def test_fixpoint_matches_oracle_on_random_sets():
    rng = random.Random(302)
    roles = [Role(f"P{i}", r) for i in range(5) for r in ("r0", "r1", "r2")]
    for _ in range(200):
        creds = random_credentials(rng)
        role = rng.choice(roles)
        assert role_members(creds, role) == oracle_members(creds, role)


def test_monotonicity_under_extension():
    rng = random.Random(303)
    roles = [Role(f"P{i}", r) for i in range(5) for r in ("r0", "r1", "r2")]
    for _ in range(100):
        creds = random_credentials(rng)
        extra = random_credentials(rng, max_creds=2)
        extended = CredentialSet(creds.credentials + extra.credentials)
        for role in rng.sample(roles, 5):
            assert role_members(creds, role) <= role_members(extended, role)


def test_termination_bound():
    rng = random.Random(304)
    for _ in range(100):
        creds = random_credentials(rng)
        members, passes = fixpoint_members(creds)
        principals = _principals_of(creds)
        n_roles = len({(c.head.principal, c.head.name) for c in creds})
        assert passes <= max(1, len(principals)) * max(1, n_roles) + 1


# ---------------------------------------------------------------------------
# Authorized attributes
# ---------------------------------------------------------------------------

CREDS = parse_credentials(
    "Hosp.doctor <- Alice; VO.doctor <- Hosp.doctor"
)
AMAP = parse_attribute_map("VO.doctor -> doctor, staff @ root")


def test_unknown_principal_gets_nothing():
    got = authorized_attributes(CREDS, AMAP, "Mallory", ["root", "hospA"])
    assert got == AttributeSet(())


def test_scope_in_path_grants():
    got = authorized_attributes(CREDS, AMAP, "Alice", ["root", "hospA"])
    assert got == AttributeSet({"doctor", "staff"})


def test_scope_missing_from_path_denies():
    got = authorized_attributes(CREDS, AMAP, "Alice", ["hospB"])
    assert got == AttributeSet(())
