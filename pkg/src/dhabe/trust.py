"""Role-based trust management gating attribute-key issuance.

Credentials follow the minimal role calculus with four forms::

    P.r <- Q            # Q is a member of P's role r
    P.r <- Q.s          # everyone in Q.s is in P.r
    P.r <- Q.s.t        # for each B in Q.s, everyone in B.t is in P.r
    P.r <- b1 & b2 ...  # principals in all of the listed bodies

Role membership is the least fixpoint of these rules.  An attribute map
then ties roles to issuable attributes, scoped to authorities whose path
contains a given label; :func:`authorized_attributes` is the single gate
the issuance workflow consults.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from .policy import AttributeSet, valid_attribute

PRINCIPAL_RE = re.compile(r"[A-Z][A-Za-z0-9_-]*\Z")
ROLE_NAME_RE = re.compile(r"[a-z][a-z0-9_-]*\Z")


class CredentialError(ValueError):
    """Syntax error in credential or attribute-map text."""


@dataclass(frozen=True)
class Role:
    principal: str
    name: str

    def __post_init__(self):
        if not PRINCIPAL_RE.match(self.principal):
            raise CredentialError(f"invalid principal {self.principal!r}")
        if not ROLE_NAME_RE.match(self.name):
            raise CredentialError(f"invalid role name {self.name!r}")

    def __str__(self):
        return f"{self.principal}.{self.name}"


@dataclass(frozen=True)
class Member:
    principal: str


@dataclass(frozen=True)
class RoleRef:
    role: Role


@dataclass(frozen=True)
class LinkedRole:
    role: Role
    name: str  # second role name


@dataclass(frozen=True)
class Intersection:
    bodies: tuple


Body = Union[Member, RoleRef, LinkedRole, Intersection]


@dataclass(frozen=True)
class Credential:
    head: Role
    body: Body


@dataclass(frozen=True)
class CredentialSet:
    credentials: tuple

    def __iter__(self):
        return iter(self.credentials)

    def __len__(self):
        return len(self.credentials)


@dataclass(frozen=True)
class AttributeMap:
    # entries: (Role, tuple of attributes, issuer scope label)
    entries: tuple


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def _parse_role(text: str, lineno: int) -> Role:
    parts = text.split(".")
    if len(parts) != 2:
        raise CredentialError(f"line {lineno}: expected P.r, got {text!r}")
    try:
        return Role(parts[0], parts[1])
    except CredentialError as exc:
        raise CredentialError(f"line {lineno}: {exc}") from None


def _parse_body_atom(text: str, lineno: int) -> Body:
    parts = text.split(".")
    if len(parts) == 1:
        if not PRINCIPAL_RE.match(parts[0]):
            raise CredentialError(f"line {lineno}: invalid principal {text!r}")
        return Member(parts[0])
    if len(parts) == 2:
        return RoleRef(_parse_role(text, lineno))
    if len(parts) == 3:
        role = _parse_role(".".join(parts[:2]), lineno)
        if not ROLE_NAME_RE.match(parts[2]):
            raise CredentialError(f"line {lineno}: invalid role name {parts[2]!r}")
        return LinkedRole(role, parts[2])
    raise CredentialError(f"line {lineno}: too many dots in {text!r}")


def _logical_lines(text: str):
    for lineno, raw in enumerate(text.replace(";", "\n").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def parse_credentials(text: str) -> CredentialSet:
    """Parse line-oriented credential text; '#' comments, ';' also separates."""
    creds = []
    for lineno, line in _logical_lines(text):
        if "<-" not in line:
            raise CredentialError(f"line {lineno}: missing '<-'")
        head_text, body_text = line.split("<-", 1)
        head = _parse_role(head_text.strip(), lineno)
        atoms = [a.strip() for a in body_text.split("&")]
        if any(not a for a in atoms):
            raise CredentialError(f"line {lineno}: empty intersection member")
        if len(atoms) == 1:
            body = _parse_body_atom(atoms[0], lineno)
        else:
            body = Intersection(
                tuple(_parse_body_atom(a, lineno) for a in atoms)
            )
        creds.append(Credential(head, body))
    return CredentialSet(tuple(creds))


def parse_attribute_map(text: str) -> AttributeMap:
    """Parse attribute-map lines of the form ``P.r -> a1, a2 @ scope``."""
    entries = []
    for lineno, line in _logical_lines(text):
        if "->" not in line:
            raise CredentialError(f"line {lineno}: missing '->'")
        role_text, rest = line.split("->", 1)
        if "@" not in rest:
            raise CredentialError(f"line {lineno}: missing '@ scope'")
        attrs_text, scope = rest.rsplit("@", 1)
        role = _parse_role(role_text.strip(), lineno)
        scope = scope.strip()
        if not scope:
            raise CredentialError(f"line {lineno}: empty issuer scope")
        attrs = tuple(a.strip() for a in attrs_text.split(",") if a.strip())
        if not attrs:
            raise CredentialError(f"line {lineno}: empty attribute list")
        for a in attrs:
            if not valid_attribute(a):
                raise CredentialError(f"line {lineno}: invalid attribute {a!r}")
        entries.append((role, attrs, scope))
    return AttributeMap(tuple(entries))


def print_credentials(creds: CredentialSet) -> str:
    def body_str(body):
        if isinstance(body, Member):
            return body.principal
        if isinstance(body, RoleRef):
            return str(body.role)
        if isinstance(body, LinkedRole):
            return f"{body.role}.{body.name}"
        return " & ".join(body_str(b) for b in body.bodies)

    return "\n".join(f"{c.head} <- {body_str(c.body)}" for c in creds)


def print_attribute_map(amap: AttributeMap) -> str:
    return "\n".join(
        f"{role} -> {', '.join(attrs)} @ {scope}"
        for role, attrs, scope in amap.entries
    )


# ---------------------------------------------------------------------------
# Inference
# ---------------------------------------------------------------------------


def fixpoint_members(creds: CredentialSet):
    """Least-fixpoint membership for every role mentioned in the credentials,
    plus the number of passes taken.

    Each pass applies every rule once and only ever adds principals, so the
    loop terminates within principals x roles passes.
    """
    members: dict = {}
    for cred in creds:
        members.setdefault(cred.head, set())

    def role_set(role):
        return members.get(role, set())

    def body_members(body):
        if isinstance(body, Member):
            return {body.principal}
        if isinstance(body, RoleRef):
            return set(role_set(body.role))
        if isinstance(body, LinkedRole):
            out = set()
            for b in role_set(body.role):
                out |= role_set(Role(b, body.name))
            return out
        sets = [body_members(b) for b in body.bodies]
        return set.intersection(*sets) if sets else set()

    passes = 0
    changed = True
    while changed:
        passes += 1
        changed = False
        for cred in creds:
            add = body_members(cred.body) - members[cred.head]
            if add:
                members[cred.head] |= add
                changed = True
    return members, passes


def _all_members(creds: CredentialSet) -> dict:
    return fixpoint_members(creds)[0]


def role_members(creds: CredentialSet, role: Role) -> set:
    """Principals in `role` under least-fixpoint semantics."""
    return set(_all_members(creds).get(role, set()))


def authorized_attributes(
    creds: CredentialSet,
    amap: AttributeMap,
    principal: str,
    issuer_path,
) -> AttributeSet:
    """Attributes an authority on `issuer_path` may mint for `principal`:
    the union over map entries whose role contains the principal and whose
    issuer scope appears among the path labels."""
    members = _all_members(creds)
    path_labels = set(issuer_path)
    granted = set()
    for role, attrs, scope in amap.entries:
        if scope not in path_labels:
            continue
        if principal in members.get(role, set()):
            granted.update(attrs)
    return AttributeSet(granted)
