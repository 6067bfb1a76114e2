"""Deterministic, scriptable virtual-organization simulations.

A scenario is a seed plus an ordered list of events (setup, delegations,
key requests, encryptions, decryptions, epoch bumps, credential loading).
Running it drives the scheme and trust modules single-threaded with one
seeded generator, so the resulting event log -- including digests of every
created object -- is byte-identical across runs.  Key requests are always
filtered through the trust engine; decrypt events carry an expected
outcome and the log marks PASS/FAIL per expectation.

Scenario text format: one event per line, ``EVENT key=value ...`` with
shell-style quoting for values containing spaces; ``#`` starts a comment.
"""

from __future__ import annotations

import random
import shlex
from dataclasses import dataclass, field

from . import scheme, trust
from .policy import AttributeSet, PolicyNotSatisfied, parse_policy
from .serialization import object_digest

EXPECT_VALUES = ("ok", "policy-denied", "auth-fail", "epoch-mismatch", "tm-denied")


class ScenarioError(Exception):
    """Structural scenario problem: bad syntax or reference to an undefined label."""


@dataclass(frozen=True)
class Setup:
    pass


@dataclass(frozen=True)
class Delegate:
    parent: str
    label: str


@dataclass(frozen=True)
class Rerandomize:
    da: str
    forged_path: tuple
    handle: str


@dataclass(frozen=True)
class KeyRequest:
    da: str
    user: str
    attrs: tuple
    expect: str | None = None


@dataclass(frozen=True)
class Encrypt:
    policy: str
    plaintext: bytes
    label: str


@dataclass(frozen=True)
class Decrypt:
    user: str
    ct_label: str
    expect: str


@dataclass(frozen=True)
class EpochBump:
    exclude: tuple = ()


@dataclass(frozen=True)
class LoadCredentials:
    text: str


@dataclass(frozen=True)
class LoadAttributeMap:
    text: str


@dataclass(frozen=True)
class Scenario:
    seed: int
    events: tuple


@dataclass
class EventLog:
    lines: list = field(default_factory=list)
    expectations: list = field(default_factory=list)  # (event index, matched)
    ops_exercised: set = field(default_factory=set)

    def add(self, line: str):
        self.lines.append(line)

    def all_expectations_met(self) -> bool:
        return all(ok for _, ok in self.expectations)

    def as_text(self) -> str:
        return "\n".join(self.lines) + "\n" if self.lines else ""

    def as_bytes(self) -> bytes:
        return self.as_text().encode()


def _digest(obj) -> str:
    return object_digest(obj)[:12]


class _VOState:
    def __init__(self, rng: random.Random):
        self.rng = rng
        self.pp = None
        self.mk = None
        self.das = {}  # handle -> DAKey
        self.delegations = []  # (parent handle, label) in creation order
        self.user_shards = {}  # user -> {epoch -> [UserKeyShard]}
        self.cts = {}  # label -> (Ciphertext, plaintext)
        self.creds = trust.CredentialSet(())
        self.amap = trust.AttributeMap(())

    def da(self, handle: str) -> scheme.DAKey:
        if handle not in self.das:
            raise ScenarioError(f"undefined authority {handle!r}")
        return self.das[handle]

    def user_key_for(self, user: str, epoch: int):
        """Merged key at `epoch` when the user has shards there, else at the
        user's most recent epoch (so epoch mismatches are observable)."""
        by_epoch = self.user_shards.get(user)
        if not by_epoch:
            raise ScenarioError(f"user {user!r} holds no keys")
        use = epoch if epoch in by_epoch else max(by_epoch)
        return scheme.merge_shards(by_epoch[use])


def run_scenario(sc: Scenario) -> EventLog:
    """Execute a scenario; aborts on structural errors, never on an expected
    cryptographic failure."""
    rng = random.Random(sc.seed)
    st = _VOState(rng)
    log = EventLog()

    for i, ev in enumerate(sc.events):
        prefix = f"[{i:03d}]"
        if isinstance(ev, Setup):
            st.pp, st.mk, root = scheme.setup(rng=rng)
            st.das["root"] = root
            log.ops_exercised.add("setup")
            log.add(
                f"{prefix} SETUP epoch=0 params={_digest(st.pp)} "
                f"root={_digest(root)}"
            )

        elif isinstance(ev, Delegate):
            parent = st.da(ev.parent)
            if ev.label in st.das:
                raise ScenarioError(f"authority label {ev.label!r} already defined")
            child = scheme.delegate(parent, ev.label, st.pp, rng)
            st.das[ev.label] = child
            st.delegations.append((ev.parent, ev.label))
            log.ops_exercised.add("delegate")
            log.add(
                f"{prefix} DELEGATE parent={ev.parent} label={ev.label} "
                f"depth={child.depth} key={_digest(child)}"
            )

        elif isinstance(ev, Rerandomize):
            original = st.da(ev.da)
            if ev.handle in st.das:
                raise ScenarioError(f"authority label {ev.handle!r} already defined")
            rogue = scheme.rerandomize(original, ev.forged_path, st.pp, rng)
            st.das[ev.handle] = rogue
            w_orig = scheme.recover_master_witness(original, st.pp)
            w_rogue = scheme.recover_master_witness(rogue, st.pp)
            same = w_orig.W == w_rogue.W
            log.ops_exercised.add("rerandomize")
            log.ops_exercised.add("recover_master_witness")
            log.add(
                f"{prefix} RERANDOMIZE da={ev.da} as={ev.handle} "
                f"path={'/'.join(ev.forged_path)} depth={rogue.depth} "
                f"witness-identical={'yes' if same else 'no'} (FLAW-DEMO)"
            )

        elif isinstance(ev, KeyRequest):
            da = st.da(ev.da)
            requested = set(ev.attrs)
            granted = trust.authorized_attributes(
                st.creds, st.amap, ev.user, da.path
            )
            if len(granted) == 0 or not requested <= set(granted.attributes):
                outcome = "tm-denied"
                detail = f"authorized={{{','.join(sorted(granted.attributes))}}}"
            else:
                try:
                    shard = scheme.issue_user_key(
                        da, ev.user, AttributeSet(requested), st.pp
                    )
                except scheme.EpochMismatch:
                    outcome = "epoch-mismatch"
                    detail = f"da-epoch={da.epoch} current={st.pp.current_epoch}"
                else:
                    outcome = "ok"
                    detail = f"shard={_digest(shard)}"
                    st.user_shards.setdefault(ev.user, {}).setdefault(
                        shard.epoch, []
                    ).append(shard)
                    log.ops_exercised.add("issue_user_key")
            line = (
                f"{prefix} KEY-REQUEST da={ev.da} user={ev.user} "
                f"attrs={','.join(ev.attrs)} outcome={outcome} {detail}"
            )
            if ev.expect is not None:
                matched = outcome == ev.expect
                log.expectations.append((i, matched))
                line += f" expect={ev.expect} {'PASS' if matched else 'FAIL'}"
            log.add(line)

        elif isinstance(ev, Encrypt):
            if ev.label in st.cts:
                raise ScenarioError(f"ciphertext label {ev.label!r} already defined")
            tree = parse_policy(ev.policy)
            ct = scheme.encrypt(st.pp, tree, ev.plaintext, rng)
            st.cts[ev.label] = (ct, ev.plaintext)
            log.ops_exercised.add("encrypt")
            log.add(
                f"{prefix} ENCRYPT label={ev.label} policy=\"{ev.policy}\" "
                f"epoch={ct.epoch} ct={_digest(ct)}"
            )

        elif isinstance(ev, Decrypt):
            if ev.ct_label not in st.cts:
                raise ScenarioError(f"undefined ciphertext {ev.ct_label!r}")
            ct, plaintext = st.cts[ev.ct_label]
            try:
                key = st.user_key_for(ev.user, ct.epoch)
                log.ops_exercised.add("merge_shards")
                recovered = scheme.decrypt(st.pp, key, ct)
                outcome = "ok" if recovered == plaintext else "corrupt"
            except PolicyNotSatisfied:
                outcome = "policy-denied"
            except scheme.EpochMismatch:
                outcome = "epoch-mismatch"
            except scheme.AuthenticationFailure:
                outcome = "auth-fail"
            log.ops_exercised.add("decrypt")
            matched = outcome == ev.expect
            log.expectations.append((i, matched))
            log.add(
                f"{prefix} DECRYPT user={ev.user} ct={ev.ct_label} "
                f"outcome={outcome} expect={ev.expect} "
                f"{'PASS' if matched else 'FAIL'}"
            )

        elif isinstance(ev, EpochBump):
            st.pp, new_root = scheme.epoch_rekey(st.mk, st.pp, rng)
            st.das["root"] = new_root
            log.ops_exercised.add("epoch_rekey")
            excluded = set(ev.exclude)
            rekeyed = []
            for parent, label in st.delegations:
                if label in excluded:
                    continue
                parent_key = st.das.get(parent)
                if parent_key is None or parent_key.epoch != st.pp.current_epoch:
                    continue  # parent itself excluded: subtree stays behind
                st.das[label] = scheme.delegate(parent_key, label, st.pp, rng)
                rekeyed.append(label)
            log.add(
                f"{prefix} EPOCH-BUMP epoch={st.pp.current_epoch} "
                f"rekeyed={','.join(rekeyed) if rekeyed else '-'} "
                f"excluded={','.join(sorted(excluded)) if excluded else '-'}"
            )

        elif isinstance(ev, LoadCredentials):
            try:
                st.creds = trust.parse_credentials(ev.text)
            except trust.CredentialError as exc:
                raise ScenarioError(str(exc)) from exc
            log.add(
                f"{prefix} LOAD-CREDENTIALS count={len(st.creds)} "
                f"set={_digest(st.creds)}"
            )

        elif isinstance(ev, LoadAttributeMap):
            try:
                st.amap = trust.parse_attribute_map(ev.text)
            except trust.CredentialError as exc:
                raise ScenarioError(str(exc)) from exc
            log.add(
                f"{prefix} LOAD-ATTRIBUTE-MAP entries={len(st.amap.entries)} "
                f"map={_digest(st.amap)}"
            )

        else:
            raise ScenarioError(f"unknown event {ev!r}")

    return log


# ---------------------------------------------------------------------------
# Scenario text format
# ---------------------------------------------------------------------------


def _args(tokens, lineno):
    out = {}
    for tok in tokens:
        if "=" not in tok:
            raise ScenarioError(f"line {lineno}: expected key=value, got {tok!r}")
        k, v = tok.split("=", 1)
        out[k] = v
    return out


def _need(args, key, lineno):
    if key not in args:
        raise ScenarioError(f"line {lineno}: missing {key}=")
    return args.pop(key)


def _check_expect(value, lineno):
    if value is not None and value not in EXPECT_VALUES:
        raise ScenarioError(
            f"line {lineno}: expect must be one of {', '.join(EXPECT_VALUES)}"
        )
    return value


def parse_scenario(text: str, seed: int = 0) -> Scenario:
    """Parse the line-oriented scenario format.  A ``SEED n`` line overrides
    the default seed."""
    events = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            tokens = shlex.split(line, comments=True)
        except ValueError as exc:
            raise ScenarioError(f"line {lineno}: {exc}") from exc
        if not tokens:
            continue
        name, args = tokens[0].upper(), _args(tokens[1:], lineno)
        if name == "SEED":
            if len(args) != 1 or "value" not in args:
                raise ScenarioError(f"line {lineno}: usage: SEED value=<int>")
            seed = int(args["value"])
            continue
        if name == "SETUP":
            events.append(Setup())
        elif name == "DELEGATE":
            events.append(
                Delegate(_need(args, "parent", lineno), _need(args, "label", lineno))
            )
        elif name == "RERANDOMIZE":
            da = _need(args, "da", lineno)
            path = tuple(_need(args, "path", lineno).split("/"))
            events.append(Rerandomize(da, path, _need(args, "as", lineno)))
        elif name == "KEY-REQUEST":
            events.append(
                KeyRequest(
                    _need(args, "da", lineno),
                    _need(args, "user", lineno),
                    tuple(_need(args, "attrs", lineno).split(",")),
                    _check_expect(args.pop("expect", None), lineno),
                )
            )
        elif name == "ENCRYPT":
            events.append(
                Encrypt(
                    _need(args, "policy", lineno),
                    _need(args, "plaintext", lineno).encode(),
                    _need(args, "label", lineno),
                )
            )
        elif name == "DECRYPT":
            expect = _check_expect(_need(args, "expect", lineno), lineno)
            events.append(
                Decrypt(_need(args, "user", lineno), _need(args, "ct", lineno), expect)
            )
        elif name == "EPOCH-BUMP":
            exclude = args.pop("exclude", "")
            events.append(
                EpochBump(tuple(x for x in exclude.split(",") if x))
            )
        elif name == "LOAD-CREDENTIALS":
            events.append(LoadCredentials(_need(args, "creds", lineno)))
        elif name == "LOAD-ATTRIBUTE-MAP":
            events.append(LoadAttributeMap(_need(args, "map", lineno)))
        else:
            raise ScenarioError(f"line {lineno}: unknown event {name}")
        if args:
            raise ScenarioError(
                f"line {lineno}: unexpected arguments {sorted(args)}"
            )
    return Scenario(seed=seed, events=tuple(events))


HEALTHCARE_CREDENTIALS = (
    "HospA.doctor <- Alice; "
    "HospA.doctor <- Bob; "
    "HospB.cardiology <- Alice; "
    "VO.doctor <- HospA.doctor; "
    "VO.cardiology <- HospB.cardiology"
)

HEALTHCARE_ATTRIBUTE_MAP = (
    "VO.doctor -> doctor @ hospA; "
    "VO.cardiology -> cardiology @ hospB"
)


def healthcare_scenario(seed: int = 20021) -> Scenario:
    """Built-in two-hospital scenario touching every scheme operation.

    Alice collects doctor from hospital A and cardiology from hospital B and
    decrypts a record guarded by both; Bob (doctor only) is policy-denied; a
    re-randomized rogue authority impersonating hospital A issues Alice a
    bit-identical working key; an epoch bump excludes hospital B, whose next
    issuance then fails, while pre-bump artifacts keep round-tripping.
    """
    return Scenario(
        seed=seed,
        events=(
            Setup(),
            LoadCredentials(HEALTHCARE_CREDENTIALS),
            LoadAttributeMap(HEALTHCARE_ATTRIBUTE_MAP),
            Delegate("root", "hospA"),
            Delegate("root", "hospB"),
            KeyRequest("hospA", "Alice", ("doctor",), "ok"),
            KeyRequest("hospB", "Alice", ("cardiology",), "ok"),
            KeyRequest("hospA", "Bob", ("doctor",), "ok"),
            KeyRequest("hospA", "Bob", ("cardiology",), "tm-denied"),
            Encrypt("doctor and cardiology", b"cardiology consult notes", "rec1"),
            Decrypt("Alice", "rec1", "ok"),
            Decrypt("Bob", "rec1", "policy-denied"),
            Rerandomize("hospA", ("root", "hospA"), "rogueA"),
            KeyRequest("rogueA", "Alice", ("doctor",), "ok"),
            Decrypt("Alice", "rec1", "ok"),
            EpochBump(exclude=("hospB",)),
            KeyRequest("hospB", "Alice", ("cardiology",), "epoch-mismatch"),
            KeyRequest("hospA", "Alice", ("doctor",), "ok"),
            Encrypt("doctor", b"staff bulletin", "rec2"),
            Decrypt("Alice", "rec2", "ok"),
            Decrypt("Bob", "rec2", "epoch-mismatch"),
            Decrypt("Alice", "rec1", "ok"),
        ),
    )
