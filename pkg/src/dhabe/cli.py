"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 cryptographic failure (policy
denied, authentication failure, epoch mismatch), 3 trust-management denial,
4 format/serialization error.  Object files use the binary container from
:mod:`dhabe.serialization`; ``--armor`` writes the base64-armored form and
inputs are auto-detected.  Credential and attribute-map inputs may also be
plain text in their respective line formats.
"""

from __future__ import annotations

import argparse
import random
import sys

from . import harness, scheme, serialization, trust
from .groups import FormatError, encode_element
from .policy import AttributeSet, PolicyError, PolicyNotSatisfied, parse_policy

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CRYPTO = 2
EXIT_TM_DENIED = 3
EXIT_FORMAT = 4


class TrustDenied(Exception):
    """Requested attributes exceed what trust management authorizes."""


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _read(path: str) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()


def _write(path: str, data: bytes):
    with open(path, "wb") as fh:
        fh.write(data)


def _load(path: str, expected_tag: int):
    return serialization.decode_object(_read(path), expected_tag)


def _store(path: str, obj, armored: bool):
    data = serialization.encode_object(obj)
    if armored:
        data = serialization.armor(data)
    _write(path, data)


def _load_credentials(path: str) -> trust.CredentialSet:
    data = _read(path)
    if data[:4] == serialization.MAGIC or serialization.is_armored(data):
        return serialization.decode_object(data, serialization.TAG_CREDENTIAL_SET)
    return trust.parse_credentials(data.decode())


def _load_attribute_map(path: str) -> trust.AttributeMap:
    data = _read(path)
    if data[:4] == serialization.MAGIC or serialization.is_armored(data):
        return serialization.decode_object(data, serialization.TAG_ATTRIBUTE_MAP)
    return trust.parse_attribute_map(data.decode())


def _rng(seed) -> random.Random:
    return random.Random(seed) if seed is not None else random.SystemRandom()


def build_parser() -> _Parser:
    p = _Parser(prog="dhabe", description="Hierarchical ABE toolkit for VOs")
    p.add_argument("--armor", action="store_true", help="write armored output files")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("setup", help="create a VO: params, master key, root DA")
    sp.add_argument("--params", required=True)
    sp.add_argument("--master", required=True)
    sp.add_argument("--root", required=True)
    sp.add_argument("--seed", type=int)

    sp = sub.add_parser("delegate", help="delegate a child domain authority")
    sp.add_argument("--params", required=True)
    sp.add_argument("--parent", required=True)
    sp.add_argument("--label", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--seed", type=int)

    sp = sub.add_parser("rerand", help="forge a same-level sibling DA (flaw demo)")
    sp.add_argument("--params", required=True)
    sp.add_argument("--da", required=True)
    sp.add_argument("--path", required=True, help="forged path, labels joined by '/'")
    sp.add_argument("--out", required=True)
    sp.add_argument("--seed", type=int)

    sp = sub.add_parser("issue", help="issue a user attribute-key shard")
    sp.add_argument("--params", required=True)
    sp.add_argument("--da", required=True)
    sp.add_argument("--user", required=True)
    sp.add_argument("--attrs", required=True, help="comma-separated attributes")
    sp.add_argument("--creds", help="credential file (text or serialized)")
    sp.add_argument("--attr-map", help="attribute map file (text or serialized)")
    sp.add_argument("--force", action="store_true", help="bypass trust management")
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("merge", help="merge shards into one user key")
    sp.add_argument("shards", nargs="+")
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("encrypt", help="encrypt under a decryption policy")
    sp.add_argument("--params", required=True)
    sp.add_argument("--policy", required=True)
    sp.add_argument("--in", dest="infile", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--seed", type=int)

    sp = sub.add_parser("decrypt", help="decrypt with a user key")
    sp.add_argument("--params", required=True)
    sp.add_argument("--key", required=True)
    sp.add_argument("--in", dest="infile", required=True)
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("epoch-bump", help="advance the VO to the next epoch")
    sp.add_argument("--params", required=True)
    sp.add_argument("--master", required=True)
    sp.add_argument("--out-params")
    sp.add_argument("--out-master")
    sp.add_argument("--out-root", required=True)
    sp.add_argument("--seed", type=int)

    sp = sub.add_parser("tm", help="trust-management queries")
    tmsub = sp.add_subparsers(dest="tm_command", required=True)
    spe = tmsub.add_parser("eval", help="evaluate role members or authorized attributes")
    spe.add_argument("--creds", required=True)
    spe.add_argument("--role", help="print members of P.r")
    spe.add_argument("--principal")
    spe.add_argument("--attr-map")
    spe.add_argument("--issuer-path", help="labels joined by '/'")

    sp = sub.add_parser("witness", help="recover the master witness from a DA key")
    sp.add_argument("--params", required=True)
    sp.add_argument("--da", required=True)
    sp.add_argument("--out", help="write the raw witness element")

    sp = sub.add_parser("demo", help="run a scenario ('healthcare' or a file)")
    sp.add_argument("scenario")
    sp.add_argument("--seed", type=int)

    return p


def _cmd_setup(args) -> int:
    pp, mk, root = scheme.setup(rng=_rng(args.seed))
    _store(args.params, pp, args.armor)
    _store(args.master, mk, args.armor)
    _store(args.root, root, args.armor)
    print(f"setup complete: epoch 0, params {serialization.object_digest(pp)[:12]}")
    return EXIT_OK


def _cmd_delegate(args) -> int:
    pp = _load(args.params, serialization.TAG_PUBLIC_PARAMS)
    parent = _load(args.parent, serialization.TAG_DA_KEY)
    child = scheme.delegate(parent, args.label, pp, _rng(args.seed))
    _store(args.out, child, args.armor)
    print(f"delegated {'/'.join(child.path)} (depth {child.depth})")
    return EXIT_OK


def _cmd_rerand(args) -> int:
    pp = _load(args.params, serialization.TAG_PUBLIC_PARAMS)
    da = _load(args.da, serialization.TAG_DA_KEY)
    forged = tuple(args.path.split("/"))
    sibling = scheme.rerandomize(da, forged, pp, _rng(args.seed))
    _store(args.out, sibling, args.armor)
    print(
        "FLAW-DEMO: forged sibling authority created by key re-randomization; "
        "its issued keys are bit-identical to the original's and the master "
        "witness it unblinds to is the same.",
        file=sys.stderr,
    )
    print(f"rerandomized sibling at {'/'.join(sibling.path)}")
    return EXIT_OK


def _cmd_issue(args) -> int:
    pp = _load(args.params, serialization.TAG_PUBLIC_PARAMS)
    da = _load(args.da, serialization.TAG_DA_KEY)
    requested = AttributeSet(a for a in args.attrs.split(",") if a)
    if not args.force:
        if not args.creds or not args.attr_map:
            raise _UsageError("--creds and --attr-map are required without --force")
        creds = _load_credentials(args.creds)
        amap = _load_attribute_map(args.attr_map)
        granted = trust.authorized_attributes(creds, amap, args.user, da.path)
        missing = set(requested.attributes) - set(granted.attributes)
        if missing:
            raise TrustDenied(
                f"trust management denies {sorted(missing)} for {args.user} "
                f"via {'/'.join(da.path)}"
            )
    shard = scheme.issue_user_key(da, args.user, requested, pp)
    _store(args.out, shard, args.armor)
    print(f"issued {sorted(requested.attributes)} to {args.user}")
    return EXIT_OK


def _cmd_merge(args) -> int:
    shards = [_load(path, serialization.TAG_USER_KEY) for path in args.shards]
    key = scheme.merge_shards(shards)
    _store(args.out, key, args.armor)
    print(
        f"merged {len(shards)} shard(s): user {key.user_id}, "
        f"attributes {sorted(key.attr_components)}"
    )
    return EXIT_OK


def _cmd_encrypt(args) -> int:
    pp = _load(args.params, serialization.TAG_PUBLIC_PARAMS)
    tree = parse_policy(args.policy)
    plaintext = _read(args.infile)
    ct = scheme.encrypt(pp, tree, plaintext, _rng(args.seed))
    _store(args.out, ct, args.armor)
    print(f"encrypted {len(plaintext)} bytes at epoch {ct.epoch}")
    return EXIT_OK


def _cmd_decrypt(args) -> int:
    pp = _load(args.params, serialization.TAG_PUBLIC_PARAMS)
    key = _load(args.key, serialization.TAG_USER_KEY)
    if isinstance(key, scheme.UserKeyShard):
        key = scheme.merge_shards([key])
    ct = _load(args.infile, serialization.TAG_CIPHERTEXT)
    plaintext = scheme.decrypt(pp, key, ct)
    _write(args.out, plaintext)
    print(f"decrypted {len(plaintext)} bytes")
    return EXIT_OK


def _cmd_epoch_bump(args) -> int:
    pp = _load(args.params, serialization.TAG_PUBLIC_PARAMS)
    mk = _load(args.master, serialization.TAG_MASTER_KEY)
    new_pp, root = scheme.epoch_rekey(mk, pp, _rng(args.seed))
    _store(args.out_params or args.params, new_pp, args.armor)
    _store(args.out_master or args.master, mk, args.armor)
    _store(args.out_root, root, args.armor)
    print(f"advanced to epoch {new_pp.current_epoch}")
    return EXIT_OK


def _cmd_tm_eval(args) -> int:
    creds = _load_credentials(args.creds)
    if args.role:
        if "." not in args.role:
            raise _UsageError("--role expects P.r")
        principal, name = args.role.split(".", 1)
        members = trust.role_members(creds, trust.Role(principal, name))
        for m in sorted(members):
            print(m)
        return EXIT_OK
    if not (args.principal and args.attr_map and args.issuer_path):
        raise _UsageError(
            "tm eval needs --role, or --principal with --attr-map and --issuer-path"
        )
    amap = _load_attribute_map(args.attr_map)
    granted = trust.authorized_attributes(
        creds, amap, args.principal, args.issuer_path.split("/")
    )
    for a in granted:
        print(a)
    return EXIT_OK


def _cmd_witness(args) -> int:
    pp = _load(args.params, serialization.TAG_PUBLIC_PARAMS)
    da = _load(args.da, serialization.TAG_DA_KEY)
    witness = scheme.recover_master_witness(da, pp)
    data = encode_element(witness.W)
    if args.out:
        _write(args.out, data)
    print(data.hex())
    return EXIT_OK


def _cmd_demo(args) -> int:
    if args.scenario == "healthcare":
        sc = harness.healthcare_scenario()
        if args.seed is not None:
            sc = harness.Scenario(seed=args.seed, events=sc.events)
    else:
        text = _read(args.scenario).decode()
        sc = harness.parse_scenario(text, seed=args.seed or 0)
    log = harness.run_scenario(sc)
    sys.stdout.write(log.as_text())
    if not log.all_expectations_met():
        print("scenario expectations FAILED", file=sys.stderr)
        return EXIT_CRYPTO
    return EXIT_OK


_COMMANDS = {
    "setup": _cmd_setup,
    "delegate": _cmd_delegate,
    "rerand": _cmd_rerand,
    "issue": _cmd_issue,
    "merge": _cmd_merge,
    "encrypt": _cmd_encrypt,
    "decrypt": _cmd_decrypt,
    "epoch-bump": _cmd_epoch_bump,
    "witness": _cmd_witness,
    "demo": _cmd_demo,
}


def run(argv) -> int:
    """Entry point used by tests: returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "tm":
            return _cmd_tm_eval(args)
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PolicyNotSatisfied, scheme.AuthenticationFailure,
            scheme.EpochMismatch, scheme.MergeRefused) as exc:
        kind = (
            "policy not satisfied"
            if isinstance(exc, PolicyNotSatisfied)
            else "authentication failure"
            if isinstance(exc, scheme.AuthenticationFailure)
            else "epoch mismatch"
            if isinstance(exc, scheme.EpochMismatch)
            else "merge refused"
        )
        print(f"{kind}: {exc}", file=sys.stderr)
        return EXIT_CRYPTO
    except TrustDenied as exc:
        print(f"trust management denial: {exc}", file=sys.stderr)
        return EXIT_TM_DENIED
    except FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except (PolicyError, trust.CredentialError, harness.ScenarioError,
            scheme.IssuanceError, ValueError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
