"""Command-line entry point: key generation, local and remote issue/verify,
service hosting, benchmarking, and report rendering.

Exit codes: 0 success, 1 usage error, 2 failed verification, 3 I/O or
network failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import random
import sys

from . import bench, scheme, wire


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse would exit(2) on bad flags; the contract here is exit 1.
    def error(self, message):
        raise UsageError(f"{message}\n{self.format_usage()}")


def _rng(seed):
    return random.Random(seed) if seed is not None else None


def _resolve_endpoint(flag_value, env_name, default_port):
    text = flag_value or os.environ.get(env_name) or f"127.0.0.1:{default_port}"
    return wire.parse_endpoint(text)


def _parse_attrs(args) -> tuple[int, ...]:
    if args.attrs is not None:
        try:
            values = tuple(int(part, 10) for part in args.attrs.split(","))
        except ValueError:
            raise UsageError(f"--attrs must be comma-separated decimals, got {args.attrs!r}")
    else:
        values = scheme.DEFAULT_ATTRIBUTES[: args.attr_count]
    return scheme.check_attributes(values)


def _parse_int_list(text, flag):
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise UsageError(f"{flag} must be comma-separated integers, got {text!r}")


def _read_json(path):
    with open(path, encoding="utf-8") as stream:
        return json.load(stream)


def _write_json(path, doc):
    with open(path, "w", encoding="utf-8") as stream:
        json.dump(doc, stream, indent=2)
        stream.write("\n")


def _load_key(path):
    return wire.key_from_wire(_read_json(path))


def _load_public(path):
    """Accept either a public-key file or a full key file."""
    doc = _read_json(path)
    try:
        return wire.public_from_wire(doc)
    except wire.MalformedCredential:
        name, key = wire.key_from_wire(doc)
        return name, scheme.public_part(name, key)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_keygen(args) -> int:
    key = scheme.keygen(args.scheme, _rng(args.seed))
    _write_json(args.out, wire.key_to_wire(args.scheme, key))
    print(f"wrote {args.scheme} issuer key to {args.out}")
    if args.pub_out:
        public = scheme.public_part(args.scheme, key)
        _write_json(args.pub_out, wire.public_to_wire(args.scheme, public))
        print(f"wrote public part to {args.pub_out}")
    return 0


def cmd_issue(args) -> int:
    attrs = _parse_attrs(args)
    if args.remote or not args.key:
        endpoint = _resolve_endpoint(args.remote, wire.ISSUER_ADDR_ENV,
                                     wire.DEFAULT_ISSUER_PORT)
        doc, round_trip_ms = wire.client_issue(endpoint, args.scheme, attrs)
        print(f"issued remotely in {round_trip_ms:.2f} ms round trip")
    else:
        name, key = _load_key(args.key)
        if name != args.scheme:
            raise UsageError(f"key file is for {name}, not {args.scheme}")
        cred, issue_ms = bench.time_phase(
            lambda: scheme.issue(args.scheme, key, attrs, _rng(args.seed))
        )
        doc = wire.credential_to_wire(args.scheme, cred)
        print(f"issued locally in {issue_ms:.2f} ms")
    _write_json(args.out, doc)
    print(f"wrote credential ({len(attrs)} attributes) to {args.out}")
    return 0


def cmd_verify(args) -> int:
    doc = _read_json(args.cred)
    scheme_name = args.scheme or doc.get("scheme")
    if args.remote or not args.pub:
        endpoint = _resolve_endpoint(args.remote, wire.VERIFIER_ADDR_ENV,
                                     wire.DEFAULT_VERIFIER_PORT)
        valid, round_trip_ms = wire.client_verify(endpoint, scheme_name, doc)
        print(f"remote verification took {round_trip_ms:.2f} ms round trip")
    else:
        pub_name, public = _load_public(args.pub)
        wire_name, cred = wire.credential_from_wire(doc)
        if scheme_name not in (pub_name, wire_name) or pub_name != wire_name:
            raise UsageError(
                f"scheme mismatch: credential={wire_name} public-key={pub_name}"
            )
        try:
            valid = scheme.verify(scheme_name, public, cred)
        except scheme.MalformedPoint:
            valid = False
    print("valid" if valid else "invalid")
    return 0 if valid else 2


def _serve(args, default_port, env_name, load, run) -> int:
    endpoint = _resolve_endpoint(args.bind, env_name, default_port)
    material = {}
    for path in args.paths:
        name, item = load(path)
        material[name] = item
    print(f"serving {sorted(material)} on {endpoint[0]}:{endpoint[1]}")
    try:
        run(endpoint, material)
    except KeyboardInterrupt:
        print("stopped")
    return 0


def cmd_serve_issuer(args) -> int:
    return _serve(args, wire.DEFAULT_ISSUER_PORT, wire.ISSUER_ADDR_ENV,
                  _load_key, wire.issuer_serve)


def cmd_serve_verifier(args) -> int:
    return _serve(args, wire.DEFAULT_VERIFIER_PORT, wire.VERIFIER_ADDR_ENV,
                  _load_public, wire.verifier_serve)


def _print_summaries(summaries, ratios) -> None:
    header = f"{'scheme':<12} {'phase':<7} {'attrs':>5} {'metric':<10} " \
             f"{'min':>10} {'max':>10} {'mean':>10} {'>=mean%':>8}"
    print(header)
    print("-" * len(header))
    for s in summaries:
        print(f"{s.scheme:<12} {s.phase:<7} {s.attr_count:>5} {s.metric:<10} "
              f"{s.min:>10.2f} {s.max:>10.2f} {s.mean:>10.2f} {s.pct_ge_mean:>8.2f}")
    for row in ratios:
        print(f"mean-time ratio modexp1024/ecc160 "
              f"[{row['phase']}, {row['attr_count']} attrs]: {row['ratio']:.2f}")


def cmd_bench(args) -> int:
    base = _read_json(args.config) if args.config else {}
    if args.schemes:
        base["schemes"] = args.schemes.split(",")
    if args.attr_counts:
        base["attr_counts"] = _parse_int_list(args.attr_counts, "--attr-counts")
    if args.runs is not None:
        base["runs"] = args.runs
    if args.mode:
        base["mode"] = args.mode
    if args.seed is not None:
        base["seed"] = args.seed
    if args.interval is not None:
        base["memory_sample_interval_ms"] = args.interval
    if args.out:
        base["out"] = args.out
    if base.get("mode") == "over-wire":
        base["issuer_addr"] = _resolve_endpoint(
            args.issuer, wire.ISSUER_ADDR_ENV, wire.DEFAULT_ISSUER_PORT)
        base["verifier_addr"] = _resolve_endpoint(
            args.verifier, wire.VERIFIER_ADDR_ENV, wire.DEFAULT_VERIFIER_PORT)
    try:
        config = bench.BenchConfig.from_dict(base)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad benchmark configuration: {exc}")

    total = 2 * len(config.schemes) * len(config.attr_counts) * config.runs
    print(f"running {config.runs} runs x {config.schemes} x "
          f"{config.attr_counts} attrs ({config.mode}): {total} records")
    records = bench.run_benchmark(config)
    summaries = bench.summarize(records)
    _print_summaries(summaries, bench.mean_ratio_rows(summaries))
    if config.out:
        bench.save_records(config.out, config, records)
        print(f"wrote {len(records)} records to {config.out}")
    return 0


def cmd_report(args) -> int:
    records = bench.load_records(args.records)
    summaries = bench.summarize(records)
    bench.emit_report(summaries, args.format, args.out)
    print(f"wrote {args.format} report to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="abclab",
                     description="Attribute-based credential performance lab")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keygen", help="generate an issuer key file")
    p.add_argument("--scheme", choices=scheme.SCHEME_NAMES, required=True)
    p.add_argument("--out", required=True, help="key file to write (JSON)")
    p.add_argument("--pub-out", help="also write the public part")
    p.add_argument("--seed", type=int, help="deterministic key generation")
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("issue", help="issue a credential locally or remotely")
    p.add_argument("--scheme", choices=scheme.SCHEME_NAMES, required=True)
    p.add_argument("--attrs", help="comma-separated decimal attribute values")
    p.add_argument("--attr-count", type=int, default=10,
                   help="use first N fixture attributes when --attrs is omitted")
    p.add_argument("--key", help="issuer key file for local issuance")
    p.add_argument("--remote", help="issuer endpoint host:port")
    p.add_argument("--out", required=True, help="credential file to write")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_issue)

    p = sub.add_parser("verify", help="verify a credential file")
    p.add_argument("--scheme", choices=scheme.SCHEME_NAMES)
    p.add_argument("--cred", required=True, help="credential file")
    p.add_argument("--pub", help="issuer public key file for local verification")
    p.add_argument("--remote", help="verifier endpoint host:port")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("serve-issuer", help="run the issuance service")
    p.add_argument("--bind", help="host:port to listen on")
    p.add_argument("--key", dest="paths", action="append", required=True,
                   help="issuer key file (repeatable, one per scheme)")
    p.set_defaults(func=cmd_serve_issuer)

    p = sub.add_parser("serve-verifier", help="run the verification service")
    p.add_argument("--bind", help="host:port to listen on")
    p.add_argument("--pub", dest="paths", action="append", required=True,
                   help="issuer public key file (repeatable)")
    p.set_defaults(func=cmd_serve_verifier)

    p = sub.add_parser("bench", help="run the benchmark grid")
    p.add_argument("--schemes", help="comma-separated subset of "
                                     + ",".join(scheme.SCHEME_NAMES))
    p.add_argument("--attr-counts", help="comma-separated counts, e.g. 1,5,10")
    p.add_argument("--runs", type=int)
    p.add_argument("--mode", choices=("in-process", "over-wire"))
    p.add_argument("--seed", type=int)
    p.add_argument("--interval", type=float, help="memory sample interval (ms)")
    p.add_argument("--config", help="JSON file with benchmark configuration")
    p.add_argument("--issuer", help="issuer endpoint for over-wire mode")
    p.add_argument("--verifier", help="verifier endpoint for over-wire mode")
    p.add_argument("--out", help="write raw records (JSON) here")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("report", help="render a report from saved records")
    p.add_argument("--records", required=True, help="records file from bench --out")
    p.add_argument("--format", choices=bench.REPORT_FORMATS, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (wire.ConnectionFailed, wire.RemoteError, bench.IoFailure, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (wire.WireError, scheme.UnknownScheme, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
