"""rmpf command-line entry point.

Exit codes: 0 success, 2 usage, 3 I/O or parse, 4 protocol/network,
5 verification mismatch (including failed key confirmation).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import random
import secrets
import socket
import socketserver
import sys
import threading

from . import analysis, vectors
from .core import Dims, DimensionError
from .kap import ParamsFormatError, PublicParams, derive_key, gen_private, make_token, setup
from .wire import HandshakeError, KeyConfirmationError, run_initiator, run_responder

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NET, EXIT_MISMATCH = 0, 2, 3, 4, 5

log = logging.getLogger("rmpf")


class UsageError(Exception):
    pass


def make_rng(seed_hex):
    """Seeded deterministic stream when a 32-byte hex seed is given, OS entropy otherwise."""
    seed_hex = seed_hex or os.environ.get("RMPF_SEED")
    if not seed_hex:
        return secrets.SystemRandom()
    try:
        seed = bytes.fromhex(seed_hex)
    except ValueError:
        raise UsageError("--seed must be hex") from None
    if len(seed) != 32:
        raise UsageError(f"--seed must be 32 bytes (64 hex digits), got {len(seed)}")
    return random.Random(seed)


def _dims(args):
    try:
        if getattr(args, "dims", None):
            return Dims.parse(args.dims)
        return Dims(args.rows, args.cols)
    except (DimensionError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _read_params(path):
    with open(path, "rb") as fh:
        return PublicParams.load(fh.read())


def _emit(args, text_lines, payload):
    if args.format == "json":
        print(json.dumps(payload, indent=2))
    else:
        for line in text_lines:
            print(line)


def _fmt_matrix(rows):
    return [" ".join(f"{v:>{len(str(max(max(r) for r in rows)))}}" for v in row) for row in rows]


def cmd_gen_params(args):
    rng = make_rng(args.seed)
    if not 8 <= args.p_bits <= 64:
        raise UsageError("--p-bits must be in [8, 64]")
    params = setup(args.p_bits, _dims(args), rng)
    blob = params.to_bytes()
    data = (params.to_hex() + "\n").encode() if args.armor else blob
    if args.out == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
        print(file=sys.stderr)
        print(f"fingerprint {params.fingerprint()}", file=sys.stderr)
        return EXIT_OK
    with open(args.out, "wb") as fh:
        fh.write(data)
    _emit(args, [f"p = {params.p} ({params.p.bit_length()} bits), dims {params.dims}",
                 f"wrote {args.out}", f"fingerprint {params.fingerprint()}"],
          {"p": params.p, "m": params.dims.m, "n": params.dims.n, "out": args.out,
           "fingerprint": params.fingerprint()})
    return EXIT_OK


def cmd_demo(args):
    if args.toy:
        params = vectors.toy_params()
        alice, bob = vectors.toy_keys()
    else:
        rng = make_rng(args.seed)
        params = _read_params(args.params) if args.params else setup(args.p_bits, _dims(args), rng)
        alice, bob = gen_private(params, rng), gen_private(params, rng)
    ta, tb = make_token(params, alice), make_token(params, bob)
    ka, kb = derive_key(params, alice, tb), derive_key(params, bob, ta)
    ok = ka.matrix == kb.matrix and ka.session_key == kb.session_key
    mismatches = []
    if args.toy:
        mismatches = [str(c) for c in vectors.check_vectors() if not c.ok]
        ok = ok and not mismatches
    lines = [f"p = {params.p}, dims {params.dims}", "TokenA:", *_fmt_matrix(ta.matrix.rows),
             "TokenB:", *_fmt_matrix(tb.matrix.rows), "KeyA:", *_fmt_matrix(ka.matrix.rows),
             "KeyB:", *_fmt_matrix(kb.matrix.rows), f"session key fingerprint {ka.fingerprint}",
             *mismatches, "PASS" if ok else "FAIL"]
    _emit(args, lines, {"p": params.p, "m": params.dims.m, "n": params.dims.n,
                        "token_a": ta.matrix.rows, "token_b": tb.matrix.rows,
                        "key_a": ka.matrix.rows, "key_b": kb.matrix.rows,
                        "fingerprint": ka.fingerprint, "mismatches": mismatches,
                        "result": "PASS" if ok else "FAIL"})
    return EXIT_OK if ok else EXIT_MISMATCH


def cmd_vectors(args):
    checks = vectors.check_vectors()
    bad = [c for c in checks if not c.ok]
    _emit(args, [str(c) for c in checks] + [f"{len(checks) - len(bad)}/{len(checks)} cells OK"],
          {"checks": [{"figure": c.figure, "label": c.label, "row": c.row, "col": c.col,
                       "expected": c.expected, "actual": c.actual, "ok": c.ok} for c in checks],
           "failed": len(bad)})
    return EXIT_MISMATCH if bad else EXIT_OK


def _report_key(args, role, key):
    lines = [f"{role}: handshake complete", f"session key fingerprint {key.fingerprint}"]
    payload = {"role": role, "fingerprint": key.fingerprint}
    if args.insecure_print_key:
        lines.append(f"session key {key.session_key.hex()}")
        payload["session_key"] = key.session_key.hex()
    _emit(args, lines, payload)
    sys.stdout.flush()


def cmd_serve(args):
    expected = _read_params(args.params) if args.params else None
    rng = make_rng(args.seed)
    timeout = args.timeout_ms / 1000
    failures = []
    lock = threading.Lock()

    def session_rng():
        if isinstance(rng, random.SystemRandom):
            return rng
        # seeded runs: one derived stream per session, in accept order
        with lock:
            return random.Random(rng.getrandbits(256))

    class Handler(socketserver.BaseRequestHandler):
        def handle(self):
            try:
                key = run_responder(self.request, session_rng(), timeout, expected_params=expected)
            except (HandshakeError, OSError) as exc:
                log.error("session from %s failed: %s", self.client_address, exc)
                with lock:
                    failures.append(exc)
                return
            with lock:
                _report_key(args, "responder", key)

    class Server(socketserver.ThreadingTCPServer):
        allow_reuse_address = True
        # non-daemon session threads are joined by server_close()
        daemon_threads = False

    with Server((args.host, args.port), Handler) as srv:
        print(f"listening on {srv.server_address[0]}:{srv.server_address[1]}", flush=True)
        if args.count:
            for _ in range(args.count):
                srv.handle_request()
        else:
            try:
                srv.serve_forever()
            except KeyboardInterrupt:
                pass
    if failures:
        return EXIT_MISMATCH if any(isinstance(f, KeyConfirmationError) for f in failures) else EXIT_NET
    return EXIT_OK


def cmd_connect(args):
    rng = make_rng(args.seed)
    params = _read_params(args.params) if args.params else setup(args.p_bits, _dims(args), rng)
    timeout = args.timeout_ms / 1000
    try:
        with socket.create_connection((args.host, args.port), timeout=timeout) as sock:
            key = run_initiator(sock, params, rng, timeout)
    except KeyConfirmationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except (HandshakeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NET
    _report_key(args, "initiator", key)
    return EXIT_OK


def cmd_attack(args):
    dims = _dims(args)
    primes = args.p or [13, 31]
    for p in primes:
        if analysis.search_space(p, args.mode) > analysis.MAX_CANDIDATES:
            raise UsageError(
                f"p = {p} needs {analysis.search_space(p, args.mode)} candidates in {args.mode} "
                f"mode (limit {analysis.MAX_CANDIDATES}); use a smaller prime or --mode reduced")
    rng = make_rng(args.seed) if (args.seed or os.environ.get("RMPF_SEED")) else random.Random(0)
    try:
        rows = analysis.attack_cost_curve(primes, dims, args.samples, rng, modes=[args.mode])
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        if args.format == "json":
            json.dump([r.__dict__ for r in rows], out, indent=2)
            out.write("\n")
        else:
            analysis.write_csv(rows, out)
            for e in analysis.extrapolate(rows):
                print(f"# {e.mode}: log2(trials) ~ {e.slope:.3f}*log2(p) + {e.intercept:.3f}; "
                      f"at {e.bits}-bit p ~ 2^{e.log2_trials:.1f} trials "
                      f"(two-scalar estimate 2^{e.nominal_log2})", file=sys.stderr)
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_bench(args):
    rng = make_rng(args.seed) if (args.seed or os.environ.get("RMPF_SEED")) else random.Random(0)
    report = analysis.bench(args.p_bits, _dims(args), args.iterations, rng)
    if args.format == "json":
        print(json.dumps(report.__dict__, indent=2))
    else:
        analysis.write_csv([report], sys.stdout)
    return EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", help="32-byte hex seed (fallback: $RMPF_SEED)")
    common.add_argument("--format", choices=("text", "json", "csv"), default="text")
    common.add_argument("-v", "--verbose", action="store_true")

    shape = argparse.ArgumentParser(add_help=False)
    shape.add_argument("--p-bits", type=int, default=64)
    shape.add_argument("--rows", type=int, default=5)
    shape.add_argument("--cols", type=int, default=3)
    shape.add_argument("--dims", help="shorthand MxN, overrides --rows/--cols")

    net = argparse.ArgumentParser(add_help=False)
    net.add_argument("--host", default="127.0.0.1")
    net.add_argument("--port", type=int, default=7797)
    net.add_argument("--timeout-ms", type=int, default=10_000)
    net.add_argument("--insecure-print-key", action="store_true",
                     help="also print the raw session key")

    parser = argparse.ArgumentParser(prog="rmpf", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-params", parents=[common, shape], help="write a parameter blob")
    p.add_argument("--out", required=True, help="output path, '-' for stdout")
    p.add_argument("--armor", action="store_true", help="write hex text instead of binary")
    p.set_defaults(func=cmd_gen_params)

    p = sub.add_parser("demo", parents=[common, shape], help="run both roles in-process")
    p.add_argument("--params", help="parameter file (binary or hex)")
    p.add_argument("--toy", action="store_true", help="use the embedded 5x3 worked example")
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser("vectors", parents=[common], help="replay and check the worked example")
    p.set_defaults(func=cmd_vectors)

    p = sub.add_parser("serve", parents=[common, net], help="responder: accept handshakes")
    p.add_argument("--params", help="only accept this parameter set")
    p.add_argument("--count", type=int, default=0, help="exit after N sessions (0: forever)")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("connect", parents=[common, shape, net], help="initiator: run one handshake")
    p.add_argument("--params", help="parameter file; generated fresh if omitted")
    p.set_defaults(func=cmd_connect)

    p = sub.add_parser(
        "attack", parents=[common], help="brute-force secret recovery cost curve",
        description="CSV columns: p, mode, samples, mean_trials, nominal_mean (half the search "
                    "space), ratio (mean/nominal), max_trials, space, found.")
    p.add_argument("--p", type=int, action="append", help="small prime (repeatable)")
    p.add_argument("--dims", default="3x2", help="MxN (default 3x2)")
    p.add_argument("--mode", choices=analysis.MODES, default="full")
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser(
        "bench", parents=[common, shape], help="time token/key computation",
        description="CSV columns: p_bits, m, n, iterations, token_time, derive_time, "
                    "naive_token_time (median seconds), modexp_factored, modexp_naive.")
    p.add_argument("--iterations", type=int, default=20)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except ParamsFormatError as exc:
        print(f"error: cannot parse parameters: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
