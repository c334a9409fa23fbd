"""Command line front end.

JSON in, JSON on stdout (or --out). Documents are the shapes read and
written by the serialize module; wherever a command expects a document it
also accepts a previous report that contains one, so commands chain through
files. Exit codes: 0 success, 2 malformed input, 3 precondition violated,
4 obstruction found where a factorization was requested (the report still
carries the certificate).

Heavy imports happen after argument parsing so that --threads can pin the
BLAS pool size before numpy starts it.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

_GENERATORS = "sphere|torus|klein|disc|telescope:N"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="linefield",
        description=(
            "Rank-one operator fields over discretized surfaces: analysis, "
            "line-bundle extraction, factorization obstructions, closure "
            "approximation, and telescope demos."
        ),
    )
    sub = p.add_subparsers(dest="command", required=True, metavar="command")

    def common(sp, seed=True):
        sp.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")
        sp.add_argument("--threads", type=int, metavar="N", help="bound BLAS worker threads")
        sp.add_argument("-v", "--verbose", action="store_true", help="progress notes on stderr")
        if seed:
            sp.add_argument("--seed", type=int, default=0, help="random seed (default 0)")

    def field_input(sp):
        sp.add_argument("--in", dest="inp", metavar="PATH", help="field document ('-' for stdin)")
        sp.add_argument(
            "--generate",
            metavar="NAME",
            help=f"use a built-in demonstration field: {_GENERATORS}",
        )
        sp.add_argument("--tol", type=float, default=1e-9, help="rank tolerance (default 1e-9)")

    def bundle_opts(sp):
        sp.add_argument("--rho", type=float, default=0.1, help="overlap floor (default 0.1)")
        sp.add_argument(
            "--margin",
            type=float,
            default=0.5235987755982988,
            help="triangle margin floor in radians (default pi/6)",
        )

    sp = sub.add_parser("analyze", help="validate a field and report per-fibre statistics")
    field_input(sp)
    sp.add_argument("--budget", type=float, default=None, help="edge variation budget to enforce")
    sp.add_argument(
        "--no-edge-variation",
        action="store_true",
        help="skip the edge variation sweep (large meshes)",
    )
    common(sp)

    sp = sub.add_parser("extract", help="extract the unit line section of a rank-one field")
    field_input(sp)
    common(sp, seed=False)

    sp = sub.add_parser("chern", help="integer class of the extracted line bundle")
    field_input(sp)
    bundle_opts(sp)
    common(sp, seed=False)

    sp = sub.add_parser("trivialize", help="gauge the section phases small; report holonomy")
    field_input(sp)
    bundle_opts(sp)
    common(sp, seed=False)

    sp = sub.add_parser("factor", help="global factor fields, or exit 4 with a certificate")
    field_input(sp)
    bundle_opts(sp)
    common(sp, seed=False)

    sp = sub.add_parser("synthesize", help="build the operator field of a line section")
    sp.add_argument("--in", dest="inp", metavar="PATH", required=True, help="section document")
    sp.add_argument("--zero-tol", type=float, default=1e-12, help="nowhere-zero floor")
    common(sp, seed=False)

    sp = sub.add_parser("approximate", help="stagewise approximation over a sublevel exhaustion")
    field_input(sp)
    sp.add_argument("--stages", type=int, default=None, help="number of stages (default: until exhausted)")
    sp.add_argument("--include-factors", action="store_true", help="embed factor matrices in the report")
    common(sp)

    sp = sub.add_parser("verdict", help="closure membership verdict for a field")
    field_input(sp)
    common(sp)

    tp = sub.add_parser("telescope", help="telescope truncations and phantom decisions")
    tsub = tp.add_subparsers(dest="telescope_command", required=True, metavar="action")

    sp = tsub.add_parser("build", help="build a truncation mesh")
    sp.add_argument("--depth", type=int, required=True, help="number of cylinders")
    sp.add_argument("--tail", metavar="D1,D2,...", help="covering degrees (default: 2,3,...,depth+1)")
    sp.add_argument("--far-size", type=int, default=6, help="far circle size (default 6)")
    sp.add_argument("--kind", choices=("lean", "section"), default="lean")
    common(sp, seed=False)

    sp = tsub.add_parser("decide", help="decide global triviality of gluing data")
    sp.add_argument("--in", dest="inp", metavar="PATH", help="gluing document")
    sp.add_argument("--depth", type=int, help="depth of canonical gluing data (with --constant)")
    sp.add_argument("--constant", type=int, default=1, help="constant relative winding (default 1)")
    sp.add_argument("--bound", type=int, default=10**6, help="gauge search bound (default 1e6)")
    common(sp, seed=False)

    sp = tsub.add_parser("demo", help="end-to-end phantom bundle demonstration")
    sp.add_argument("--depth", type=int, default=4)
    sp.add_argument("--bound", type=int, default=10**6)
    common(sp)

    sp = sub.add_parser("haagerup", help="factorization norm of an elementary operator")
    sp.add_argument("--in", dest="inp", metavar="PATH", required=True, help="representation document")
    sp.add_argument("--tol", type=float, default=1e-9)
    sp.add_argument("--iters", type=int, default=80)
    common(sp)

    sp = sub.add_parser("recover", help="recover the scalar relating two close rank-one pairs")
    sp.add_argument(
        "--in",
        dest="inp",
        metavar="PATH",
        required=True,
        help='JSON object with matrices "a", "b", "c", "d"',
    )
    sp.add_argument("--eps", type=float, required=True, help="certified distance bound, in (0, 1/3]")
    sp.add_argument("--norm-tol", type=float, default=1e-9)
    common(sp, seed=False)

    sp = sub.add_parser("cohomology", help="integer cohomology of a complex")
    sp.add_argument("--in", dest="inp", metavar="PATH", help="complex, field, or truncation report")
    sp.add_argument("--generate", metavar="NAME", help=f"use a demonstration base: {_GENERATORS}")
    common(sp, seed=False)

    sp = sub.add_parser(
        "question33-experiment",
        help="measurements on sequences of bounded-length operators (non-normative)",
    )
    sp.add_argument("--dim", type=int, default=3)
    sp.add_argument("--length", type=int, default=2, help="length of the sampled operators")
    sp.add_argument("--trials", type=int, default=20)
    sp.add_argument("--steps", type=int, default=6)
    common(sp)

    return p


def _load_doc(path: str, sz):
    if path == "-":
        try:
            return json.load(sys.stdin)
        except json.JSONDecodeError as e:
            from .errors import InputError

            raise InputError(f"stdin is not valid JSON: {e}") from None
    return sz.load(path)


def _pluck(doc, typ: str):
    """The document itself, or one nested in a report under its type name."""
    from .errors import InputError

    if isinstance(doc, dict):
        if doc.get("type") == typ:
            return doc
        inner = doc.get(typ)
        if isinstance(inner, dict) and inner.get("type") == typ:
            return inner
    raise InputError(f"expected a {typ} document, or a report containing one")


def _field_doc(args, rp, sz):
    from .errors import InputError

    if getattr(args, "generate", None):
        return rp.generate(args.generate, seed=getattr(args, "seed", 0))
    if args.inp:
        return _pluck(_load_doc(args.inp, sz), "field")
    raise InputError("provide --in PATH or --generate NAME")


def _run(args) -> dict:
    from . import reports as rp
    from . import serialize as sz

    cmd = args.command
    if cmd == "analyze":
        return rp.analyze(
            _field_doc(args, rp, sz),
            rank_tol=args.tol,
            continuity_budget=args.budget,
            seed=args.seed,
            edge_variation=not args.no_edge_variation,
        )
    if cmd == "extract":
        return rp.extract(_field_doc(args, rp, sz), rank_tol=args.tol)
    if cmd == "chern":
        return rp.chern(_field_doc(args, rp, sz), rank_tol=args.tol, rho=args.rho, margin=args.margin)
    if cmd == "trivialize":
        return rp.trivialize(
            _field_doc(args, rp, sz), rank_tol=args.tol, rho=args.rho, margin=args.margin
        )
    if cmd == "factor":
        return rp.factor(_field_doc(args, rp, sz), rank_tol=args.tol, rho=args.rho, margin=args.margin)
    if cmd == "synthesize":
        sec = _pluck(_load_doc(args.inp, sz), "section")
        return rp.synthesize(sec, zero_tol=args.zero_tol)
    if cmd == "approximate":
        return rp.approximate(
            _field_doc(args, rp, sz),
            n_stages=args.stages,
            rank_tol=args.tol,
            seed=args.seed,
            include_factors=args.include_factors,
        )
    if cmd == "verdict":
        return rp.verdict(_field_doc(args, rp, sz), rank_tol=args.tol, seed=args.seed)
    if cmd == "telescope":
        return _run_telescope(args, rp, sz)
    if cmd == "haagerup":
        rep = _pluck(_load_doc(args.inp, sz), "rep")
        return rp.haagerup(rep, rank_tol=args.tol, iters=args.iters, seed=args.seed)
    if cmd == "recover":
        from .errors import InputError

        doc = _load_doc(args.inp, sz)
        if not isinstance(doc, dict) or not all(k in doc for k in ("a", "b", "c", "d")):
            raise InputError('recover input must be a JSON object with keys "a", "b", "c", "d"')
        return rp.recover(doc["a"], doc["b"], doc["c"], doc["d"], eps=args.eps, norm_tol=args.norm_tol)
    if cmd == "cohomology":
        return rp.cohomology(_complex_doc(args, rp, sz))
    if cmd == "question33-experiment":
        return rp.length_limit_experiment(
            dim=args.dim,
            target_length=args.length,
            trials=args.trials,
            steps=args.steps,
            seed=args.seed,
        )
    raise AssertionError(f"unhandled command {cmd!r}")


def _complex_doc(args, rp, sz):
    from .errors import InputError

    if getattr(args, "generate", None):
        return rp.generate(args.generate)["base"]
    if not args.inp:
        raise InputError("provide --in PATH or --generate NAME")
    doc = _load_doc(args.inp, sz)
    if isinstance(doc, dict):
        if doc.get("type") == "complex":
            return doc
        for key in ("complex", "truncation"):
            inner = doc.get(key)
            if isinstance(inner, dict) and inner.get("type") == "complex":
                return inner
        inner = doc.get("base")
        if isinstance(inner, dict) and inner.get("type") == "complex":
            return inner
        field = doc.get("field")
        if isinstance(field, dict) and isinstance(field.get("base"), dict):
            return field["base"]
        if doc.get("type") == "field" and isinstance(doc.get("base"), dict):
            return doc["base"]
    raise InputError("expected a complex document, or a field or report containing one")


def _run_telescope(args, rp, sz) -> dict:
    from .errors import InputError

    cmd = args.telescope_command
    if cmd == "build":
        tail = None
        if args.tail:
            try:
                tail = [int(x) for x in args.tail.split(",") if x.strip()]
            except ValueError:
                raise InputError("--tail must be a comma-separated list of integers") from None
        return rp.telescope_build(args.depth, tail=tail, far_size=args.far_size, kind=args.kind)
    if cmd == "decide":
        if args.inp:
            gl = _pluck(_load_doc(args.inp, sz), "gluing")
        elif args.depth is not None:
            from . import telescope as tl

            gl = sz.encode_gluing(tl.canonical_gluing(args.depth, args.constant))
        else:
            raise InputError("provide --in PATH or --depth N")
        return rp.telescope_decide(gl, bound=args.bound)
    if cmd == "demo":
        return rp.telescope_demo(depth=args.depth, bound=args.bound, seed=args.seed)
    raise AssertionError(f"unhandled telescope action {cmd!r}")


def _emit(payload: dict, args) -> None:
    from . import serialize as sz

    text = sz.dumps(payload) + "\n"
    out = getattr(args, "out", None)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
        if getattr(args, "verbose", False):
            print(f"wrote {out}", file=sys.stderr)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    threads = getattr(args, "threads", None)
    if threads is not None:
        if threads < 1:
            print("error: --threads must be at least 1", file=sys.stderr)
            return 2
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(threads)

    from .errors import InputError, ObstructionFound, PreconditionError

    try:
        payload = _run(args)
    except InputError as e:
        _emit({"schema": 1, "status": "error", "kind": "input", "message": str(e)}, args)
        return 2
    except PreconditionError as e:
        _emit({"schema": 1, "status": "error", "kind": "precondition", "message": str(e)}, args)
        return 3
    except ObstructionFound as e:
        body = {
            "schema": 1,
            "status": "obstructed",
            "kind": "obstruction",
            "message": str(e),
            "certificate": e.certificate,
        }
        stage = getattr(e, "stage", None)
        if stage is not None:
            body["stage"] = stage
        _emit(body, args)
        return 4
    _emit(payload, args)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
