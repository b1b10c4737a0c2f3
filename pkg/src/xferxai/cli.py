"""Command-line entry point.

Every subcommand is a thin client of the HTTP service: it builds a
request, posts it (in-process by default, over the network when
--server is given), and writes the response documents to disk. All
numeric work happens behind the service endpoints, so CLI runs and
API calls cannot drift apart.

Exit codes: 0 success, 1 numeric or convergence failure, 2 usage or
IO error.
"""

import argparse
import csv
import sys
from pathlib import Path

import httpx

from . import jsonio

EXIT_OK = 0
EXIT_NUMERIC = 1
EXIT_USAGE = 2


def _client(server):
    if server:
        return httpx.Client(base_url=server, timeout=600.0)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient

    from .service.app import create_app

    return TestClient(create_app(), raise_server_exceptions=False)


def _post(args, path, payload):
    """POST and translate HTTP failures into exit codes."""
    with _client(getattr(args, "server", None)) as client:
        response = client.post(path, json=payload)
    if response.status_code == 200:
        return response.json()
    try:
        detail = response.json().get("detail", response.text)
    except ValueError:
        detail = response.text
    print(f"error: {detail}", file=sys.stderr)
    if response.status_code in (400, 422):
        raise SystemExit(EXIT_USAGE)
    raise SystemExit(EXIT_NUMERIC)


def _write(path, doc, label):
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    jsonio.dump(doc, path)
    print(f"wrote {label}: {path}")


def _require_manifest(args):
    path = Path(args.manifest)
    if not path.exists():
        print(f"error: manifest not found: {path}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)
    return str(path)


def _sidecar(out, suffix):
    out = Path(out)
    return out.with_name(out.stem + suffix)


def cmd_fit(args):
    payload = {
        "manifest_path": _require_manifest(args),
        "domain": args.domain,
        "folds": args.folds,
        "seed": args.seed,
    }
    result = _post(args, "/api/fit", payload)
    _write(args.out, result["explainer"], "explainer")
    _write(_sidecar(args.out, ".report.json"), result["report"], "report")
    report = result["report"]
    print(f"faithfulness: R2 = {report['r2_mean']:.4f} +/- {report['r2_std']:.4f}, "
          f"MSE = {report['mse_mean']:.6g} ({report['folds']}-fold)")
    return EXIT_OK


def cmd_transfer(args):
    if args.lambda_ is not None and args.lambda_ < 0:
        print("error: --lambda must be >= 0", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)
    if (args.lambda_ is None) == (args.lambda_grid is None):
        print("error: provide exactly one of --lambda, --lambda-grid",
              file=sys.stderr)
        raise SystemExit(EXIT_USAGE)
    payload = {
        "manifest_path": _require_manifest(args),
        "seed": args.seed,
        "snap": not args.no_snap,
        "penalize_intercept": not args.free_intercept,
        "max_iter": args.max_iter,
    }
    if args.kind:
        payload["kind"] = args.kind
    if args.lambda_ is not None:
        payload["lambda"] = args.lambda_
    else:
        try:
            grid = [float(v) for v in args.lambda_grid.split(",") if v.strip()]
        except ValueError:
            print(f"error: bad --lambda-grid {args.lambda_grid!r}",
                  file=sys.stderr)
            raise SystemExit(EXIT_USAGE) from None
        if any(v < 0 for v in grid):
            print("error: lambda values must be >= 0", file=sys.stderr)
            raise SystemExit(EXIT_USAGE)
        payload["lambda_grid"] = grid
    thresholds = {}
    if args.snap_eps_delta is not None:
        thresholds["delta_eps"] = args.snap_eps_delta
    if args.snap_eps_scale is not None:
        thresholds["scale_eps"] = args.snap_eps_scale
    if args.snap_eps_map is not None:
        thresholds["map_eps"] = args.snap_eps_map
    if thresholds:
        payload["thresholds"] = thresholds
    result = _post(args, "/api/transfer", payload)
    _write(args.out, result["fit"], "transfer fit")
    if result.get("grid"):
        _write(_sidecar(args.out, ".grid.json"), result["grid"], "lambda grid")
        print(f"{'lambda':>10} {'L_original':>12} {'L_target':>12} "
              f"{'L_sparsity':>12}")
        for row in result["grid"]:
            print(f"{row['lambda']:>10g} {row['l_original']:>12.6g} "
                  f"{row['l_target']:>12.6g} {row['l_sparsity']:>12.6g}")
        print(f"best lambda by data loss: {result['best_lambda']:g}")
    return EXIT_OK


def cmd_compose(args):
    for p in args.fits:
        if not Path(p).exists():
            print(f"error: file not found: {p}", file=sys.stderr)
            raise SystemExit(EXIT_USAGE)
    result = _post(args, "/api/compose", {"paths": [str(p) for p in args.fits]})
    _write(args.out, result["transform"], "composite transform")
    diff = result["verification"]["max_abs_difference"]
    print(f"sequential vs composite max abs difference: {diff:.3g}")
    return EXIT_OK


def cmd_evaluate(args):
    if not Path(args.fit).exists():
        print(f"error: fit file not found: {args.fit}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)
    payload = {
        "fit_path": str(args.fit),
        "manifest_path": _require_manifest(args),
        "folds": args.folds,
        "seed": args.seed,
    }
    result = _post(args, "/api/evaluate", payload)
    _write(args.out, result, "evaluation")
    for domain in ("original", "target"):
        single = result["single"][domain]
        transferable = result["transferable"][domain]
        print(f"{domain:>9}: single R2 {single['r2_mean']:.2f} +/- "
              f"{single['r2_std']:.2f}   transferable R2 "
              f"{transferable['r2_mean']:.2f} +/- {transferable['r2_std']:.2f}"
              f"   gap {result['r2_gap'][domain]:.3f}")
    return EXIT_OK


def _parse_instance_line(line, line_number):
    tokens = line.replace(",", " ").split()
    values = []
    for token in tokens:
        try:
            values.append(float(token))
        except ValueError:
            print(f"error: line {line_number}: cannot parse {token!r} as a "
                  "number", file=sys.stderr)
            raise SystemExit(EXIT_USAGE) from None
    return values


def cmd_simulate(args):
    if not Path(args.fit).exists():
        print(f"error: fit file not found: {args.fit}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)
    source = sys.stdin if args.values is None else open(args.values)
    try:
        instances = []
        for i, line in enumerate(source, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            instances.append(_parse_instance_line(line, i))
    finally:
        if source is not sys.stdin:
            source.close()
    if not instances:
        print("error: no instances on input", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)
    result = _post(args, "/api/simulate",
                   {"fit_path": str(args.fit), "instances": instances})
    print(result["text"])
    return EXIT_OK


def cmd_bundle(args):
    if not Path(args.fit).exists():
        print(f"error: fit file not found: {args.fit}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)
    instances = []
    systems = []
    if args.instances:
        path = Path(args.instances)
        if not path.exists():
            print(f"error: instance file not found: {path}", file=sys.stderr)
            raise SystemExit(EXIT_USAGE)
        fit_doc = jsonio.load(args.fit)
        names = [a["name"] for a in fit_doc["derived_target"]["schema"]]
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            for i, row in enumerate(reader):
                try:
                    instances.append([float(row[name]) for name in names])
                    systems.append(float(row[args.system_column]))
                except (KeyError, TypeError) as exc:
                    print(f"error: row {i}: missing column {exc}",
                          file=sys.stderr)
                    raise SystemExit(EXIT_USAGE) from None
                except ValueError as exc:
                    print(f"error: row {i}: {exc}", file=sys.stderr)
                    raise SystemExit(EXIT_USAGE) from None
    result = _post(args, "/api/bundle", {
        "fit_path": str(args.fit),
        "instances": instances,
        "system_predictions": systems,
    })
    _write(args.out, result, "ui bundle")
    return EXIT_OK


def cmd_records(args):
    path = Path(args.input)
    if not path.exists():
        print(f"error: records file not found: {path}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = ("participant", "aligned", "misaligned", "explainer")
        for i, row in enumerate(reader):
            try:
                records.append({
                    "participant_label": float(row["participant"]),
                    "aligned_xai_label": float(row["aligned"]),
                    "misaligned_xai_label": float(row["misaligned"]),
                    "explainer_label": float(row["explainer"]),
                })
            except (KeyError, TypeError):
                missing = [c for c in required if row.get(c) in (None, "")]
                print(f"error: row {i}: missing columns {missing}",
                      file=sys.stderr)
                raise SystemExit(EXIT_USAGE) from None
            except ValueError as exc:
                print(f"error: row {i}: {exc}", file=sys.stderr)
                raise SystemExit(EXIT_USAGE) from None
    result = _post(args, "/api/records",
                   {"records": records, "epsilon": args.epsilon})
    _write(args.out, result["summary"], "metrics summary")
    table_path = _sidecar(args.out, ".tsv") if args.table is None else args.table
    Path(table_path).write_text(result["table"], encoding="utf-8")
    print(f"wrote per-record table: {table_path}")
    return EXIT_OK


def cmd_serve(args):
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="xferxai",
        description="Fit sparse linear surrogate explainers and affine "
                    "transfers relating them across subspaces, tasks, and "
                    "attribute sets.",
    )
    parser.add_argument("--server", default=None,
                        help="URL of a running service; default runs in-process")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a single-domain explainer")
    p.add_argument("--manifest", required=True)
    p.add_argument("--domain", choices=["original", "target"],
                   default="original")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("transfer", help="jointly fit explainer and transfer")
    p.add_argument("--manifest", required=True)
    p.add_argument("--kind", choices=["subspace", "task", "attributes"])
    p.add_argument("--lambda", dest="lambda_", type=float, default=None)
    p.add_argument("--lambda-grid", default=None,
                   help="comma-separated values, e.g. 0.1,1,10")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--snap-eps-delta", type=float, default=None)
    p.add_argument("--snap-eps-scale", type=float, default=None)
    p.add_argument("--snap-eps-map", type=float, default=None)
    p.add_argument("--no-snap", action="store_true")
    p.add_argument("--free-intercept", action="store_true",
                   help="exclude the centroid entry from the sparsity loss")
    p.add_argument("--max-iter", type=int, default=1000)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser("compose",
                       help="compose transfers, first listed applied first")
    p.add_argument("fits", nargs="+")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compose)

    p = sub.add_parser("evaluate", help="k-fold single vs transferable scores")
    p.add_argument("--fit", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("simulate",
                       help="explain attribute values read from stdin")
    p.add_argument("--fit", required=True)
    p.add_argument("--values", default=None,
                   help="file of value lines; default reads stdin")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bundle", help="export a viewer bundle")
    p.add_argument("--fit", required=True)
    p.add_argument("--instances", default=None,
                   help="CSV with target-schema columns")
    p.add_argument("--system-column", default="system",
                   help="prediction column in the instances CSV")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bundle)

    p = sub.add_parser("records", help="log metrics over a responses CSV")
    p.add_argument("--input", required=True,
                   help="CSV with participant,aligned,misaligned,explainer")
    p.add_argument("--epsilon", type=float, default=1e-6)
    p.add_argument("--table", default=None, help="per-record TSV path")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_records)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
