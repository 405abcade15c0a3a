"""Command-line surface: analyze, encode, repair, validate, simulate, reliability.

Every command is deterministic (same arguments, same bytes out) and can
emit its fully resolved configuration with ``--manifest PATH`` for
reproducibility.  Errors print one machine-parsable line to stderr
(``error: <kind>: <detail>``) and exit nonzero.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import codes, engine, gf256, reliability, sim
from .errors import DrckitError, ParameterError
from .stripe import DATA, Block, StripeGeometry, write_manifest

MiB = 1 << 20

DEFAULT_GATEWAY_MBPS = [200.0, 500.0, 1000.0, 2000.0]

DEFAULT_ANALYZE_CODES = [
    # n-k = 2
    "rs:6,4,6", "rs:6,4,3", "msr:6,4,6", "msr:6,4,3", "drc1:6,4,3",
    "rs:8,6,8", "rs:8,6,4", "msr:8,6,8", "msr:8,6,4", "drc1:8,6,4",
    # n-k = 3
    "rs:6,3,6", "rs:6,3,3", "msr:6,3,6", "msr:6,3,3", "drc2:6,3,3",
    "rs:9,6,9", "rs:9,6,3", "drc1:9,6,3",
    # n-k = 4
    "rs:9,5,9", "rs:9,5,3", "msr:8,4,8", "msr:8,4,4", "drc2:9,5,3",
]

DEFAULT_SIM_CODES = ["drc2:9,5,3", "rs:9,5,3", "drc1:9,6,3", "rs:9,6,3"]

_SIZE_UNITS = {"b": 1, "kib": 1 << 10, "mib": 1 << 20, "gib": 1 << 30}


def parse_size(text: str) -> int:
    t = text.strip().lower()
    for unit in ("gib", "mib", "kib", "b"):
        if t.endswith(unit):
            return int(float(t[: -len(unit)]) * _SIZE_UNITS[unit])
    return int(t)


def parse_code_token(token: str):
    try:
        family, params = token.strip().split(":")
        n, k, r = (int(x) for x in params.split(","))
    except ValueError as e:
        raise ParameterError(
            f"bad code token {token!r}; expected family:n,k,r "
            "with family in rs|msr|drc1|drc2"
        ) from e
    return family.lower(), n, k, r


def build_code(token: str) -> codes.CodeSpec:
    family, n, k, r = parse_code_token(token)
    return codes.make_code(family, n, k, r)


def _csv_rows(header: list[str], rows: list[list]) -> str:
    out = io.StringIO()
    w = csv.writer(out)
    w.writerow(header)
    w.writerows(rows)
    return out.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_run_manifest(args, parameters: dict) -> None:
    if getattr(args, "manifest", None):
        doc = {"command": args.command, "parameters": parameters}
        Path(args.manifest).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _cluster_config(args) -> sim.ClusterConfig:
    overrides = {
        "gateway_bandwidth_bps": getattr(args, "gateway_mbps_single", None),
        "gateway_efficiency": getattr(args, "gateway_efficiency", None),
        "disk_read_bytes_per_s": (
            args.disk_mibps * MiB if getattr(args, "disk_mibps", None) else None
        ),
        "inner_rack_bytes_per_s": (
            args.inner_mibps * MiB if getattr(args, "inner_mibps", None) else None
        ),
    }
    if getattr(args, "config", None):
        return sim.ClusterConfig.from_file(args.config, **overrides)
    return sim.ClusterConfig().with_overrides(**overrides)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_analyze(args) -> int:
    tokens = args.codes if args.codes is not None else DEFAULT_ANALYZE_CODES
    rows = []
    for token in tokens:
        family, n, k, r = parse_code_token(token)
        kind = {"rs": engine.RS, "msr": engine.MSR, "drc1": engine.DRC, "drc2": engine.DRC}.get(family)
        if kind is None:
            raise ParameterError(f"unknown family in {token!r}")
        label = {"rs": "RS", "msr": "MSR", "drc1": "DRC", "drc2": "DRC"}[family]
        name = f"{label}({n},{k},{r})"
        try:
            if family == "drc1" and (n % (n - k) or n // (n - k) != r):
                raise ParameterError(f"family 1 requires r = n/(n-k), got {token}")
            if family == "drc2" and (n % 3 or k != 2 * (n // 3) - 1 or r != 3):
                raise ParameterError(f"family 2 requires (3z, 2z-1, 3), got {token}")
            traffic = engine.analytic_cross_rack_traffic(kind, n, k, r)
            rows.append([name, n, k, r, n - k, f"{n / k:.4f}", f"{float(traffic):.4f}", ""])
        except ParameterError as e:
            rows.append([name, n, k, r, n - k, "", "", str(e)])
    text = _csv_rows(
        ["code", "n", "k", "r", "n_minus_k", "redundancy", "cross_rack_traffic_blocks", "error"],
        rows,
    )
    _emit(text, args.out)
    _emit_run_manifest(args, {"codes": tokens, "out": args.out})
    return 0


def cmd_encode(args) -> int:
    spec = build_code(args.code)
    strip = args.strip_size
    if strip is None:
        strip = 1024 if args.block_size % 1024 == 0 else args.block_size
    geom = StripeGeometry(
        block_size=args.block_size,
        strip_size=strip,
        subblocks_per_block=spec.subblocks,
    )
    paths = [Path(p) for p in args.inputs]
    if len(paths) == 1:
        raw = paths[0].read_bytes()
        want = spec.k * geom.block_size
        if len(raw) != want:
            raise ParameterError(
                f"input is {len(raw)} bytes; need exactly k*block_size = {want} "
                "(pad the input before encoding)"
            )
        payloads = [raw[i * geom.block_size : (i + 1) * geom.block_size] for i in range(spec.k)]
    elif len(paths) == spec.k:
        payloads = [p.read_bytes() for p in paths]
    else:
        raise ParameterError(f"give 1 file of k*block_size bytes or exactly k={spec.k} files")

    data = [Block(payload=pl, role=DATA, index=i) for i, pl in enumerate(payloads)]
    blocks = codes.encode_stripe(spec, data, geom)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for b in blocks:
        fname = f"block_{b.index:03d}.bin"
        (out_dir / fname).write_bytes(b.payload)
        entries.append({"index": b.index, "role": b.role, "path": fname, "failed": False})
    write_manifest(out_dir / "stripe_manifest.json", args.stripe_id,
                   codes.spec_to_doc(spec), geom, entries)
    print(f"wrote {len(blocks)} blocks and stripe_manifest.json to {out_dir}")
    _emit_run_manifest(args, {
        "code": args.code, "block_size": geom.block_size,
        "strip_size": geom.strip_size, "inputs": [str(p) for p in paths],
        "out_dir": str(out_dir), "stripe_id": args.stripe_id,
    })
    return 0


def cmd_repair(args) -> int:
    mpath = Path(args.stripe_manifest)
    manifest = json.loads(mpath.read_text())
    spec = codes.spec_from_doc(manifest["code"])
    g = manifest["geometry"]
    geom = StripeGeometry(
        block_size=g["block_size"], strip_size=g["strip_size"],
        subblocks_per_block=g["subblocks_per_block"],
    )
    marked = [e["index"] for e in manifest["blocks"] if e.get("failed")]
    if args.failed is not None:
        marked = sorted(set(marked) | {args.failed})
    if len(marked) != 1:
        raise DrckitError(
            f"exactly one failed block required, found {marked or 'none'}"
        )
    failed = marked[0]

    available = {}
    for entry in manifest["blocks"]:
        if entry["index"] == failed:
            continue
        available[entry["index"]] = Block(
            payload=(mpath.parent / entry["path"]).read_bytes(),
            role=entry["role"], index=entry["index"],
        )
    mode = engine.FLAT if spec.r == spec.n else engine.HIERARCHICAL
    layout = engine.place_stripe(spec, mode)
    plan = codes.plan_repair(spec, failed, layout)
    block, report = codes.execute_repair(plan, available, geom)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    restored = out_dir / f"block_{failed:03d}.restored.bin"
    restored.write_bytes(block.payload)
    (out_dir / "repair_traffic.csv").write_text(report.to_csv())
    print(
        f"restored block {failed} ({len(block.payload)} bytes); cross-rack "
        f"{report.total_cross_rack_bytes} B, inner-rack {report.total_inner_rack_bytes} B"
    )
    _emit_run_manifest(args, {
        "stripe_manifest": str(mpath), "failed": failed, "out_dir": str(out_dir),
    })
    return 0


def cmd_validate(args) -> int:
    if args.code_file:
        spec = codes.load_spec(Path(args.code_file))
    elif args.code:
        spec = build_code(args.code)
    else:
        raise ParameterError("give --code or --code-file")
    report = codes.validate_code(spec)
    _emit(report.summary() + "\n", args.out)
    _emit_run_manifest(args, {"code": args.code, "code_file": args.code_file})
    return 0 if report.passed else 1


def cmd_simulate(args) -> int:
    config = _cluster_config(args)
    tokens = args.codes if args.codes is not None else DEFAULT_SIM_CODES
    specs = [build_code(t) for t in tokens]
    gateways = args.gateway_mbps or DEFAULT_GATEWAY_MBPS
    block = parse_size(args.block_size) if args.block_size else None
    strip = parse_size(args.strip_size) if args.strip_size else None

    if args.kind == "node-recovery":
        rows = []
        for mbps in gateways:
            cfg = config.with_overrides(gateway_bandwidth_bps=mbps * 1e6)
            for spec in specs:
                geom = sim.default_geometry(spec, block, strip)
                thr = sim.simulate_node_recovery(spec, cfg, args.stripes, geom)
                rows.append([mbps, spec.name, f"{thr / MiB:.6f}"])
        text = _csv_rows(["gateway_mbps", "code", "recovery_throughput_MiBps"], rows)
    elif args.kind == "degraded-read":
        rows = []
        for mbps in gateways:
            cfg = config.with_overrides(gateway_bandwidth_bps=mbps * 1e6)
            for spec in specs:
                geom = sim.default_geometry(spec, block, strip)
                t = sim.simulate_degraded_read(spec, cfg, geom)
                rows.append([mbps, spec.name, f"{t:.6f}"])
        text = _csv_rows(["gateway_mbps", "code", "degraded_read_s"], rows)
    elif args.kind == "sweep":
        if not args.values:
            raise ParameterError("sweep needs --values")
        if args.variable == sim.SWEEP_GATEWAY:
            values = [float(v) * 1e6 for v in args.values.split(",")]
        else:
            values = [parse_size(v) for v in args.values.split(",")]
        all_rows = []
        for spec in specs:
            all_rows.extend(
                sim.sweep(spec, config, args.variable, values, args.stripes, block, strip)
            )
        text = sim.sweep_to_csv(all_rows)
    elif args.kind == "breakdown":
        entries = []
        for spec in specs:
            geom = sim.default_geometry(spec, block, strip)
            entries.append((spec.name, sim.simulate_block_repair(spec, config, geom)))
        text = sim.breakdown_to_csv(entries)
    else:
        raise ParameterError(f"unknown simulation kind {args.kind!r}")

    _emit(text, args.out)
    _emit_run_manifest(args, {
        "kind": args.kind, "codes": [s.name for s in specs],
        "gateway_mbps": gateways, "stripes": args.stripes,
        "block_size": block, "strip_size": strip,
        "variable": getattr(args, "variable", None),
        "values": getattr(args, "values", None),
        "cluster_config": {
            "gateway_efficiency": config.gateway_efficiency,
            "disk_read_bytes_per_s": config.disk_read_bytes_per_s,
            "inner_rack_bytes_per_s": config.inner_rack_bytes_per_s,
        },
    })
    return 0


def cmd_reliability(args) -> int:
    mttf = [float(x) for x in args.inv_lambda1.split(",")]
    gammas = [float(x) for x in args.gamma_gbps.split(",")]
    rows = reliability.mttdl_table(mttf, gammas, args.lambda2, args.capacity_tib)
    _emit(reliability.table_to_csv(rows), args.out)
    _emit_run_manifest(args, {
        "inv_lambda1": mttf, "gamma_gbps": gammas,
        "lambda2": args.lambda2, "capacity_tib": args.capacity_tib,
    })
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_manifest_flag(p: argparse.ArgumentParser) -> None:
    p.add_argument("--manifest", metavar="PATH",
                   help="write the resolved run configuration to PATH")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="drckit",
        description="Rack-aware erasure coding toolkit: codes, repair, simulation, reliability.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="cross-rack repair traffic of code configurations")
    p.add_argument("--codes", nargs="*", help="code tokens like drc2:9,5,3 (default: built-in set)")
    p.add_argument("--out", help="CSV output path (default: stdout)")
    _add_manifest_flag(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("encode", help="encode input data into a stripe of block files")
    p.add_argument("inputs", nargs="+", help="one file of k*block_size bytes, or k block files")
    p.add_argument("--code", required=True, help="code token, e.g. drc2:9,5,3")
    p.add_argument("--block-size", type=parse_size, default=4096)
    p.add_argument("--strip-size", type=parse_size, default=None)
    p.add_argument("--out-dir", default="stripe_out")
    p.add_argument("--stripe-id", default="stripe-0")
    _add_manifest_flag(p)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("repair", help="rebuild one failed block from a stripe manifest")
    p.add_argument("stripe_manifest", help="path to stripe_manifest.json")
    p.add_argument("--failed", type=int, default=None, help="failed block index")
    p.add_argument("--out-dir", default=".")
    _add_manifest_flag(p)
    p.set_defaults(func=cmd_repair)

    p = sub.add_parser("validate", help="MDS / exact-repair / rack-failure checks")
    p.add_argument("--code", help="code token to construct and validate")
    p.add_argument("--code-file", help="serialized code spec (JSON) to validate")
    p.add_argument("--out", help="report output path (default: stdout)")
    _add_manifest_flag(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("simulate", help="cluster performance model")
    p.add_argument("--kind", required=True,
                   choices=["node-recovery", "degraded-read", "sweep", "breakdown"])
    p.add_argument("--codes", nargs="*", help="code tokens (default: built-in set)")
    p.add_argument("--gateway-mbps", type=float, nargs="*",
                   help="gateway bandwidth grid in Mb/s (default: 200 500 1000 2000)")
    p.add_argument("--stripes", type=int, default=20)
    p.add_argument("--block-size", help="e.g. 64MiB")
    p.add_argument("--strip-size", help="e.g. 256KiB")
    p.add_argument("--variable", choices=[sim.SWEEP_STRIP, sim.SWEEP_BLOCK, sim.SWEEP_GATEWAY],
                   help="swept variable (kind=sweep)")
    p.add_argument("--values", help="comma-separated sweep values (sizes or Mb/s)")
    p.add_argument("--config", help="cluster config JSON file")
    p.add_argument("--gateway-efficiency", type=float, default=None)
    p.add_argument("--disk-mibps", type=float, default=None)
    p.add_argument("--inner-mibps", type=float, default=None)
    p.add_argument("--out", help="CSV output path (default: stdout)")
    _add_manifest_flag(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reliability", help="MTTDL tables for flat vs hierarchical placement")
    p.add_argument("--inv-lambda1", default="2,4,6,8,10", help="node MTTF grid in years")
    p.add_argument("--gamma-gbps", default="1", help="cross-rack bandwidth grid in Gb/s")
    p.add_argument("--lambda2", type=float, default=0.005, help="correlated failure rate per year")
    p.add_argument("--capacity-tib", type=float, default=1.0)
    p.add_argument("--out", help="CSV output path (default: stdout)")
    _add_manifest_flag(p)
    p.set_defaults(func=cmd_reliability)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DrckitError, gf256.GFDomainError, gf256.SingularMatrixError, OSError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
