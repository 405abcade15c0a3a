"""Deterministic performance model of a gateway-connected hierarchical cluster.

All cross-rack traffic of a repair crosses one shared gateway link whose
effective throughput is nominal bandwidth times an efficiency factor.
Stage durations are bytes moved divided by stage throughput plus fixed
costs; encode/decode costs use a fixed + per-byte fit calibrated against
measured single-block repair breakdowns of the two nine-node DRC codes
(63 MiB and 64 MiB blocks at a 1 Gb/s gateway).

Node recovery models many stripes sharing the cluster: the gateway and
each node's disk serialize across stripes, while targets and relayers
rotate per stripe so compute stages spread over the eligible nodes.
Strip-level parallelism has a bounded width; very small strips pay a
per-strip access overhead and very large strips under-fill the parallel
lanes.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, fields, replace

import numpy as np

from . import codes as codes_mod
from . import engine
from .errors import GeometryError, ParameterError
from .stripe import StripeGeometry

MiB = 1 << 20

# two-point fits against the measured repair breakdown (63 MiB vs 64 MiB block)
_NE_SLOPE = (0.068 - 0.067) / (64.0 - 63.0)          # s per MiB read
_NE_FIXED = 0.067 - 63.0 * _NE_SLOPE
_RE_SLOPE = (0.191 - 0.145) / (63.0 - 32.0)          # s per MiB of relayer output
_RE_FIXED = 0.145 - 32.0 * _RE_SLOPE
_DE_SLOPE = (0.443 - 0.320) / (189.0 - 128.0)        # s per MiB of cancelled input
_DE_FIXED = 0.320 - 128.0 * _DE_SLOPE


@dataclass(frozen=True)
class ClusterConfig:
    racks: int | None = None                 # None: adopt the code's rack count
    nodes_per_rack: int | None = None
    gateway_bandwidth_bps: float = 1e9       # nominal, bits/s
    gateway_efficiency: float = 0.953
    inner_rack_bytes_per_s: float = 1090.0 * MiB
    disk_read_bytes_per_s: float = 177.0 * MiB
    node_encode_fixed_s: float = _NE_FIXED
    node_encode_s_per_mib: float = _NE_SLOPE
    relayer_encode_fixed_s: float = _RE_FIXED
    relayer_encode_s_per_mib: float = _RE_SLOPE
    decode_fixed_s: float = _DE_FIXED
    decode_s_per_mib: float = _DE_SLOPE
    per_strip_overhead_s: float = 0.0012
    parallel_width: int = 32
    block_access_overhead_s: float = 0.05

    def __post_init__(self):
        if self.gateway_bandwidth_bps <= 0 or self.inner_rack_bytes_per_s <= 0 \
                or self.disk_read_bytes_per_s <= 0:
            raise ParameterError("all rates must be positive")
        if not 0 < self.gateway_efficiency <= 1:
            raise ParameterError("gateway efficiency must be in (0, 1]")

    @property
    def gateway_bytes_per_s(self) -> float:
        return self.gateway_bandwidth_bps * self.gateway_efficiency / 8.0

    def with_overrides(self, **kw) -> "ClusterConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    @classmethod
    def from_file(cls, path, **flag_overrides) -> "ClusterConfig":
        with open(path) as fh:
            doc = json.load(fh)
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ParameterError(f"unknown cluster config keys: {sorted(unknown)}")
        cfg = cls(**doc)
        return cfg.with_overrides(**flag_overrides)


STAGES = (
    "disk_read",
    "node_encode",
    "inner_rack_transfer",
    "relayer_encode",
    "cross_rack_transfer",
    "decode",
)

SEQUENTIAL = "sequential"
PIPELINED = "pipelined"


@dataclass
class RepairTimeline:
    disk_read: float
    node_encode: float
    inner_rack_transfer: float
    relayer_encode: float
    cross_rack_transfer: float
    decode: float
    access_overhead: float
    mode: str = PIPELINED

    def stage(self, name: str) -> float:
        return getattr(self, name)

    @property
    def stages(self) -> dict[str, float]:
        d = {name: getattr(self, name) for name in STAGES}
        d["access_overhead"] = self.access_overhead
        return d

    @property
    def sequential_total(self) -> float:
        return sum(self.stages.values())

    @property
    def pipelined_total(self) -> float:
        return max(getattr(self, name) for name in STAGES) + self.access_overhead

    @property
    def total(self) -> float:
        return self.pipelined_total if self.mode == PIPELINED else self.sequential_total


@dataclass
class RepairProfile:
    """Byte movement of one single-block repair, per role."""

    block_bytes: int
    cross_bytes: int             # total over the shared gateway
    inner_stage_bytes: int       # heaviest single-node inner-rack receive leg
    inner_node_max: int          # heaviest per-node inner traffic (for aggregates)
    disk_node_max: int           # heaviest single-node disk read
    node_encode_bytes: int       # bytes a node reads for NodeEncode (0: no encoding)
    relayer_output_max: int      # heaviest per-relayer shipment (0: no relayers)
    target_input_bytes: int
    eligible_targets: int        # surviving nodes in the failed rack
    relayer_pool: int            # nodes per rack eligible to relay


def _profile_from_plan(spec, plan, block_bytes: int) -> RepairProfile:
    sub = block_bytes // plan.subblocks
    w = plan.n // plan.r
    rack_of = lambda node: plan.target_rack if node == engine.TARGET else node // w

    cross = 0
    disk = {}
    inner_sent = {}
    inner_recv = {}
    for send in plan.sends:
        rows = np.atleast_2d(send.rows)
        touched = {c for row in rows for c in np.nonzero(row)[0]}
        disk[send.node] = disk.get(send.node, 0) + len(touched) * sub
        if send.dest != send.node:
            nbytes = rows.shape[0] * sub
            if rack_of(send.node) == rack_of(send.dest):
                inner_sent[send.node] = inner_sent.get(send.node, 0) + nbytes
                inner_recv[send.dest] = inner_recv.get(send.dest, 0) + nbytes
            else:
                cross += nbytes
    relay_out = 0
    for relay in plan.relays:
        nbytes = relay.matrix.shape[0] * sub
        cross += nbytes
        relay_out = max(relay_out, nbytes)
    target_in = len(plan.decode_inputs) * sub

    relayer_recv_max = max(
        (inner_recv.get(rl.node, 0) for rl in plan.relays), default=0
    )
    if plan.relays:
        inner_stage = relayer_recv_max
    else:
        inner_stage = inner_recv.get(engine.TARGET, 0)
    inner_node_max = max(
        [0]
        + [inner_sent.get(n, 0) + inner_recv.get(n, 0) for n in set(inner_sent) | set(inner_recv)]
    )

    return RepairProfile(
        block_bytes=block_bytes,
        cross_bytes=cross,
        inner_stage_bytes=inner_stage,
        inner_node_max=inner_node_max,
        disk_node_max=max(disk.values(), default=0),
        node_encode_bytes=block_bytes if spec.family in (codes_mod.FAMILY_F1, codes_mod.FAMILY_F2) else 0,
        relayer_output_max=relay_out,
        target_input_bytes=target_in,
        eligible_targets=max(1, w - 1),
        relayer_pool=w,
    )


def _profile_msr(spec, block_bytes: int) -> RepairProfile:
    # analytic model: n-1 helpers each read a block and ship one encoded
    # subblock of B/(n-k); local helpers reach the target inside the rack
    n, k, r = spec.n, spec.k, spec.r
    sub = block_bytes // (n - k)
    w = n // r
    local_helpers = w - 1 if r < n else 0
    cross = (n - 1 - local_helpers) * sub
    return RepairProfile(
        block_bytes=block_bytes,
        cross_bytes=cross,
        inner_stage_bytes=local_helpers * sub,
        inner_node_max=max(local_helpers * sub, sub if local_helpers else 0),
        disk_node_max=block_bytes,
        node_encode_bytes=block_bytes,
        relayer_output_max=0,
        target_input_bytes=(n - 1) * sub,
        eligible_targets=max(1, w - 1),
        relayer_pool=w,
    )


def repair_profile(spec, block_bytes: int, failed_index: int = 0) -> RepairProfile:
    if spec.family == codes_mod.FAMILY_MSR:
        return _profile_msr(spec, block_bytes)
    if spec.repair_tables is None:
        raise ParameterError(f"{spec.name} has no repair plans to profile")
    plan = spec.repair_tables[failed_index]
    return _profile_from_plan(spec, plan, block_bytes)


def default_geometry(spec, block_bytes: int | None = None,
                     strip_bytes: int | None = None) -> StripeGeometry:
    """Production-scale defaults: 64 MiB / 256 KiB, shrunk to 63 MiB / 252 KiB
    for codes that split blocks three ways."""
    s = spec.subblocks
    if block_bytes is None:
        block_bytes = 63 * MiB if s == 3 else 64 * MiB
    if strip_bytes is None:
        strip_bytes = 252 * 1024 if s == 3 else 256 * 1024
    return StripeGeometry(block_size=block_bytes, strip_size=strip_bytes,
                          subblocks_per_block=s)


def _check_topology(spec, config: ClusterConfig) -> None:
    if config.racks is not None and config.racks != spec.r:
        raise ParameterError(
            f"cluster has {config.racks} racks but {spec.name} needs {spec.r}"
        )
    if config.nodes_per_rack is not None and config.nodes_per_rack != spec.n // spec.r:
        raise ParameterError(
            f"cluster has {config.nodes_per_rack} nodes/rack but {spec.name} "
            f"needs {spec.n // spec.r}"
        )


def simulate_block_repair(spec, config: ClusterConfig,
                          geom: StripeGeometry | None = None,
                          failed_index: int = 0) -> RepairTimeline:
    """Stage-by-stage timeline of repairing one failed block."""
    _check_topology(spec, config)
    if geom is None:
        geom = default_geometry(spec)
    prof = repair_profile(spec, geom.block_size, failed_index)

    n_strips = geom.strips_per_block
    scale = config.parallel_width / min(n_strips, config.parallel_width)
    overhead = (
        n_strips * config.per_strip_overhead_s / config.parallel_width
        + config.block_access_overhead_s
    )

    disk = prof.disk_node_max / config.disk_read_bytes_per_s
    if prof.node_encode_bytes:
        node_enc = (config.node_encode_fixed_s
                    + config.node_encode_s_per_mib * prof.node_encode_bytes / MiB) * scale
    else:
        node_enc = 0.0
    inner = prof.inner_stage_bytes / config.inner_rack_bytes_per_s
    if prof.relayer_output_max:
        rel_enc = (config.relayer_encode_fixed_s
                   + config.relayer_encode_s_per_mib * prof.relayer_output_max / MiB) * scale
    else:
        rel_enc = 0.0
    cross = prof.cross_bytes / config.gateway_bytes_per_s
    cancelled = max(0, prof.target_input_bytes - prof.block_bytes)
    dec = (config.decode_fixed_s + config.decode_s_per_mib * cancelled / MiB) * scale

    return RepairTimeline(
        disk_read=disk,
        node_encode=node_enc,
        inner_rack_transfer=inner,
        relayer_encode=rel_enc,
        cross_rack_transfer=cross,
        decode=dec,
        access_overhead=overhead,
    )


def recovery_assignments(spec, failed_index: int, stripes: int):
    """Round-robin target and relayer choices for a multi-stripe node
    recovery; consecutive stripes never reuse a target when the failed rack
    has more than one survivor."""
    w = spec.n // spec.r
    rho_f = failed_index // w
    pool = [j for j in spec.rack_nodes(rho_f) if j != failed_index]
    out = []
    for s in range(stripes):
        target = pool[s % len(pool)]
        relayers = {
            rho: spec.rack_nodes(rho)[s % w]
            for rho in range(spec.r)
            if rho != rho_f
        }
        out.append((target, relayers))
    return out


def simulate_node_recovery(spec, config: ClusterConfig, stripes: int = 20,
                           geom: StripeGeometry | None = None) -> float:
    """Recovery throughput (bytes/s) for repairing ``stripes`` blocks of one
    failed node.

    The gateway and the per-node disks serialize across stripes; compute
    stages spread over rotated targets/relayers, so a single stripe's
    pipeline is the floor.
    """
    if stripes < 1:
        raise ParameterError("need at least one stripe")
    _check_topology(spec, config)
    if geom is None:
        geom = default_geometry(spec)
    prof = repair_profile(spec, geom.block_size)
    tl = simulate_block_repair(spec, config, geom)

    gateway = stripes * prof.cross_bytes / config.gateway_bytes_per_s
    disk = stripes * prof.disk_node_max / config.disk_read_bytes_per_s
    inner = stripes * prof.inner_node_max / config.inner_rack_bytes_per_s
    decode_agg = stripes / prof.eligible_targets * tl.decode
    relay_agg = (stripes / prof.relayer_pool) * tl.relayer_encode
    encode_agg = stripes * tl.node_encode
    strip_agg = stripes * tl.access_overhead

    total = max(
        gateway, disk, inner, decode_agg, relay_agg, encode_agg, strip_agg,
        tl.pipelined_total,
    )
    return stripes * geom.block_size / total


def simulate_degraded_read(spec, config: ClusterConfig,
                           geom: StripeGeometry | None = None) -> float:
    """Latency (s) from issuing a degraded read until the client holds the
    reconstructed block; the client sits in the target's rack, so delivery
    rides the inner-rack network."""
    _check_topology(spec, config)
    if geom is None:
        geom = default_geometry(spec)
    tl = simulate_block_repair(spec, config, geom)
    delivery = geom.block_size / config.inner_rack_bytes_per_s
    return tl.pipelined_total + delivery


SWEEP_STRIP = "strip_size"
SWEEP_BLOCK = "block_size"
SWEEP_GATEWAY = "gateway_bandwidth"

_SWEEP_LABELS = {
    SWEEP_STRIP: "strip_size_bytes",
    SWEEP_BLOCK: "block_size_bytes",
    SWEEP_GATEWAY: "gateway_bandwidth_bps",
}


def sweep(spec, config: ClusterConfig, variable: str, values,
          stripes: int = 20, block_bytes: int | None = None,
          strip_bytes: int | None = None) -> list[dict]:
    """One recovery-throughput row per swept value; rows for invalid
    geometry carry the error instead of a number."""
    values = list(values)
    if not values:
        raise ParameterError("sweep range is empty")
    if variable not in (SWEEP_STRIP, SWEEP_BLOCK, SWEEP_GATEWAY):
        raise ParameterError(f"unknown sweep variable {variable!r}")
    rows = []
    for value in values:
        row = {"variable": _SWEEP_LABELS[variable], "value": value, "code": spec.name,
               "recovery_throughput_mibps": "", "error": ""}
        try:
            if variable == SWEEP_STRIP:
                geom = default_geometry(spec, block_bytes, int(value))
                cfg = config
            elif variable == SWEEP_BLOCK:
                geom = default_geometry(spec, int(value), strip_bytes)
                cfg = config
            else:
                geom = default_geometry(spec, block_bytes, strip_bytes)
                cfg = config.with_overrides(gateway_bandwidth_bps=float(value))
            thr = simulate_node_recovery(spec, cfg, stripes, geom)
            row["recovery_throughput_mibps"] = f"{thr / MiB:.6f}"
        except (GeometryError, ParameterError) as e:
            row["error"] = str(e)
        rows.append(row)
    return rows


def sweep_to_csv(rows: list[dict]) -> str:
    out = io.StringIO()
    w = csv.writer(out)
    w.writerow(["variable", "value", "code", "recovery_throughput_MiBps", "error"])
    for row in rows:
        w.writerow([row["variable"], row["value"], row["code"],
                    row["recovery_throughput_mibps"], row["error"]])
    return out.getvalue()


def breakdown_to_csv(entries: list[tuple[str, RepairTimeline]]) -> str:
    out = io.StringIO()
    w = csv.writer(out)
    w.writerow(["code", "stage", "seconds"])
    for name, tl in entries:
        for stage in STAGES:
            w.writerow([name, stage, f"{tl.stage(stage):.6f}"])
        w.writerow([name, "access_overhead", f"{tl.access_overhead:.6f}"])
        w.writerow([name, "pipelined_total", f"{tl.pipelined_total:.6f}"])
        w.writerow([name, "sequential_total", f"{tl.sequential_total:.6f}"])
    return out.getvalue()
