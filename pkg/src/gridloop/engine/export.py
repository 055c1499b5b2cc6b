"""Record export: CSV groups, the decision log, and the replay header.

Formats are fixed so re-exporting the same record writes byte-identical
files; everything uses explicit float formats and '\\n' line endings.
"""

from __future__ import annotations

import csv
import json
import os

from ..config import GEN_IDS
from ..errors import ConfigError
from .simulation import SimulationRecord

_GEN_FIELDS = ("voltage_rms", "current_rms", "real_power",
               "reactive_power", "speed_rpm", "torque", "phase_deg",
               "field_voltage", "field_current")


def _fmt(value: float) -> str:
    return f"{value:.6f}"


def write_generators_csv(record: SimulationRecord, path: str) -> None:
    header = ["t"]
    for gid in GEN_IDS:
        header.extend(f"{gid}_{name}" for name in _GEN_FIELDS)
        header.append(f"{gid}_breaker_closed")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for frame in record.frames:
            row = [_fmt(frame.timestamp)]
            for gid in GEN_IDS:
                gen = frame.generators[gid]
                row.extend(_fmt(getattr(gen, name)) for name in _GEN_FIELDS)
                row.append("1" if gen.breaker_closed else "0")
            writer.writerow(row)


def write_load_bus_csv(record: SimulationRecord, path: str) -> None:
    relay_ids = sorted(record.frames[0].relays) if record.frames else []
    header = (["t", "voltage_rms", "current_rms", "frequency"]
              + [f"relay_{rid}" for rid in relay_ids])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for frame in record.frames:
            bus = frame.load_bus
            row = [_fmt(frame.timestamp), _fmt(bus.voltage_rms),
                   _fmt(bus.current_rms), _fmt(bus.frequency)]
            row.extend("1" if frame.relays[rid] else "0"
                       for rid in relay_ids)
            writer.writerow(row)


def write_decisions_csv(record: SimulationRecord, path: str) -> None:
    header = ["t"]
    for gid in GEN_IDS:
        header.extend([f"{gid}_excitation", f"{gid}_armature"])
    header.extend(["relay_commands", "breaker_commands", "sync_close",
                   "annotations"])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for frame, decision in zip(record.frames, record.decisions):
            row = [_fmt(frame.timestamp)]
            for gid in GEN_IDS:
                row.append(_fmt(decision.excitation_duty[gid]))
                row.append(_fmt(decision.armature_duty[gid]))
            row.append(",".join(f"{i}:{a}"
                                for i, a in decision.relay_commands))
            row.append(",".join(f"{i}:{a}"
                                for i, a in decision.breaker_commands))
            row.append(":".join(decision.sync_close)
                       if decision.sync_close else "")
            row.append(";".join(decision.annotations))
            writer.writerow(row)


def write_decision_log(record: SimulationRecord, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in record.decision_lines:
            fh.write(line)
            fh.write("\n")


def write_high_rate_csv(record: SimulationRecord, path: str,
                        channels: tuple[str, ...] | None = None) -> None:
    available = tuple(record.high_rate)
    if channels is None:
        channels = available
    unknown = [ch for ch in channels if ch not in record.high_rate]
    if unknown:
        raise ConfigError(
            f"unknown high-rate channels {', '.join(unknown)}; "
            f"recorded: {', '.join(available) or 'none'}")
    series = [record.high_rate[ch] for ch in channels]
    count = len(series[0]) if series else 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t"] + list(channels))
        for k in range(count):
            row = [f"{k * record.integration_dt_s:.7f}"]
            row.extend(f"{column[k]:.9g}" for column in series)
            writer.writerow(row)


def write_record_json(record: SimulationRecord, path: str) -> None:
    """Replay header: enough to re-run the scenario and compare digests."""
    doc = {
        "name": record.name,
        "seed": record.seed,
        "digest": record.digest,
        "control_period_s": record.control_period_s,
        "integration_dt_s": record.integration_dt_s,
        "frame_count": record.frame_count,
        "scenario": record.scenario_doc,
        "events": [
            {"t": ev.t, "kind": ev.kind, "params": ev.params,
             "source": ev.source}
            for ev in record.events],
        "energy": {
            "mechanical": record.energy.mechanical,
            "damping": record.energy.damping,
            "load": record.energy.load,
            "line_loss": record.energy.line_loss,
            "stator_loss": record.energy.stator_loss,
            "kinetic_start": record.energy.kinetic_start,
            "kinetic_end": record.energy.kinetic_end,
            "balance_error": record.energy.balance_error,
        },
        "kcl_max": record.kcl_max,
        "diagnostic": record.diagnostic,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def export_record(record: SimulationRecord, out_dir: str,
                  high_rate_channels: tuple[str, ...] | None = None) -> list[str]:
    """Write every export group; returns the paths written."""
    os.makedirs(out_dir, exist_ok=True)
    written = []

    def target(name: str) -> str:
        path = os.path.join(out_dir, name)
        written.append(path)
        return path

    write_generators_csv(record, target("generators.csv"))
    write_load_bus_csv(record, target("load_bus.csv"))
    write_decisions_csv(record, target("decisions.csv"))
    write_decision_log(record, target("decisions.log"))
    write_record_json(record, target("record.json"))
    if record.high_rate:
        write_high_rate_csv(record, target("high_rate.csv"),
                            high_rate_channels)
    return written
